from setuptools import setup

setup(
    name='python-controlzones',
    version='0.1dev',
    test_suite='controlzones.test',
    packages=[
        'controlzones',
        'controlzones.serializers',
        'controlzones.utils',
    ],
    python_requires='>=3.11',
    install_requires=[
        'numpy',
        'scipy',
        'shapely>=2',
        'networkx',
        'scikit-learn',
        'pygit2',
        'python-dateutil',
        'decorator',
    ],
    entry_points={
        'console_scripts': ['controlzones=controlzones.cli:main'],
    },
    long_description=open('README.rst').read(),
)
