"""
Serializers for pipeline artifacts. ``python`` turns domain objects into
plain dicts and lists; ``json``, ``csv`` and ``geojson`` write them out.
"""
