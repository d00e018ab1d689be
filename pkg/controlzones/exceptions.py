class ControlZonesError(Exception):
    """A base exception for other controlzones-related errors."""
    pass


class ConfigurationError(ControlZonesError):
    """Raised during configuration errors"""
    pass


class ValidationError(ControlZonesError):
    """
    Raised when an invalid value is encountered
    """
    def __init__(self, msg_or_code, field=None, **kwargs):
        self.field = field
        self.msg_or_code = msg_or_code
        if self.field:
            msg = self.field.get_error_message(msg_or_code,
                                               default=msg_or_code,
                                               **kwargs)
        else:
            msg = msg_or_code
        super(ValidationError, self).__init__(msg)


class InvalidGeometry(ControlZonesError):
    """
    Raised when a TAZ polygon cannot be parsed or is degenerate.
    """
    def __init__(self, taz_id, reason=''):
        self.taz_id = taz_id
        msg = 'TAZ {} has an invalid geometry'.format(taz_id)
        if reason:
            msg = '{}: {}'.format(msg, reason)
        super(InvalidGeometry, self).__init__(msg)


class PairError(ControlZonesError):
    """
    Base for errors that concern an (origin, destination) pair of TAZ ids.
    """
    template = 'problem with pair {0}'

    def __init__(self, pair, detail=''):
        self.pair = tuple(pair)
        msg = self.template.format(self.pair)
        if detail:
            msg = '{} ({})'.format(msg, detail)
        super(PairError, self).__init__(msg)


class IncompleteMatrix(PairError):
    """
    Raised when a user-supplied distance matrix misses a pair
    """
    template = 'distance matrix has no entry for pair {0}'


class AsymmetricMatrix(PairError):
    """
    Raised when a user-supplied distance matrix disagrees with itself
    """
    template = 'distance matrix is not symmetric for pair {0}'


class MissingDistance(PairError):
    """
    Raised when a flow references a TAZ that has no distance row
    """
    template = 'no distance available for flow pair {0}'


class ZeroDistance(PairError):
    """
    Raised when a zero distance reaches the geographic quality function
    """
    template = 'zero distance between {0} survived flooring'


class UnreadableFile(ControlZonesError):
    """
    Raised when an input file cannot be opened or decoded
    """
    pass


class HeaderMismatch(ControlZonesError):
    """
    Raised when a CSV header differs from the documented one
    """
    def __init__(self, path, expected, found):
        self.path = path
        self.expected = tuple(expected)
        self.found = tuple(found)
        msg = '{}: expected header {} but found {}'.format(
            path, ','.join(self.expected), ','.join(self.found))
        super(HeaderMismatch, self).__init__(msg)


class EmptyNetwork(ControlZonesError):
    """
    Raised when a quality function or detection runs on a network without
    any weight (2m = 0)
    """
    pass


class UnknownNode(ControlZonesError):
    """
    Raised when a TAZ id is not part of the network or partition
    """
    pass


class UnknownZone(ControlZonesError):
    """
    Raised when a zone id is not part of the partition
    """
    pass


class IslandNoNeighbors(ControlZonesError):
    """
    Raised when a fragment has no polygon neighbors at all. Repair reports
    such fragments and leaves them untouched.
    """
    def __init__(self, zone_id, members=()):
        self.zone_id = zone_id
        self.members = tuple(members)
        msg = 'zone {} has no polygon neighbors'.format(zone_id)
        super(IslandNoNeighbors, self).__init__(msg)


class NonConvergence(ControlZonesError):
    """
    Raised when contiguity repair exceeds its pass bound
    """
    pass


class Infeasible(ControlZonesError):
    """
    Raised when a merge target cannot be reached under contiguity, or
    is out of reach of the exhaustive merge
    """
    pass


class ArtifactError(ControlZonesError):
    """
    Raised when a required artifact is missing or unreadable
    """
    pass
