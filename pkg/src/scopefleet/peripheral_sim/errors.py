class PeripheralUnreachable(Exception):
    """No reply from the controller within the command timeout."""


class SafetyTripped(Exception):
    """Command rejected: shutoff latch is engaged."""


class TravelLimitExceeded(Exception):
    """Move would leave the configured travel range."""
