class AbortedByCommand(Exception):
    """Stop or emergency-stop arrived while a cycle was running."""


class AllNodesUnresponsive(Exception):
    """Every enabled well timed out within one layer; cycle cut short."""
