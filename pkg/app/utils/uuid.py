"""Time-ordered experiment identifiers (UUIDv7 via uuid_utils)."""
from uuid_utils import uuid7


def experiment_id(command: str) -> str:
    """``<command>-<uuid7>``; ids sort by creation time."""
    return f"{command}-{uuid7()}"
