"""Figure rendering for fiberlaser run artifacts.

These scripts are read-only consumers of the documented CSV schemas; they
never recompute physics.  Every renderer runs headless and raises
:class:`SchemaError` (exit code 1 from the CLI) on malformed input.
"""

__version__ = "0.1.0"


class SchemaError(ValueError):
    """Input CSV does not match the documented schema."""
