class ValidationError(ValueError):
    """Malformed input: bad indices, count mismatches, unparsable files."""


class NumericError(RuntimeError):
    """A computation produced a non-finite or otherwise unusable result."""
