"""Error taxonomy shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent caller input (e.g. dimension mismatch)."""


class ValidationError(ValueError):
    """Configuration violates the schema or an invariant."""


class NumericalError(RuntimeError):
    """Linear-algebra failure that survived jitter escalation."""


class IngestionError(RuntimeError):
    """Dataset ingestion produced no usable records."""


class UnsupportedSizeError(ValueError):
    """Problem instance exceeds the exhaustive-computation limit."""
