class AdapterError(Exception):
    """Base class for adapter failures."""


class TrainingError(AdapterError):
    """Raised when a training set cannot support the requested head."""


class DecodingError(AdapterError):
    """Raised when constrained decoding cannot produce candidates."""
