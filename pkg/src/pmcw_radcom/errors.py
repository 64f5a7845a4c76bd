class ConfigurationError(ValueError):
    """A parameter set violates a structural constraint."""


class AcquisitionError(RuntimeError):
    """Preamble detection or an estimator failed on the received samples."""


class IqFormatError(ValueError):
    pass
