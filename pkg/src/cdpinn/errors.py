"""Exception classes shared across the package."""


class CdPinnError(Exception):
    """Base class; the CLI maps any subclass to a nonzero exit status."""


class ConfigError(CdPinnError, ValueError):
    pass


class ShapeError(CdPinnError, ValueError):
    pass


class DomainError(CdPinnError, ValueError):
    pass


class SamplingError(CdPinnError, ValueError):
    pass


class NumericError(CdPinnError, ArithmeticError):
    def __init__(self, message, layer=None, epoch=None):
        parts = [message]
        if layer is not None:
            parts.append(f"layer={layer}")
        if epoch is not None:
            parts.append(f"epoch={epoch}")
        super().__init__(" ".join(parts))
        self.layer = layer
        self.epoch = epoch
