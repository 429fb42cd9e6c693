"""
Exceptions raised by spikelab. Every class also derives from the builtin it specializes,
so callers validating arguments can keep catching ValueError / RuntimeError.
"""
from typing import Optional

__all__ = ['SpikeLabError', 'ShapeError', 'DomainError', 'UnboundedResponseError', 'DegenerateEstimateError',
           'ConfigError', 'DivergenceError']


class SpikeLabError(Exception):
    pass


class ShapeError(SpikeLabError, ValueError):
    pass


class DomainError(SpikeLabError, ValueError):
    """
    Raised when a tensor carries values its consumer can't accept:
    non-binary spikes where binary ones are required, ternary spikes entering an embed block and so on.
    """
    pass


class UnboundedResponseError(SpikeLabError, ValueError):
    pass


class DegenerateEstimateError(SpikeLabError, ValueError):
    pass


class ConfigError(SpikeLabError, ValueError):
    def __init__(self, message, lineno=None):  # type: (str, Optional[int]) -> None
        self.message = message
        self.lineno = lineno
        super(ConfigError, self).__init__(str(self))

    def __str__(self):
        if self.lineno is None:
            return self.message
        return "line %d: %s" % (self.lineno, self.message)


class DivergenceError(SpikeLabError, RuntimeError):
    def __init__(self, epoch, batch_index, loss):  # type: (int, int, float) -> None
        self.epoch = epoch
        self.batch_index = batch_index
        self.loss = loss
        super(DivergenceError, self).__init__(
            "Training diverged at epoch %d, batch %d: loss is %r" % (epoch, batch_index, loss))
