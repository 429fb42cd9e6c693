from typing import Union, Tuple, Sequence, Optional, Dict, Any

import numpy as np

TShape = Tuple[int, ...]
TArrayLike = Union[np.ndarray, Sequence[float], float]
TSeed = Optional[int]

TNeuronKind = Union[str, 'AbstractChargeFunction']  # noqa: F821
TTokenMixer = Union[str, 'AbstractTokenMixer']  # noqa: F821
TShortcutKind = Union[str, 'AbstractShortcut']  # noqa: F821
TPatchEmbedKind = Union[str, 'AbstractPatchEmbed']  # noqa: F821
TOptimizerKind = Union[str, 'AbstractOptimizer']  # noqa: F821

TStateDict = Dict[str, np.ndarray]
TJson = Dict[str, Any]


class LayerDescriptor(object):
    """
    Resolved geometry of a single layer, passed to energy.flops().
    Fields not used by a kind stay None.
    """
    __slots__ = ['kind', 'in_channels', 'out_channels', 'kernel_size', 'groups', 'out_height', 'out_width',
                 'tokens', 'd_in', 'd_out', 'rows', 'inner', 'cols']

    KINDS = {'conv', 'dwc', 'linear', 'matmul', 'pool', 'lif', 'identity'}

    def __init__(self, kind, **fields):  # type: (str, **Any) -> None
        if kind not in self.KINDS:
            raise ValueError("Layer kind '%s' doesn't exist" % kind)
        self.kind = kind
        for name in self.__slots__[1:]:
            setattr(self, name, fields.pop(name, None))
        if fields:
            raise TypeError("Unexpected descriptor fields: %s" % ', '.join(sorted(fields)))
        if self.groups is None and kind in {'conv', 'dwc'}:
            self.groups = self.in_channels if kind == 'dwc' else 1

    @classmethod
    def conv(cls, in_channels, out_channels, kernel_size, out_height, out_width, groups=1):
        # type: (int, int, int, int, int, int) -> LayerDescriptor
        kind = 'dwc' if groups > 1 and groups == in_channels == out_channels else 'conv'
        return cls(kind, in_channels=in_channels, out_channels=out_channels, kernel_size=kernel_size,
                   out_height=out_height, out_width=out_width, groups=groups)

    @classmethod
    def linear(cls, d_in, d_out, tokens=1):  # type: (int, int, int) -> LayerDescriptor
        return cls('linear', d_in=d_in, d_out=d_out, tokens=tokens)

    @classmethod
    def matmul(cls, rows, inner, cols):  # type: (int, int, int) -> LayerDescriptor
        return cls('matmul', rows=rows, inner=inner, cols=cols)

    def require(self, *names):  # type: (*str) -> None
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise ValueError("Layer descriptor '%s' has unresolved fields: %s" % (self.kind, ', '.join(missing)))

    def __repr__(self):
        fields = ', '.join('%s=%r' % (name, getattr(self, name)) for name in self.__slots__[1:]
                           if getattr(self, name) is not None)
        return '<LayerDescriptor %s: %s>' % (self.kind, fields)
