"""
This file contains discretized LIF / IF neuron dynamics:
    U[n] = beta * V[n-1] + (1 - beta) * I[n]     (LIF)
    U[n] = V[n-1] + I[n]                         (IF)
    S[n] = H(U[n] - v_th), H(0) = 1
    V[n] = U[n] - v_th * S[n]                    (subtract reset)
"""
import logging
from typing import Tuple, Type, Union

import numpy as np

from .exceptions import DomainError, ShapeError
from .numcore import Tensor, add, arctan_surrogate, as_tensor, scale, select, smooth_spike, spike, stack, sub
from .types import TArrayLike, TNeuronKind
from .utils import find_subclass_by_name

__all__ = ['NeuronParams', 'NeuronState', 'AbstractChargeFunction', 'LIFChargeFunction', 'IFChargeFunction',
           'charge', 'fire_reset', 'run_sequence', 'surrogate_grad', 'firing_rate']

logger = logging.getLogger('spikelab')


class AbstractChargeFunction(object):
    """
    Membrane charge rule. Subclasses are looked up by name, like 'lif' or 'if'.
    """
    names = set()

    def charge(self, beta, v_prev, current):  # type: (float, Tensor, Tensor) -> Tensor
        """
        Computes U[n] from V[n-1] and I[n]
        :param beta: Decay factor
        :param v_prev: Membrane potential after previous step
        :param current: Input current of this step
        :return: Charged membrane potential
        """
        raise NotImplementedError("%s must implement charge method" % self.__class__.__name__)

    @classmethod
    def get_charge_function_by_name(cls, name):  # type: (str) -> Type[AbstractChargeFunction]
        return find_subclass_by_name(cls, name, 'Neuron kind')

    @property
    def name(self):  # type: () -> str
        return sorted(self.names)[0]


class LIFChargeFunction(AbstractChargeFunction):
    names = {'lif'}

    def charge(self, beta, v_prev, current):
        return add(scale(v_prev, beta), scale(current, 1.0 - beta))


class IFChargeFunction(AbstractChargeFunction):
    names = {'if'}

    def charge(self, beta, v_prev, current):
        return add(v_prev, current)


class NeuronParams(object):
    """
    Immutable neuron hyperparameters. Use replace() to get a modified copy.
    """
    __slots__ = ['beta', 'v_th', 'kind', 'surrogate_alpha']

    def __init__(self, beta=0.25, v_th=1.0, kind='lif', surrogate_alpha=2.0):
        # type: (float, float, TNeuronKind, float) -> None
        if isinstance(kind, AbstractChargeFunction):
            kind = kind.name
        charge_cls = AbstractChargeFunction.get_charge_function_by_name(kind)

        beta, v_th, surrogate_alpha = float(beta), float(v_th), float(surrogate_alpha)
        if not 0 <= beta < 1:
            raise ValueError("beta must be in range [0, 1), got %r" % beta)
        if not v_th > 0:
            raise ValueError("v_th must be positive, got %r" % v_th)
        if not surrogate_alpha > 0:
            raise ValueError("surrogate_alpha must be positive, got %r" % surrogate_alpha)

        object.__setattr__(self, 'beta', beta)
        object.__setattr__(self, 'v_th', v_th)
        object.__setattr__(self, 'kind', charge_cls().name)
        object.__setattr__(self, 'surrogate_alpha', surrogate_alpha)

    def __setattr__(self, key, value):
        raise AttributeError("NeuronParams is immutable, use replace()")

    def replace(self, **changes):  # type: (**Union[float, str]) -> NeuronParams
        values = {name: getattr(self, name) for name in self.__slots__}
        values.update(changes)
        return NeuronParams(**values)

    @property
    def charge_function(self):  # type: () -> AbstractChargeFunction
        return AbstractChargeFunction.get_charge_function_by_name(self.kind)()

    def _key(self):
        return tuple(getattr(self, name) for name in self.__slots__)

    def __eq__(self, other):
        return isinstance(other, NeuronParams) and self._key() == other._key()

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return 'NeuronParams(beta=%r, v_th=%r, kind=%r, surrogate_alpha=%r)' % self._key()


def charge(params, v_prev, i_n):
    # type: (NeuronParams, Union[Tensor, TArrayLike], Union[Tensor, TArrayLike]) -> Tensor
    v_prev, i_n = as_tensor(v_prev), as_tensor(i_n)
    if v_prev.shape != i_n.shape:
        raise ShapeError("Membrane shape %s doesn't match input current shape %s" % (v_prev.shape, i_n.shape))
    return params.charge_function.charge(params.beta, v_prev, i_n)


def fire_reset(params, u_n, smooth=False):
    # type: (NeuronParams, Union[Tensor, TArrayLike], bool) -> Tuple[Tensor, Tensor]
    """
    Fires where U >= v_th and subtracts the threshold from fired elements
    :param params: NeuronParams
    :param u_n: Charged membrane potential U[n]
    :param smooth: If flag is set, smooth arctan primitive is used instead of Heaviside step
    :return: A tuple (spikes S[n], membrane potential V[n])
    """
    u_n = as_tensor(u_n)
    fire = smooth_spike if smooth else spike
    spikes = fire(u_n, params.v_th, params.surrogate_alpha)
    return spikes, sub(u_n, scale(spikes, params.v_th))


class NeuronState(object):
    """
    Membrane potential of a neuron population, carried between timesteps
    """
    __slots__ = ['params', 'v']

    def __init__(self, params, shape):  # type: (NeuronParams, Tuple[int, ...]) -> None
        self.params = params
        self.v = Tensor(np.zeros(shape))

    def step(self, current, smooth=False):  # type: (Tensor, bool) -> Tensor
        u = charge(self.params, self.v, current)
        spikes, self.v = fire_reset(self.params, u, smooth=smooth)
        return spikes


def run_sequence(params, currents, smooth=False):
    # type: (NeuronParams, Union[Tensor, TArrayLike], bool) -> Tuple[Tensor, Tensor]
    """
    Runs neuron dynamics over the leading (time) axis, starting from V[0] = 0.
    Every LIF layer of the networks goes through this function.
    :param params: NeuronParams
    :param currents: Input currents of shape [T, ...]
    :param smooth: If flag is set, spikes are replaced with the smooth arctan primitive
    :return: A tuple (spikes [T, ...], membrane trace V[n] after reset [T, ...])
    """
    currents = as_tensor(currents)
    if currents.ndim == 0 or currents.shape[0] == 0:
        raise ValueError("currents must have at least one timestep, got shape %s" % (currents.shape,))

    state = NeuronState(params, currents.shape[1:])
    spikes, trace = [], []
    for n in range(currents.shape[0]):
        spikes.append(state.step(select(currents, n), smooth=smooth))
        trace.append(state.v)
    return stack(spikes), stack(trace)


def surrogate_grad(u, params):  # type: (Union[Tensor, TArrayLike], NeuronParams) -> Tensor
    """
    dS/dU used in backward: alpha / (2 * (1 + (pi * alpha * (u - v_th) / 2) ** 2)), peak alpha / 2 at u = v_th
    """
    return Tensor(arctan_surrogate(as_tensor(u).data, params.v_th, params.surrogate_alpha))


def firing_rate(spikes):  # type: (Union[Tensor, TArrayLike]) -> float
    """
    Mean spike value over all elements and timesteps
    :param spikes: Binary spike tensor (Tensor, SpikeTensor or array)
    :return: Float in [0, 1]
    :raises DomainError: If spikes contain values other than 0 and 1
    """
    values = getattr(spikes, 'values', None)
    values = values if values is not None else as_tensor(spikes).data
    if values.size == 0:
        raise ValueError("Can't compute firing rate of an empty tensor")
    if not np.isin(values, (0.0, 1.0)).all():
        raise DomainError("firing_rate expects binary spikes, got values %s"
                          % np.unique(values[~np.isin(values, (0.0, 1.0))])[:5])
    return float(values.mean())
