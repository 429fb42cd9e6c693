"""
Helpers shared by all spikelab modules: subclass registry lookup by name, batching and minibatch order,
random generators with seed resolution, float and exact number formatting
"""
import logging
import os
from fractions import Fraction
from itertools import islice
from typing import TypeVar, Set, Tuple, Iterable, Optional, Union

import numpy as np

logger = logging.getLogger('spikelab')

T = TypeVar('T')

SEED_ENV_VAR = 'SPIKELAB_SEED'


def get_subclasses(cls, recursive=False):  # type: (T, bool) -> Set[T]
    """
    Gets all subclasses of given class
    Attention!!! Classes would be found only if they were imported before using this function
    :param cls: Class to get subclasses
    :param recursive: If flag is set, returns subclasses of subclasses and so on too
    :return: A set of subclasses
    """
    subclasses = set(cls.__subclasses__())

    if recursive:
        for sub_cls in subclasses.copy():
            subclasses.update(get_subclasses(sub_cls, recursive=True))

    return subclasses


def find_subclass_by_name(cls, name, kind):  # type: (T, str, str) -> T
    """
    Finds a registered subclass of cls, which has name in its names attribute.
    Lookup is case insensitive.
    :param cls: Registry base class
    :param name: Name to search
    :param kind: Human readable registry name for the error message
    :return: Subclass found
    :raises ValueError: If no subclass is registered with this name
    """
    if not isinstance(name, str):
        raise TypeError("%s name must be a string, got %s" % (kind, type(name).__name__))
    key = name.strip().lower()
    # Sorted by class name, so that lookup doesn't depend on set ordering
    for sub_cls in sorted(get_subclasses(cls, recursive=True), key=lambda c: c.__name__):
        if key in sub_cls.names:
            return sub_cls
    raise ValueError("%s with name '%s' doesn't exist" % (kind, name))


def batch(data, batch_size):  # type: (Iterable[T], int) -> Iterable[Tuple[T, ...]]
    """
    Splits Iterable data (can be a generator) into tuples with length less or equal to batch_size
    In fact, this function is reverse for itertools.chain(...)
    :param data: Iterable of any type
    :param batch_size: Expected maximum tuple size
    :return: Tuples with length <= batch_size
    """
    if type(batch_size) is not int:
        raise TypeError("batch_size must be positive integer")

    elif batch_size <= 0:
        raise ValueError("batch_size must be positive integer")

    it = iter(data)

    next_batch = tuple(islice(it, 0, batch_size))
    while len(next_batch) == batch_size:
        yield next_batch
        next_batch = tuple(islice(it, 0, batch_size))

    if next_batch:
        yield next_batch


def minibatch_indices(size, batch_size, rng=None):
    # type: (int, int, Optional[np.random.Generator]) -> Iterable[np.ndarray]
    """
    Yields index arrays covering range(size) in batches.
    If rng is given, order is a permutation drawn from it, sequential otherwise.
    :param size: Number of samples
    :param batch_size: Maximum batch size
    :param rng: Optional generator to shuffle with
    :return: Generator of int index arrays
    """
    order = rng.permutation(size) if rng is not None else np.arange(size)
    for i, indices in enumerate(batch(order.tolist(), batch_size)):
        logger.debug('Processing batch %d with size %d' % (i, len(indices)))
        yield np.asarray(indices, dtype=np.int64)


def make_rng(seed):  # type: (Optional[int]) -> np.random.Generator
    if seed is not None and (type(seed) is not int or seed < 0):
        raise ValueError("seed must be a non negative integer")
    return np.random.default_rng(seed)


def resolve_seed(explicit=None, fallback=None):  # type: (Optional[int], Optional[int]) -> int
    """
    Picks a seed: explicit value first, then SPIKELAB_SEED environment variable, then fallback, then 0
    :param explicit: Seed given directly (for instance, by a command line flag)
    :param fallback: Seed given by a config file
    :return: Integer seed
    """
    if explicit is not None:
        return explicit
    env_value = os.environ.get(SEED_ENV_VAR)
    if env_value:
        try:
            seed = int(env_value)
        except ValueError:
            raise ValueError("%s must be an integer, got '%s'" % (SEED_ENV_VAR, env_value))
        logger.warning('Using seed %d from %s' % (seed, SEED_ENV_VAR))
        return seed
    return fallback if fallback is not None else 0


def format_float(value):  # type: (float) -> str
    """
    Renders float with the shortest decimal representation, which parses back to the same 64-bit value
    """
    return repr(float(value))


def format_exact(value):  # type: (Union[Fraction, int]) -> str
    """
    Renders a rational number without precision loss.
    Integers and terminating decimals are written as decimals, everything else as "p/q".
    :param value: Fraction or int
    :return: String, parseable with parse_exact()
    """
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)

    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return '%d/%d' % (value.numerator, value.denominator)

    digits = max(twos, fives)
    scaled = value * 10 ** digits
    sign = '-' if scaled < 0 else ''
    integer = abs(scaled.numerator)
    text = str(integer).rjust(digits + 1, '0')
    return '%s%s.%s' % (sign, text[:-digits], text[-digits:])


def parse_exact(text):  # type: (str) -> Fraction
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError("'%s' is not an exact number" % text)
