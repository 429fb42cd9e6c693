"""
This file contains number of functions to handle different numpy versions compatibility
"""
from typing import Tuple

import numpy as np


def _strided_window_view(x, window_shape, axis):
    # type: (np.ndarray, Tuple[int, ...], Tuple[int, ...]) -> np.ndarray
    # numpy before 1.20 has no sliding_window_view
    axis = tuple(a % x.ndim for a in axis)
    out_shape = list(x.shape)
    for a, w in zip(axis, window_shape):
        if x.shape[a] < w:
            raise ValueError("window shape cannot be larger than input array shape")
        out_shape[a] = x.shape[a] - w + 1
    out_shape.extend(window_shape)
    strides = x.strides + tuple(x.strides[a] for a in axis)
    return np.lib.stride_tricks.as_strided(x, shape=tuple(out_shape), strides=strides, writeable=False)


def sliding_window_view(x, window_shape, axis):
    # type: (np.ndarray, Tuple[int, ...], Tuple[int, ...]) -> np.ndarray
    """
    Read-only view of all windows of window_shape over given axes.
    Window axes are appended to the end of the result shape.
    :param x: Source array
    :param window_shape: Window extent for every axis in axis
    :param axis: Axes to slide over
    :return: numpy view, no data is copied
    """
    try:
        # For numpy 1.20+
        from numpy.lib.stride_tricks import sliding_window_view as _view
    except ImportError:
        return _strided_window_view(x, tuple(window_shape), tuple(axis))
    return _view(x, tuple(window_shape), axis=tuple(axis))
