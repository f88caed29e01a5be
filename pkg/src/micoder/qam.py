"""Gray-mapped square M-QAM baseline and its closed-form SER."""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import SpecError

SUPPORTED_ORDERS = (4, 16, 64)


@dataclass
class QamConstellation:
    order: int
    points: np.ndarray  # complex (M,), unit average energy
    labels: np.ndarray  # grid position (row, col) per message index


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def qam_table(order: int) -> QamConstellation:
    """Square QAM grid at odd integer coordinates, unit average energy.

    Message index m carries the bit label: high bits Gray-code the
    in-phase level, low bits the quadrature level, so grid neighbors
    differ in exactly one bit.
    """
    if order not in SUPPORTED_ORDERS:
        raise SpecError(f"unsupported QAM order {order} (need one of {SUPPORTED_ORDERS})")
    side = int(round(math.sqrt(order)))
    bits_per_axis = side.bit_length() - 1
    levels = np.arange(side) * 2.0 - (side - 1)  # odd integers, ascending
    # gray value g at grid position i  =>  label bits g map back to level i
    pos_of_gray = np.empty(side, dtype=int)
    for i in range(side):
        pos_of_gray[_gray(i)] = i

    points = np.empty(order, dtype=complex)
    labels = np.empty((order, 2), dtype=int)
    for m in range(order):
        gi = m >> bits_per_axis
        gq = m & (side - 1)
        row, col = pos_of_gray[gi], pos_of_gray[gq]
        points[m] = levels[row] + 1j * levels[col]
        labels[m] = (row, col)
    mean_energy = np.mean(np.abs(points) ** 2)
    return QamConstellation(order, points / np.sqrt(mean_energy), labels)


def qam_modulate(messages, table: QamConstellation) -> np.ndarray:
    return table.points[np.asarray(messages)]


def qam_detect(y, table: QamConstellation):
    """Minimum-distance detection; argmin breaks ties at the lowest index."""
    y = np.atleast_1d(np.asarray(y))
    d = np.abs(y[:, None] - table.points[None, :])
    return np.argmin(d, axis=1)


def q_function(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def qam_ser_theoretical(order: int, noise_variance: float) -> float:
    """Exact square-QAM symbol error probability at unit symbol energy.

    `noise_variance` is the total complex noise variance sigma^2.
    P = 1 - (1 - p)^2 with p = 2 (1 - 1/sqrt(M)) Q(sqrt(3 / ((M-1) sigma^2))).
    """
    if order not in SUPPORTED_ORDERS:
        raise SpecError(f"unsupported QAM order {order}")
    if noise_variance <= 0:
        raise SpecError("noise variance must be > 0")
    side = math.sqrt(order)
    p = 2.0 * (1.0 - 1.0 / side) * q_function(math.sqrt(3.0 / ((order - 1) * noise_variance)))
    return 1.0 - (1.0 - p) ** 2
