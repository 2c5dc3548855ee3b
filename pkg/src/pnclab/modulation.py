"""Square QAM constellations with Gray labeling and unit average energy.

Labels are bit tuples ``(b1, ..., bm)`` read MSB-first into the point index,
so index 0 always carries the all-zero label.  Every constellation also keeps
its unnormalized integer-lattice coordinates: fade-state and coincidence
computations run on the lattice, where distinct positions are rational with
small denominators and tolerance tests cannot misfire.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gf2 import BitVector

LABELING_VERSION = "gray-v1"

_GRAY_AXIS = {(0, 0): -3, (0, 1): -1, (1, 1): 1, (1, 0): 3}


@dataclass(frozen=True)
class Constellation:
    """2^m-point QAM map from m-bit labels to complex symbols."""

    name: str
    bits_per_symbol: int
    points: np.ndarray          # unit average energy, indexed by label int
    lattice_points: np.ndarray  # odd-integer grid, points = lattice / scale
    scale: float
    labeling_version: str = LABELING_VERSION

    @property
    def size(self) -> int:
        return 1 << self.bits_per_symbol

    def label_index(self, bits) -> int:
        m = self.bits_per_symbol
        seq = bits.to_bits() if isinstance(bits, BitVector) else tuple(bits)
        if len(seq) != m:
            raise ValueError(f"label needs {m} bits, got {len(seq)}")
        return sum(b << (m - 1 - j) for j, b in enumerate(seq))

    def index_label(self, idx: int) -> tuple[int, ...]:
        m = self.bits_per_symbol
        return tuple((idx >> (m - 1 - j)) & 1 for j in range(m))


def make_constellation(name: str) -> Constellation:
    """Build ``qam4`` or ``qam16`` with the fixed Gray labeling."""
    key = name.lower()
    if key == "qam4":
        # label (b1, b2) -> sign of (real, imag); 00 -> (+1+1j)
        lattice = np.array(
            [complex(1 - 2 * b1, 1 - 2 * b2) for b1 in (0, 1) for b2 in (0, 1)]
        )
        scale = np.sqrt(2.0)
        m = 2
    elif key == "qam16":
        # (b1, b2) Gray-codes the real axis, (b3, b4) the imaginary axis
        lattice = np.array(
            [
                complex(_GRAY_AXIS[(b1, b2)], _GRAY_AXIS[(b3, b4)])
                for b1 in (0, 1)
                for b2 in (0, 1)
                for b3 in (0, 1)
                for b4 in (0, 1)
            ]
        )
        scale = np.sqrt(10.0)
        m = 4
    else:
        raise ValueError(f"unknown modulation {name!r}; expected qam4 or qam16")
    return Constellation(
        name=key,
        bits_per_symbol=m,
        points=lattice / scale,
        lattice_points=lattice,
        scale=float(scale),
    )


def modulate(c: Constellation, w) -> complex:
    """Map an m-bit label to its constellation point."""
    return complex(c.points[c.label_index(w)])


def modulate_indices(c: Constellation, idx: np.ndarray) -> np.ndarray:
    return c.points[idx]


def demodulate_hard(c: Constellation, y: complex) -> BitVector:
    """Label of the Euclidean-nearest point; ties break to the lowest index."""
    idx = int(np.argmin(np.abs(np.asarray(y) - c.points) ** 2))
    return BitVector.from_bits(c.index_label(idx))


def demodulate_hard_indices(c: Constellation, y: np.ndarray) -> np.ndarray:
    d2 = np.abs(np.asarray(y).reshape(-1, 1) - c.points[None, :]) ** 2
    return d2.argmin(axis=1)
