"""Physical link: fading, noise, pilot estimation, detection, and recovery.

Conventions: channel entries are unit-variance circularly-symmetric complex
Gaussians; ``noise_var`` is the total complex noise variance (half per real
dimension); LLRs are ``log(P(bit=0)/P(bit=1))``, so a negative value decides
bit 1.  With unit-energy constellations and m information bits per symbol
per terminal, ``noise_var = 1 / (m * Eb/N0)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gf2 import BitMatrix, BitVector, InconsistentSystemError, inverse_f2, solve
from .mapping import ncv_table, superimpose
from .modulation import Constellation

PILOT_SYMBOL = (1.0 + 1.0j) / math.sqrt(2.0)


def noise_variance(ebn0_db: float, bits_per_symbol: int) -> float:
    return 1.0 / (bits_per_symbol * 10.0 ** (ebn0_db / 10.0))


def draw_channel(rng: np.random.Generator, n_aps: int = 2, n_terminals: int = 2) -> np.ndarray:
    h = rng.standard_normal((n_aps, n_terminals)) + 1j * rng.standard_normal((n_aps, n_terminals))
    return h / math.sqrt(2.0)


def _noise(rng: np.random.Generator, shape, noise_var: float) -> np.ndarray:
    if noise_var == 0.0:
        return np.zeros(shape, dtype=complex)
    s = math.sqrt(noise_var / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def transmit(H: np.ndarray, noise_var: float, symbols: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Superimpose all terminals' symbol streams at every AP and add noise.

    ``symbols`` has shape (terminals, uses); the result has shape (APs, uses).
    """
    H = np.asarray(H, dtype=complex)
    symbols = np.asarray(symbols, dtype=complex)
    return H @ symbols + _noise(rng, (H.shape[0], symbols.shape[1]), noise_var)


def transmit_pilots(H: np.ndarray, noise_var: float, pilot_len: int, rng: np.random.Generator) -> np.ndarray:
    """Time-orthogonal pilot phase: each terminal sends alone for pilot_len uses.

    Returns shape (APs, terminals, pilot_len).
    """
    H = np.asarray(H, dtype=complex)
    n_aps, n_terminals = H.shape
    y = H[:, :, None] * PILOT_SYMBOL + _noise(rng, (n_aps, n_terminals, pilot_len), noise_var)
    return y


def estimate_channel(y_pilots: np.ndarray, pilot_len: int) -> np.ndarray:
    """Least-squares channel estimate from time-orthogonal pilots.

    Per-coefficient error variance is noise_var / pilot_len.
    """
    if pilot_len < 1:
        raise ValueError("pilot_len must be >= 1")
    return y_pilots.mean(axis=2) * np.conj(PILOT_SYMBOL) / abs(PILOT_SYMBOL) ** 2


def detect_ncv(
    y,
    h: tuple[complex, complex],
    matrix: BitMatrix,
    constellation: Constellation,
    noise_var: float,
    max_log: bool = False,
) -> np.ndarray:
    """Per-bit L-values of the network-coded vector from one AP's samples.

    Sums the Gaussian likelihood over every joint-message hypothesis mapped
    to each bit value (uniform priors).  A matrix row mapping every
    hypothesis to one side yields an infinite L-value on that bit, which is
    the flag for a degenerate row.  ``max_log`` switches to the max-log
    approximation.  Accepts a scalar or a 1-D sample array; returns (t,) or
    (samples, t).
    """
    scalar = np.isscalar(y) or np.asarray(y).ndim == 0
    ys = np.atleast_1d(np.asarray(y, dtype=complex))
    sc = superimpose(constellation, h)
    table = ncv_table(matrix, constellation.bits_per_symbol)
    t = matrix.n_rows
    metric = -np.abs(ys[:, None] - sc.points[None, :]) ** 2 / noise_var
    bits = ((table[:, None] >> np.arange(t)[None, :]) & 1).astype(float)
    out = np.empty((len(ys), t))
    if max_log:
        for i in range(t):
            side = bits[:, i] == 1
            if not side.any():
                out[:, i] = np.inf
            elif side.all():
                out[:, i] = -np.inf
            else:
                out[:, i] = metric[:, ~side].max(axis=1) - metric[:, side].max(axis=1)
    else:
        # row maxima cancel in the ratio, so one exp and two mask products
        # evaluate the exact sum form
        peak = metric.max(axis=1, keepdims=True)
        e = np.exp(metric - peak)
        with np.errstate(divide="ignore"):
            out = np.log(e @ (1.0 - bits)) - np.log(e @ bits)
    return out[0] if scalar else out


def hard_ncv(y, h: tuple[complex, complex], matrix: BitMatrix, constellation: Constellation) -> np.ndarray:
    """Zero-noise limit of detect_ncv: NCV of the nearest superposition point."""
    ys = np.atleast_1d(np.asarray(y, dtype=complex))
    sc = superimpose(constellation, h)
    table = ncv_table(matrix, constellation.bits_per_symbol)
    idx = np.abs(ys[:, None] - sc.points[None, :]).argmin(axis=1)
    return table[idx]


def llrs_to_bits(llrs: np.ndarray) -> np.ndarray:
    """Hard decisions: negative L-value means bit 1."""
    return (np.asarray(llrs) < 0).astype(np.int64)


def cpu_recover(
    x: BitVector,
    g: BitMatrix,
    llrs=None,
) -> tuple[BitVector, int]:
    """Solve the stacked mapping equations for the joint message.

    For a square invertible stack this is plain inversion.  Overdetermined
    stacks can carry conflicting equations after detection errors; those are
    resolved by discarding the lowest-|L-value| equations until the system
    is consistent.  Returns the message and the number of dropped equations.
    """
    if g.n_rows != x.length:
        raise ValueError("stack height does not match NCV length")
    weights = [math.inf] * g.n_rows if llrs is None else [abs(float(v)) for v in llrs]
    if len(weights) != g.n_rows:
        raise ValueError("one L-value per stacked equation is required")
    active = list(range(g.n_rows))
    dropped = 0
    while True:
        sub = BitMatrix.from_row_ints([g.rows[r] for r in active], g.n_cols)
        rhs = BitVector(len(active), sum(((x.value >> r) & 1) << i for i, r in enumerate(active)))
        try:
            return solve(sub, rhs), dropped
        except InconsistentSystemError:
            victim = min(active, key=lambda r: (weights[r], -r))
            active.remove(victim)
            dropped += 1


def recover_batch(g: BitMatrix, x_bits: np.ndarray) -> np.ndarray:
    """Vectorized recovery for a square invertible stack.

    ``x_bits`` has shape (samples, mu); returns message bits of equal shape,
    component k in column k.
    """
    if g.n_rows != g.n_cols:
        raise ValueError("recover_batch needs a square stack")
    ginv = inverse_f2(g)
    rows = np.array(
        [[(ginv.rows[r] >> c) & 1 for c in range(ginv.n_cols)] for r in range(ginv.n_rows)],
        dtype=np.int64,
    )
    return (np.asarray(x_bits) @ rows.T) % 2


def comp_ideal(ys: np.ndarray, H: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Centralized joint maximum-likelihood detection over all symbol pairs.

    ``ys`` is (APs, uses).  Returns per-use joint indices (terminal-1 label
    in the high bits), minimizing the stacked residual norm exhaustively.
    """
    m = constellation.bits_per_symbol
    size = 1 << m
    idx = np.arange(size * size)
    s1 = constellation.points[idx >> m]
    s2 = constellation.points[idx & (size - 1)]
    hyp = H[:, 0][:, None] * s1[None, :] + H[:, 1][:, None] * s2[None, :]
    cost = np.abs(ys[:, :, None] - hyp[:, None, :]) ** 2
    return cost.sum(axis=0).argmin(axis=1)


@dataclass(frozen=True)
class QuantizerSpec:
    """Uniform mid-rise scalar quantizer with clipping."""

    bits: int = 2
    clip: float = 8.0

    def __post_init__(self) -> None:
        if self.bits not in (2, 4):
            raise ValueError("quantizer bits must be 2 or 4")
        if self.clip <= 0:
            raise ValueError("clip range must be positive")

    @property
    def step(self) -> float:
        return 2.0 * self.clip / (1 << self.bits)


def quantize_llr(values: np.ndarray, spec: QuantizerSpec) -> np.ndarray:
    idx = np.floor((np.asarray(values) + spec.clip) / spec.step).astype(np.int64)
    return np.clip(idx, 0, (1 << spec.bits) - 1)


def dequantize_llr(idx: np.ndarray, spec: QuantizerSpec) -> np.ndarray:
    return -spec.clip + (np.asarray(idx) + 0.5) * spec.step


def comp_nonideal_llrs(
    y: np.ndarray,
    h: tuple[complex, complex],
    constellation: Constellation,
    noise_var: float,
) -> np.ndarray:
    """Per-terminal per-bit LLRs at one AP, marginalizing the other terminal.

    Returns shape (terminals, bits_per_symbol, uses).
    """
    m = constellation.bits_per_symbol
    size = 1 << m
    ys = np.atleast_1d(np.asarray(y, dtype=complex))
    idx = np.arange(size * size)
    labels = (idx >> m, idx & (size - 1))
    hyp = h[0] * constellation.points[labels[0]] + h[1] * constellation.points[labels[1]]
    metric = -np.abs(ys[:, None] - hyp[None, :]) ** 2 / noise_var
    out = np.empty((2, m, len(ys)))
    for term in range(2):
        for i in range(m):
            bit = (labels[term] >> (m - 1 - i)) & 1
            out[term, i] = (
                np.logaddexp.reduce(metric[:, bit == 0], axis=1)
                - np.logaddexp.reduce(metric[:, bit == 1], axis=1)
            )
    return out


def comp_combine(dequantized: np.ndarray) -> np.ndarray:
    """CPU side of the quantized baseline: sum per-AP LLRs, threshold.

    ``dequantized`` has shape (APs, terminals, bits, uses); returns hard
    bits (terminals, bits, uses).
    """
    return (dequantized.sum(axis=0) < 0).astype(np.int64)
