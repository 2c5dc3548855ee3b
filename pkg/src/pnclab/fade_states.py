"""Singular fade states for the two-terminal QAM multiple-access channel.

A fade state is the complex ratio of the two channel coefficients; it is
singular when two different joint messages superimpose onto the same point.
This module enumerates all singular ratios from symbol differences, attaches
the coincidence partition each one induces, merges states with identical
partitions, ranks survivors by empirical occurrence under Rayleigh fading,
and resolves a live channel to its nearest catalog entry.

The zero ratio and the point at infinity (one terminal unheard) are genuine
singular states and are kept as catalog entries; the reported raw-state
count covers ratio values only, so infinity is listed but not counted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .mapping import COINCIDENCE_EPS, coincident_partition, superimpose
from .modulation import Constellation, make_constellation


class DegenerateChannelError(ValueError):
    """Raised when both channel coefficients are zero."""


@dataclass(frozen=True)
class FadeState:
    """Channel-coefficient ratio, either a finite complex value or infinity."""

    value: complex
    infinite: bool = False

    def to_text(self) -> str:
        if self.infinite:
            return "inf"
        return f"{self.value.real + 0.0:.12g},{self.value.imag + 0.0:.12g}"

    @classmethod
    def from_text(cls, text: str) -> "FadeState":
        if text.strip() == "inf":
            return cls(value=0j, infinite=True)
        re, _, im = text.partition(",")
        return cls(value=complex(float(re), float(im)))


@dataclass(frozen=True)
class SfsEntry:
    state: FadeState
    partition: tuple[tuple[int, ...], ...]
    weight: float = 0.0


@dataclass(frozen=True)
class SfsCatalog:
    """Deduplicated singular fade states with occurrence ranks."""

    modulation: str
    bits_per_symbol: int
    eps: float
    labeling_version: str
    entries: tuple[SfsEntry, ...]
    n_raw_states: int
    rank_seed: int | None = None
    rank_trials: int | None = None

    @property
    def n_states(self) -> int:
        """Distinct ratio states currently listed (infinity excluded)."""
        return sum(1 for e in self.entries if not e.state.infinite)

    def finite_values(self) -> np.ndarray:
        return np.array(
            [e.state.value if not e.state.infinite else np.nan for e in self.entries],
            dtype=complex,
        )

    def infinite_index(self) -> int | None:
        for i, e in enumerate(self.entries):
            if e.state.infinite:
                return i
        return None


def _round_key(z: complex, decimals: int) -> tuple[float, float]:
    return (round(z.real, decimals), round(z.imag, decimals))


def enumerate_sfs(c: Constellation, eps: float = COINCIDENCE_EPS) -> SfsCatalog:
    """Enumerate all distinct singular ratios and their clash partitions.

    Ratios come from symbol differences on the integer lattice, where any
    two distinct values are separated by far more than the dedup tolerance.
    """
    decimals = max(0, int(round(-math.log10(eps))))
    lat = c.lattice_points
    diffs = sorted(
        {
            _round_key(a - b, decimals)
            for a in lat
            for b in lat
            if a != b
        }
    )
    seen: dict[tuple[float, float], complex] = {}
    for dr, di in [(0.0, 0.0)] + diffs:
        num = complex(dr, di)
        for er, ei in diffs:
            v = num / complex(er, ei)
            seen.setdefault(_round_key(v, decimals), v)
    values = sorted(
        seen.values(),
        key=lambda z: (round(abs(z), decimals), round(math.atan2(z.imag, z.real), decimals)),
    )
    entries = []
    for v in values:
        part = coincident_partition(superimpose(c, (1.0, v)), eps)
        entries.append(SfsEntry(state=FadeState(value=v), partition=part))
    part_inf = coincident_partition(superimpose(c, (0.0, 1.0)), eps)
    entries.append(SfsEntry(state=FadeState(value=0j, infinite=True), partition=part_inf))
    for e in entries:
        if not any(len(b) > 1 for b in e.partition):
            raise AssertionError(f"state {e.state.to_text()} induces no coincidence")
    return SfsCatalog(
        modulation=c.name,
        bits_per_symbol=c.bits_per_symbol,
        eps=eps,
        labeling_version=c.labeling_version,
        entries=tuple(entries),
        n_raw_states=len(values),
    )


def remove_image_sfs(cat: SfsCatalog) -> SfsCatalog:
    """Merge states whose clash partitions are identical, keeping the first."""
    kept: list[SfsEntry] = []
    seen: set[tuple[tuple[int, ...], ...]] = set()
    for e in cat.entries:
        if e.partition in seen:
            continue
        seen.add(e.partition)
        kept.append(e)
    return replace(cat, entries=tuple(kept))


def _rayleigh_ratios(rng: np.random.Generator, n: int) -> np.ndarray:
    h = (rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))) / np.sqrt(2.0)
    return h[1] / h[0]


def nearest_indices(cat: SfsCatalog, ratios: np.ndarray, chunk: int = 20000) -> np.ndarray:
    """Vectorized nearest-state lookup for an array of finite fade ratios."""
    vals = cat.finite_values()
    finite_mask = ~np.isnan(vals)
    finite_vals = vals[finite_mask]
    finite_pos = np.flatnonzero(finite_mask)
    out = np.empty(len(ratios), dtype=np.int64)
    for start in range(0, len(ratios), chunk):
        block = ratios[start : start + chunk]
        d = np.abs(block[:, None] - finite_vals[None, :]) ** 2
        out[start : start + chunk] = finite_pos[d.argmin(axis=1)]
    return out


def rank_principal_sfs(cat: SfsCatalog, n_trials: int = 10**6, rng_seed: int = 0) -> SfsCatalog:
    """Sort states by empirical nearest-state hit counts under Rayleigh fading."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rng = np.random.default_rng(rng_seed)
    counts = np.zeros(len(cat.entries), dtype=np.int64)
    remaining = n_trials
    while remaining > 0:
        n = min(remaining, 20000)
        idx = nearest_indices(cat, _rayleigh_ratios(rng, n))
        counts += np.bincount(idx, minlength=len(cat.entries))
        remaining -= n
    order = sorted(range(len(cat.entries)), key=lambda i: (-counts[i], i))
    entries = tuple(replace(cat.entries[i], weight=float(counts[i])) for i in order)
    return replace(cat, entries=entries, rank_seed=rng_seed, rank_trials=n_trials)


def truncate_catalog(cat: SfsCatalog, n_principal: int) -> SfsCatalog:
    """Keep the first ``n_principal`` entries (call after ranking)."""
    return replace(cat, entries=cat.entries[:n_principal])


def nearest_sfs(cat: SfsCatalog, h: tuple[complex, complex]) -> tuple[int, float]:
    """Index and squared distance of the catalog state nearest to a channel.

    The ratio h2/h1 is compared against finite states; an exactly vanishing
    h1 matches only the infinity entry.  Ties break to the lowest index.
    """
    h1, h2 = complex(h[0]), complex(h[1])
    if h1 == 0 and h2 == 0:
        raise DegenerateChannelError("both channel coefficients are zero")
    if h1 == 0:
        inf_idx = cat.infinite_index()
        if inf_idx is not None:
            return inf_idx, 0.0
        v = complex(1e18, 0.0)  # catalog was truncated past infinity
    else:
        v = h2 / h1
    vals = cat.finite_values()
    d = np.abs(v - vals) ** 2
    d[np.isnan(d)] = np.inf
    idx = int(np.argmin(d))
    return idx, float(d[idx])


def _format_partition(part: tuple[tuple[int, ...], ...]) -> str:
    return "|".join(",".join(str(i) for i in block) for block in part)


def _parse_partition(text: str) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(x) for x in block.split(",")) for block in text.split("|"))


def save_catalog(cat: SfsCatalog, path: str) -> None:
    lines = [
        "pnclab-sfs-catalog v1",
        f"modulation={cat.modulation}",
        f"bits_per_symbol={cat.bits_per_symbol}",
        f"eps={cat.eps:g}",
        f"labeling={cat.labeling_version}",
        f"raw_states={cat.n_raw_states}",
        f"rank_seed={'none' if cat.rank_seed is None else cat.rank_seed}",
        f"rank_trials={'none' if cat.rank_trials is None else cat.rank_trials}",
        f"entries={len(cat.entries)}",
    ]
    for i, e in enumerate(cat.entries):
        lines.append(f"{i}; {e.state.to_text()}; {e.weight:g}; {_format_partition(e.partition)}")
    with open(path, "w", encoding="ascii") as f:
        f.write("\n".join(lines) + "\n")


def load_catalog(path: str) -> SfsCatalog:
    with open(path, "r", encoding="ascii") as f:
        lines = [ln.rstrip("\n") for ln in f if ln.strip()]
    if lines[0] != "pnclab-sfs-catalog v1":
        raise ValueError(f"not a catalog file: {path}")
    header: dict[str, str] = {}
    body_start = 1
    for ln in lines[1:]:
        if "=" not in ln or ";" in ln:
            break
        k, _, v = ln.partition("=")
        header[k] = v
        body_start += 1
    entries = []
    for ln in lines[body_start:]:
        _, state_txt, weight_txt, part_txt = (s.strip() for s in ln.split(";", 3))
        entries.append(
            SfsEntry(
                state=FadeState.from_text(state_txt),
                partition=_parse_partition(part_txt),
                weight=float(weight_txt),
            )
        )
    def _opt(key: str) -> int | None:
        return None if header[key] == "none" else int(header[key])

    return SfsCatalog(
        modulation=header["modulation"],
        bits_per_symbol=int(header["bits_per_symbol"]),
        eps=float(header["eps"]),
        labeling_version=header["labeling"],
        entries=tuple(entries),
        n_raw_states=int(header["raw_states"]),
        rank_seed=_opt("rank_seed"),
        rank_trials=_opt("rank_trials"),
    )


def build_catalog(
    modulation: str,
    eps: float = COINCIDENCE_EPS,
    n_trials: int = 10**6,
    rng_seed: int = 0,
    n_principal: int | None = None,
) -> SfsCatalog:
    """Full pipeline: enumerate, drop images, rank, optionally truncate."""
    cat = rank_principal_sfs(
        remove_image_sfs(enumerate_sfs(make_constellation(modulation), eps)),
        n_trials=n_trials,
        rng_seed=rng_seed,
    )
    if n_principal is not None:
        cat = truncate_catalog(cat, n_principal)
    return cat
