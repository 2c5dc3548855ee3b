"""Two-stage mapping-matrix search, on-line selection, and the lookup table.

Stage one mines, for every singular fade state, the full-rank row spaces
whose clusters respect that state's clashes, ranked by minimum inter-cluster
distance at the state.  Stage two certifies that every ordered tuple of
states admits per-AP choices whose stacked global matrix is invertible,
augmenting candidate lists with complementary row spaces where the mined
ones cannot do it (two APs caught in the same fade, or states whose
admissible spaces overlap).  On-line, each AP resolves its channel to the
nearest state and the CPU picks the invertible combination with the best
worst-AP distance; the regulated variant replaces that search with a
precomputed table keyed by state indices.

Candidates are handled at row-space granularity: matrices sharing a row
space induce identical clusters, identical distances, and identical global
ranks, so each space is represented once by its canonical reduced-row-
echelon matrix.  An exhaustive per-matrix scan is kept for cross-checks at
small sizes.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .fade_states import FadeState, SfsCatalog, nearest_sfs
from .gf2 import (
    BitMatrix,
    enumerate_matrices,
    enumerate_subspaces,
    nullspace,
    rank_rows,
    rref_rows,
    span,
)
from .mapping import (
    SuperimposedConstellation,
    clash_difference_basis,
    difference_profiles,
    mapping_d_min,
    superimpose,
)
from .modulation import make_constellation


class SelectionInfeasibleError(RuntimeError):
    """No candidate combination stacks to an invertible global matrix."""


@dataclass(frozen=True)
class CandidateEntry:
    """One candidate row space for one fade state."""

    matrix: BitMatrix           # canonical RREF representative
    d_min: float                # minimum inter-cluster distance at the state
    clash_consistent: bool
    separated_d_min: float      # same, ignoring coincident pairs

    @property
    def sort_key(self) -> tuple[float, float, int]:
        return (-self.d_min, -self.separated_d_min, self.matrix.encoding)


@dataclass(frozen=True)
class SfsCandidates:
    """Ranked candidates of one fade state (stage-one output)."""

    state_index: int
    resolvable: bool
    entries: tuple[CandidateEntry, ...]


def state_channel(state: FadeState) -> tuple[complex, complex]:
    """Channel coefficient pair realizing a fade state."""
    return (0.0 + 0j, 1.0 + 0j) if state.infinite else (1.0 + 0j, state.value)


def _complement_basis(d_basis: tuple[int, ...], mu: int) -> tuple[int, ...]:
    """Standard-vector completion of a subspace basis to the full space."""
    _, pivots = rref_rows(d_basis, mu)
    taken = set(pivots)
    return tuple(1 << c for c in range(mu) if c not in taken)


def _kernel_scores(
    kernel_basis: tuple[int, ...],
    plain: np.ndarray,
    separated: np.ndarray,
    plain_order: np.ndarray,
    separated_order: np.ndarray,
) -> tuple[float, float]:
    members = set(span(kernel_basis))
    primary = next((float(plain[d]) for d in plain_order if d not in members), math.inf)
    secondary = next((float(separated[d]) for d in separated_order if d not in members), math.inf)
    return primary, secondary


def _entry_from_kernel(
    kernel_basis: tuple[int, ...],
    mu: int,
    consistent: bool,
    scores: tuple[float, float],
) -> CandidateEntry:
    rows = rref_rows(nullspace(kernel_basis, mu), mu)[0]
    return CandidateEntry(
        matrix=BitMatrix.from_row_ints(rows, mu),
        d_min=scores[0],
        clash_consistent=consistent,
        separated_d_min=scores[1],
    )


def mine_candidates(
    cat: SfsCatalog,
    t: int,
    limit: int | None = None,
) -> tuple[SfsCandidates, ...]:
    """Stage one: rank clash-consistent row spaces per state by d_min.

    States whose clash structure leaves fewer than ``t`` admissible row
    dimensions cannot be resolved by any rank-t binary matrix; they are
    flagged unresolvable and get best-effort candidates ranked by the
    distance among already-separated points instead.
    """
    c = make_constellation(cat.modulation)
    m = c.bits_per_symbol
    mu = 2 * m
    if not m <= t <= mu:
        raise ValueError(f"t must be in [{m}, {mu}]")
    out = []
    for idx, entry in enumerate(cat.entries):
        sc = superimpose(c, state_channel(entry.state))
        plain, separated = difference_profiles(sc)
        plain_order = np.argsort(plain, kind="stable")
        separated_order = np.argsort(separated, kind="stable")
        d_basis = clash_difference_basis(entry.partition, m)
        kernel_dim = mu - t
        resolvable = len(d_basis) <= kernel_dim
        candidates: list[CandidateEntry] = []
        if resolvable:
            comp = _complement_basis(d_basis, mu)
            for extra in enumerate_subspaces(comp, kernel_dim - len(d_basis)):
                kb = d_basis + extra
                scores = _kernel_scores(kb, plain, separated, plain_order, separated_order)
                candidates.append(_entry_from_kernel(kb, mu, True, scores))
        else:
            # kernels inside the clash-difference span absorb the most clashes
            for kb in enumerate_subspaces(d_basis, kernel_dim):
                scores = _kernel_scores(kb, plain, separated, plain_order, separated_order)
                candidates.append(_entry_from_kernel(kb, mu, False, scores))
        candidates.sort(key=lambda e: e.sort_key)
        if limit is not None:
            candidates = candidates[:limit]
        out.append(SfsCandidates(state_index=idx, resolvable=resolvable, entries=tuple(candidates)))
    return tuple(out)


def exhaustive_matrix_scan(
    sc: SuperimposedConstellation,
    clash: tuple[tuple[int, ...], ...],
    t: int,
    max_bits: int = 24,
) -> list[tuple[BitMatrix, float, bool]]:
    """Literal scan of every t x mu matrix: (matrix, d_min, clash_consistent).

    Only the full-rank matrices are returned.  This is the slow oracle used
    to cross-check the row-space search at small sizes.
    """
    from .mapping import evaluate_mapping

    mu = sc.mu
    out = []
    for mat in enumerate_matrices(t, mu, max_bits=max_bits):
        if rank_rows(mat.rows) != t:
            continue
        q = evaluate_mapping(mat, sc, clash)
        out.append((mat, q.d_min, q.clash_consistent))
    return out


@dataclass(frozen=True)
class CandidateStore:
    """Per-state candidate lists shared by the APs and the CPU."""

    modulation: str
    labeling_version: str
    t: int
    mu: int
    k_per_state: int
    eps: float
    d_alpha: float
    rank_seed: int | None
    rank_trials: int | None
    states: tuple[FadeState, ...]
    lists: tuple[tuple[CandidateEntry, ...], ...]
    certified_n: int | None = None
    infeasible: tuple[tuple[int, ...], ...] = ()

    def matrices_for(self, state_index: int) -> tuple[BitMatrix, ...]:
        return tuple(e.matrix for e in self.lists[state_index])


def _coordinate_entry(
    cols: tuple[int, ...],
    state: FadeState,
    modulation: str,
    mu: int,
) -> CandidateEntry:
    """Row space spanned by standard vectors on ``cols``, scored at the state."""
    c = make_constellation(modulation)
    sc = superimpose(c, state_channel(state))
    plain, separated = difference_profiles(sc)
    plain_order = np.argsort(plain, kind="stable")
    separated_order = np.argsort(separated, kind="stable")
    kernel = tuple(1 << c2 for c2 in range(mu) if c2 not in cols)
    scores = _kernel_scores(kernel, plain, separated, plain_order, separated_order)
    return CandidateEntry(
        matrix=BitMatrix.from_row_ints(tuple(1 << c2 for c2 in cols), mu),
        d_min=scores[0],
        clash_consistent=scores[0] > 0,
        separated_d_min=scores[1],
    )


def assemble_store(
    cat: SfsCatalog,
    rankings: tuple[SfsCandidates, ...],
    t: int,
    k_per_state: int,
    d_alpha: float = 0.0,
) -> CandidateStore:
    """Per-state lists: top-ranked candidates plus two universal extractors.

    The extractors project onto the first and the last ``t`` message bits.
    Their column sets cover all of F2^mu whenever 2t >= mu, so any ordered
    pair of lists can stack them to full rank: that keeps selection feasible
    even when both APs resolve to the same fade state, or to states whose
    admissible row spaces overlap.  With k_per_state >= 3 the extractors
    cost at most two list slots; below that the store may be uncertifiable,
    which certification reports rather than hides.
    """
    c = make_constellation(cat.modulation)
    mu = 2 * c.bits_per_symbol
    head = tuple(range(t))
    tail = tuple(range(mu - t, mu))
    lists = []
    for r, entry in zip(rankings, cat.entries):
        chosen = list(r.entries[: max(0, k_per_state - 2)])
        have = {e.matrix for e in chosen}
        if k_per_state >= 2:
            for cols in (head, tail):
                cand = _coordinate_entry(cols, entry.state, cat.modulation, mu)
                if cand.matrix not in have and len(chosen) < k_per_state:
                    chosen.append(cand)
                    have.add(cand.matrix)
        for e in r.entries[max(0, k_per_state - 2):]:
            if len(chosen) >= k_per_state:
                break
            if e.matrix not in have:
                chosen.append(e)
                have.add(e.matrix)
        lists.append(tuple(chosen))
    return CandidateStore(
        modulation=cat.modulation,
        labeling_version=cat.labeling_version,
        t=t,
        mu=mu,
        k_per_state=k_per_state,
        eps=cat.eps,
        d_alpha=d_alpha,
        rank_seed=cat.rank_seed,
        rank_trials=cat.rank_trials,
        states=tuple(e.state for e in cat.entries),
        lists=tuple(lists),
    )


def _stack_rank(matrices: tuple[BitMatrix, ...]) -> int:
    rows: list[int] = []
    for m in matrices:
        rows.extend(m.rows)
    return rank_rows(rows)


def _tuple_feasible(lists, tup, mu) -> bool:
    for combo in itertools.product(*(lists[i] for i in tup)):
        if _stack_rank(tuple(e.matrix for e in combo)) == mu:
            return True
    return False


def certify_store(store: CandidateStore, n_aps: int) -> CandidateStore:
    """Stage two: verify an invertible stack exists for every ordered tuple.

    Repeated indices are covered as well: two APs do land in the same fade
    with positive probability.  Any tuple without a full-rank combination
    is reported in the returned store rather than hidden.  Entries that can
    pair with no other stored entry to full rank (and so participate in no
    feasible stack) are pruned, keeping at least one entry per state.
    """
    mu = store.mu
    if n_aps * store.t < mu:
        raise ValueError(f"{n_aps} APs of {store.t} rows cannot reach rank {mu}")
    lists = [list(l) for l in store.lists]
    n_states = len(store.states)
    all_tuples = itertools.product(range(n_states), repeat=n_aps)
    remaining = tuple(tup for tup in all_tuples if not _tuple_feasible(lists, tup, mu))

    if n_aps >= 2:
        flat = [(i, j, e) for i, l in enumerate(lists) for j, e in enumerate(l)]
        used: list[set[int]] = [set() for _ in range(n_states)]
        for a, (i1, j1, e1) in enumerate(flat):
            for i2, j2, e2 in flat[a:]:
                if _stack_rank((e1.matrix, e2.matrix)) == mu:
                    used[i1].add(j1)
                    used[i2].add(j2)
        pruned = tuple(
            tuple(e for j, e in enumerate(lists[i]) if j in used[i]) or tuple(lists[i][:1])
            for i in range(n_states)
        )
    else:
        pruned = tuple(
            tuple(e for e in l if rank_rows(e.matrix.rows) == mu) or tuple(l[:1]) for l in lists
        )
    return replace(store, lists=pruned, certified_n=n_aps, infeasible=remaining)


def build_store(
    cat: SfsCatalog,
    t: int,
    k_per_state: int,
    n_aps: int = 2,
    d_alpha: float = 0.0,
) -> CandidateStore:
    """Mine, assemble, and certify in one call."""
    rankings = mine_candidates(cat, t, limit=k_per_state)
    return certify_store(assemble_store(cat, rankings, t, k_per_state, d_alpha), n_aps)


def _check_store_matches_catalog(store: CandidateStore, cat: SfsCatalog) -> None:
    if store.modulation != cat.modulation or store.labeling_version != cat.labeling_version:
        raise ValueError("store and catalog disagree on modulation or labeling")
    if len(store.states) != len(cat.entries):
        raise ValueError("store and catalog cover different state sets")
    for s, e in zip(store.states, cat.entries):
        if s.infinite != e.state.infinite:
            raise ValueError("store and catalog states are ordered differently")
        if not s.infinite and abs(s.value - e.state.value) > cat.eps:
            raise ValueError("store and catalog states disagree in value")


@dataclass(frozen=True)
class Selection:
    """Chosen per-AP matrices and their invertible stack."""

    per_ap: tuple[BitMatrix, ...]
    global_matrix: BitMatrix
    state_indices: tuple[int, ...]
    per_ap_d_min: tuple[float, ...]

    @property
    def min_d_min(self) -> float:
        return min(self.per_ap_d_min)


def _pick_best(
    lists: tuple[tuple[BitMatrix, ...], ...],
    d_values: tuple[tuple[float, ...], ...],
    mu: int,
) -> tuple[tuple[int, ...], float] | None:
    """Lexicographic best over candidate combinations with full-rank stack.

    Maximizes the worst per-AP distance, then the sum, then breaks ties by
    the lowest tuple of matrix encodings.  Returns (indices per AP, min d).
    """
    best = None
    best_key = None
    for combo in itertools.product(*(range(len(l)) for l in lists)):
        mats = tuple(lists[j][i] for j, i in enumerate(combo))
        if _stack_rank(mats) != mu:
            continue
        ds = tuple(d_values[j][i] for j, i in enumerate(combo))
        key = (-min(ds), -sum(ds), tuple(m.encoding for m in mats))
        if best_key is None or key < best_key:
            best_key = key
            best = (combo, min(ds))
    return best


def select_mappings(
    store: CandidateStore,
    cat: SfsCatalog,
    channels: np.ndarray,
) -> Selection:
    """On-line selection for one channel realization (rows = APs).

    Each AP resolves its channel to the nearest catalog state and offers
    that state's candidates; the CPU evaluates every cross-product choice
    at the true channels and keeps the best invertible stack.
    """
    c = make_constellation(store.modulation)
    H = np.asarray(channels, dtype=complex)
    n_aps = H.shape[0]
    state_idx = []
    mat_lists = []
    d_lists = []
    for j in range(n_aps):
        idx, _ = nearest_sfs(cat, (H[j, 0], H[j, 1]))
        state_idx.append(idx)
        sc = superimpose(c, (H[j, 0], H[j, 1]))
        mats = store.matrices_for(idx)
        mat_lists.append(mats)
        d_lists.append(tuple(mapping_d_min(m.rows, sc) for m in mats))
    best = _pick_best(tuple(mat_lists), tuple(d_lists), store.mu)
    if best is None:
        raise SelectionInfeasibleError(
            f"no invertible stack for state tuple {tuple(state_idx)}; store contract violated"
        )
    combo, _ = best
    mats = tuple(mat_lists[j][i] for j, i in enumerate(combo))
    g = mats[0]
    for m in mats[1:]:
        g = g.stack(m)
    return Selection(
        per_ap=mats,
        global_matrix=g,
        state_indices=tuple(state_idx),
        per_ap_d_min=tuple(d_lists[j][i] for j, i in enumerate(combo)),
    )


@dataclass(frozen=True)
class SelectionTable:
    """Precomputed per-state-tuple assignments for low-latency selection."""

    modulation: str
    labeling_version: str
    t: int
    mu: int
    n_aps: int
    states: tuple[FadeState, ...]
    entries: dict[tuple[int, ...], tuple[int, ...] | None]

    def __len__(self) -> int:
        return len(self.entries)


def build_selection_table(
    store: CandidateStore,
    cat: SfsCatalog | None = None,
    n_aps: int = 2,
) -> SelectionTable:
    """Evaluate every ordered state tuple at its fade-state channel points.

    Uses the same objective and tie-breaks as the on-line search; tuples
    with no invertible stack (possible only when certification reported
    them infeasible) carry a fallback marker.  When ``cat`` is given, the
    store is checked against it first.
    """
    if cat is not None:
        _check_store_matches_catalog(store, cat)
    n_states = len(store.states)
    entries: dict[tuple[int, ...], tuple[int, ...] | None] = {}
    for tup in itertools.product(range(n_states), repeat=n_aps):
        mat_lists = tuple(store.matrices_for(i) for i in tup)
        d_lists = tuple(tuple(e.d_min for e in store.lists[i]) for i in tup)
        best = _pick_best(mat_lists, d_lists, store.mu)
        if best is None:
            entries[tup] = None
        else:
            combo, _ = best
            entries[tup] = tuple(mat_lists[j][i].encoding for j, i in enumerate(combo))
    return SelectionTable(
        modulation=store.modulation,
        labeling_version=store.labeling_version,
        t=store.t,
        mu=store.mu,
        n_aps=n_aps,
        states=store.states,
        entries=entries,
    )


def table_lookup(
    table: SelectionTable,
    store: CandidateStore,
    cat: SfsCatalog,
    channels: np.ndarray,
) -> Selection:
    """Regulated selection: nearest states, then a table read.

    Falls back to the on-line search when the tuple carries the marker.
    """
    H = np.asarray(channels, dtype=complex)
    c = make_constellation(store.modulation)
    tup = tuple(nearest_sfs(cat, (H[j, 0], H[j, 1]))[0] for j in range(H.shape[0]))
    encs = table.entries.get(tup)
    if encs is None:
        return select_mappings(store, cat, channels)
    mats = tuple(BitMatrix.from_encoding(e, table.t, table.mu) for e in encs)
    g = mats[0]
    for m in mats[1:]:
        g = g.stack(m)
    d_values = tuple(
        mapping_d_min(mats[j].rows, superimpose(c, (H[j, 0], H[j, 1])))
        for j in range(len(mats))
    )
    return Selection(per_ap=mats, global_matrix=g, state_indices=tup, per_ap_d_min=d_values)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _format_entry(e: CandidateEntry) -> str:
    return f"{e.matrix.to_text()}|{e.d_min:.12g}|{int(e.clash_consistent)}|{e.separated_d_min:.12g}"


def _parse_entry(text: str) -> CandidateEntry:
    enc, d, cc, sep = text.split("|")
    return CandidateEntry(
        matrix=BitMatrix.from_text(enc),
        d_min=float(d),
        clash_consistent=bool(int(cc)),
        separated_d_min=float(sep),
    )


def save_store(store: CandidateStore, path: str) -> None:
    lines = [
        "pnclab-store v1",
        f"modulation={store.modulation}",
        f"labeling={store.labeling_version}",
        f"t={store.t}",
        f"mu={store.mu}",
        f"K={store.k_per_state}",
        f"eps={store.eps:g}",
        f"d_alpha={store.d_alpha:g}",
        f"rank_seed={'none' if store.rank_seed is None else store.rank_seed}",
        f"rank_trials={'none' if store.rank_trials is None else store.rank_trials}",
        f"certified_n={'none' if store.certified_n is None else store.certified_n}",
        f"infeasible={';'.join(','.join(map(str, t)) for t in store.infeasible)}",
        f"states={len(store.states)}",
    ]
    for i, (state, entries) in enumerate(zip(store.states, store.lists)):
        parts = " ".join(_format_entry(e) for e in entries)
        lines.append(f"{i} @ {state.to_text()} @ {parts}")
    with open(path, "w", encoding="ascii") as f:
        f.write("\n".join(lines) + "\n")


def load_store(path: str) -> CandidateStore:
    with open(path, "r", encoding="ascii") as f:
        lines = [ln.rstrip("\n") for ln in f if ln.strip()]
    if lines[0] != "pnclab-store v1":
        raise ValueError(f"not a store file: {path}")
    header: dict[str, str] = {}
    body = []
    for ln in lines[1:]:
        if " @ " in ln:
            body.append(ln)
        else:
            k, _, v = ln.partition("=")
            header[k] = v
    states = []
    lists = []
    for ln in body:
        _, state_txt, entries_txt = (s.strip() for s in ln.split(" @ ", 2))
        states.append(FadeState.from_text(state_txt))
        lists.append(tuple(_parse_entry(e) for e in entries_txt.split()) if entries_txt else ())
    def _opt(key: str) -> int | None:
        return None if header[key] == "none" else int(header[key])

    infeasible = tuple(
        tuple(int(x) for x in part.split(","))
        for part in header["infeasible"].split(";")
        if part
    )
    store = CandidateStore(
        modulation=header["modulation"],
        labeling_version=header["labeling"],
        t=int(header["t"]),
        mu=int(header["mu"]),
        k_per_state=int(header["K"]),
        eps=float(header["eps"]),
        d_alpha=float(header["d_alpha"]),
        rank_seed=_opt("rank_seed"),
        rank_trials=_opt("rank_trials"),
        states=tuple(states),
        lists=tuple(lists),
        certified_n=_opt("certified_n"),
        infeasible=infeasible,
    )
    for entries in store.lists:
        for e in entries:
            if rank_rows(e.matrix.rows) != store.t:
                raise ValueError("store entry violates the rank invariant")
    return store


def save_table(table: SelectionTable, path: str) -> None:
    lines = [
        "pnclab-table v1",
        f"modulation={table.modulation}",
        f"labeling={table.labeling_version}",
        f"t={table.t}",
        f"mu={table.mu}",
        f"n={table.n_aps}",
        f"states={len(table.states)}",
    ]
    for i, state in enumerate(table.states):
        lines.append(f"state {i} @ {state.to_text()}")
    for tup in sorted(table.entries):
        encs = table.entries[tup]
        key = ",".join(map(str, tup))
        if encs is None:
            lines.append(f"{key} -> fallback")
        else:
            lines.append(f"{key} -> " + " ".join(format(e, 'x') for e in encs))
    with open(path, "w", encoding="ascii") as f:
        f.write("\n".join(lines) + "\n")


def load_table(path: str) -> SelectionTable:
    with open(path, "r", encoding="ascii") as f:
        lines = [ln.rstrip("\n") for ln in f if ln.strip()]
    if lines[0] != "pnclab-table v1":
        raise ValueError(f"not a table file: {path}")
    header: dict[str, str] = {}
    states: list[FadeState] = []
    entries: dict[tuple[int, ...], tuple[int, ...] | None] = {}
    for ln in lines[1:]:
        if ln.startswith("state "):
            _, _, rest = ln.partition(" ")
            _, state_txt = (s.strip() for s in rest.split(" @ ", 1))
            states.append(FadeState.from_text(state_txt))
        elif " -> " in ln:
            key, _, val = ln.partition(" -> ")
            tup = tuple(int(x) for x in key.split(","))
            if val.strip() == "fallback":
                entries[tup] = None
            else:
                entries[tup] = tuple(int(x, 16) for x in val.split())
        else:
            k, _, v = ln.partition("=")
            header[k] = v
    t, mu = int(header["t"]), int(header["mu"])
    for tup, encs in entries.items():
        if encs is None:
            continue
        rows: list[int] = []
        for e in encs:
            rows.extend(BitMatrix.from_encoding(e, t, mu).rows)
        if rank_rows(rows) != mu:
            raise ValueError(f"table entry {tup} stacks to a singular global matrix")
    return SelectionTable(
        modulation=header["modulation"],
        labeling_version=header["labeling"],
        t=t,
        mu=mu,
        n_aps=int(header["n"]),
        states=tuple(states),
        entries=entries,
    )
