"""How a candidate mapping matrix is judged, and the off-line search.

At a singular fade state some joint messages coincide, so any usable GF(2)
mapping must give coincident messages the same network-coded vector; among
those, the best matrix maximizes the minimum distance between points that
map to different vectors.  The search never enumerates matrices blindly:
matrices sharing a row space behave identically, so it walks row spaces.
"""
from pnclab import build_catalog, evaluate_mapping, min_cardinality_t, superimpose
from pnclab.gf2 import BitMatrix
from pnclab.mapping import admissible_row_space
from pnclab.modulation import make_constellation
from pnclab.search import exhaustive_matrix_scan, mine_candidates, state_channel

qam4 = make_constellation("qam4")
cat = build_catalog("qam4", n_trials=100_000, rng_seed=0)

# pick the unit-rotation state v = j
idx = next(
    i for i, e in enumerate(cat.entries)
    if not e.state.infinite and abs(e.state.value - 1j) < 1e-9
)
entry = cat.entries[idx]
sc = superimpose(qam4, state_channel(entry.state))

rows = admissible_row_space(entry.partition, qam4.bits_per_symbol)
print(f"admissible row space at v=j has dimension {len(rows)}: "
      + ", ".join(f"{r:04b}" for r in rows))

rankings = mine_candidates(cat, t=2)
best = rankings[idx].entries[0]
print(f"best clash-consistent mapping: {best.matrix.to_lists()} "
      f"with squared minimum distance {best.d_min:.3f}")

# the same verdict from the literal 256-matrix scan
scan = exhaustive_matrix_scan(sc, entry.partition, t=2)
consistent = [(m, d) for m, d, cc in scan if cc]
print(f"literal scan: {len(consistent)} clash-consistent full-rank matrices, "
      f"all with distance {max(d for _, d in consistent):.3f} "
      "(six bases of the single admissible space)")

# a matrix that splits the origin clash is useless at this state
splitter = BitMatrix.from_rows([[1, 0, 0, 0], [0, 1, 0, 0]])
q = evaluate_mapping(splitter, sc, entry.partition)
print(f"terminal-1 extractor at v=j: consistent={q.clash_consistent}, d_min={q.d_min}")

# two rows per AP always suffice for 4QAM states...
t, mat = min_cardinality_t(sc, entry.partition)
print(f"minimum rows needed at v=j: {t} (matrix {mat.to_lists()})")

# ...while an artificial all-in-one clash forces the full-length fallback
t, mat = min_cardinality_t(sc, (tuple(range(16)),))
print(f"adversarial clash partition forces {t} rows (identity fallback)")
