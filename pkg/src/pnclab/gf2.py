"""Exact linear algebra over the binary field.

Matrices are stored as packed bit rows: row ``r`` is a Python integer whose
bit ``c`` holds the entry in column ``c``.  XOR on whole rows makes Gaussian
elimination cheap, which matters because the off-line mapping search touches
a very large number of small matrices.

The canonical integer encoding of a matrix is its row-major bit string read
as a little-endian integer (bit index ``r * n_cols + c``), and the canonical
textual form is ``"{rows}x{cols}:{hex}"``.  Both are stable identities used
in catalog and store files.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


class SingularMatrixError(ValueError):
    """Raised when a matrix expected to be invertible over F2 is not."""


class EnumerationTooLargeError(ValueError):
    """Raised when a requested exhaustive matrix enumeration exceeds the cap."""


class InconsistentSystemError(ValueError):
    """Raised when a linear system over F2 has no solution."""


def _parity(x: int) -> int:
    return x.bit_count() & 1


@dataclass(frozen=True)
class BitVector:
    """Column vector over F2; bit ``k`` of ``value`` is component ``k``."""

    length: int
    value: int

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ValueError("BitVector length must be >= 1")
        if not 0 <= self.value < (1 << self.length):
            raise ValueError("BitVector value out of range for its length")

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        bits = list(bits)
        value = 0
        for k, b in enumerate(bits):
            if b not in (0, 1):
                raise ValueError("bits must be 0 or 1")
            value |= b << k
        return cls(length=len(bits), value=value)

    def to_bits(self) -> tuple[int, ...]:
        return tuple((self.value >> k) & 1 for k in range(self.length))

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.length != other.length:
            raise ValueError("length mismatch in BitVector xor")
        return BitVector(self.length, self.value ^ other.value)


@dataclass(frozen=True)
class BitMatrix:
    """Dense matrix over F2 stored as packed bit rows (bit ``c`` = column ``c``)."""

    n_rows: int
    n_cols: int
    rows: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError("BitMatrix dimensions must be >= 1")
        if len(self.rows) != self.n_rows:
            raise ValueError("row count mismatch")
        mask = (1 << self.n_cols) - 1
        if any(r & ~mask for r in self.rows):
            raise ValueError("row has bits beyond n_cols")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "BitMatrix":
        packed = []
        width = len(rows[0])
        for row in rows:
            if len(row) != width:
                raise ValueError("ragged rows")
            packed.append(sum((b & 1) << c for c, b in enumerate(row)))
        return cls(n_rows=len(rows), n_cols=width, rows=tuple(packed))

    @classmethod
    def from_row_ints(cls, rows: Sequence[int], n_cols: int) -> "BitMatrix":
        return cls(n_rows=len(rows), n_cols=n_cols, rows=tuple(rows))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n_rows=n, n_cols=n, rows=tuple(1 << i for i in range(n)))

    @classmethod
    def zeros(cls, n_rows: int, n_cols: int) -> "BitMatrix":
        return cls(n_rows=n_rows, n_cols=n_cols, rows=(0,) * n_rows)

    @classmethod
    def from_encoding(cls, value: int, n_rows: int, n_cols: int) -> "BitMatrix":
        mask = (1 << n_cols) - 1
        rows = tuple((value >> (r * n_cols)) & mask for r in range(n_rows))
        return cls(n_rows=n_rows, n_cols=n_cols, rows=rows)

    @property
    def encoding(self) -> int:
        """Row-major bits as a little-endian integer (canonical identity)."""
        value = 0
        for r, row in enumerate(self.rows):
            value |= row << (r * self.n_cols)
        return value

    def to_text(self) -> str:
        return f"{self.n_rows}x{self.n_cols}:{self.encoding:x}"

    @classmethod
    def from_text(cls, text: str) -> "BitMatrix":
        shape, _, hexpart = text.partition(":")
        r, _, c = shape.partition("x")
        return cls.from_encoding(int(hexpart, 16), int(r), int(c))

    def entry(self, r: int, c: int) -> int:
        return (self.rows[r] >> c) & 1

    def to_lists(self) -> list[list[int]]:
        return [[self.entry(r, c) for c in range(self.n_cols)] for r in range(self.n_rows)]

    def stack(self, other: "BitMatrix") -> "BitMatrix":
        if self.n_cols != other.n_cols:
            raise ValueError("column mismatch in stack")
        return BitMatrix(self.n_rows + other.n_rows, self.n_cols, self.rows + other.rows)


def mul(a: BitMatrix, b: BitVector) -> BitVector:
    """Matrix-vector product over F2: result[i] = parity(a.rows[i] & b)."""
    if a.n_cols != b.length:
        raise ValueError(f"dimension mismatch: {a.n_rows}x{a.n_cols} with length-{b.length} vector")
    return BitVector(a.n_rows, mul_int(a.rows, b.value))


def mul_int(rows: Sequence[int], v: int) -> int:
    """Fast path of :func:`mul` on raw bit rows and a raw vector int."""
    out = 0
    for i, row in enumerate(rows):
        out |= _parity(row & v) << i
    return out


def mat_mul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    if a.n_cols != b.n_rows:
        raise ValueError("dimension mismatch in mat_mul")
    # column c of the product is a times column c of b
    out_rows = [0] * a.n_rows
    for c in range(b.n_cols):
        col = sum(((b.rows[k] >> c) & 1) << k for k in range(b.n_rows))
        prod = mul_int(a.rows, col)
        for r in range(a.n_rows):
            out_rows[r] |= ((prod >> r) & 1) << c
    return BitMatrix(a.n_rows, b.n_cols, tuple(out_rows))


def rank_rows(rows: Iterable[int]) -> int:
    """Row rank over F2 by greedy elimination on packed rows."""
    basis: list[int] = []
    for row in rows:
        x = row
        for b in basis:
            x = min(x, x ^ b)
        if x:
            basis.append(x)
            basis.sort(reverse=True)
    return len(basis)


def rank_f2(a: BitMatrix) -> int:
    return rank_rows(a.rows)


def det_f2(a: BitMatrix) -> int:
    """Determinant over F2: 1 iff the square matrix is invertible."""
    if a.n_rows != a.n_cols:
        raise ValueError("determinant requires a square matrix")
    return 1 if rank_rows(a.rows) == a.n_rows else 0


def inverse_f2(a: BitMatrix) -> BitMatrix:
    """Inverse over F2 via Gauss-Jordan on the augmented system."""
    if a.n_rows != a.n_cols:
        raise ValueError("inverse requires a square matrix")
    n = a.n_rows
    rows = list(a.rows)
    aug = [1 << i for i in range(n)]
    piv = 0
    for col in range(n):
        sel = next((r for r in range(piv, n) if (rows[r] >> col) & 1), None)
        if sel is None:
            raise SingularMatrixError("matrix is singular over F2")
        rows[piv], rows[sel] = rows[sel], rows[piv]
        aug[piv], aug[sel] = aug[sel], aug[piv]
        for r in range(n):
            if r != piv and (rows[r] >> col) & 1:
                rows[r] ^= rows[piv]
                aug[r] ^= aug[piv]
        piv += 1
    return BitMatrix(n, n, tuple(aug))


def solve(a: BitMatrix, b: BitVector) -> BitVector:
    """Solve ``a x = b`` over F2; requires full column rank for uniqueness.

    Raises InconsistentSystemError when no solution exists and
    SingularMatrixError when the solution is not unique.
    """
    if a.n_rows != b.length:
        raise ValueError("dimension mismatch in solve")
    n, m = a.n_rows, a.n_cols
    rows = [(a.rows[r], (b.value >> r) & 1) for r in range(n)]
    pivots: list[tuple[int, int]] = []  # (col, row index into reduced list)
    reduced: list[tuple[int, int]] = []
    for row, rhs in rows:
        x, y = row, rhs
        for (col, idx) in pivots:
            if (x >> col) & 1:
                px, py = reduced[idx]
                x ^= px
                y ^= py
        if x == 0:
            if y:
                raise InconsistentSystemError("system has no solution over F2")
            continue
        col = (x & -x).bit_length() - 1
        pivots.append((col, len(reduced)))
        reduced.append((x, y))
    if len(reduced) < m:
        raise SingularMatrixError("solution not unique: rank below n_cols")
    # back-substitute to full reduction
    for i in range(len(reduced) - 1, -1, -1):
        col, idx = pivots[i]
        for j in range(i):
            xj, yj = reduced[j]
            if (xj >> col) & 1:
                reduced[j] = (xj ^ reduced[idx][0], yj ^ reduced[idx][1])
    value = 0
    for (col, idx) in pivots:
        value |= reduced[idx][1] << col
    return BitVector(m, value)


def enumerate_matrices(n_rows: int, n_cols: int, max_bits: int = 24) -> Iterator[BitMatrix]:
    """Yield all 2^(rows*cols) matrices in ascending canonical encoding order."""
    bits = n_rows * n_cols
    if bits > max_bits:
        raise EnumerationTooLargeError(
            f"{n_rows}x{n_cols} enumeration is {bits} bits; cap is {max_bits}"
        )
    for value in range(1 << bits):
        yield BitMatrix.from_encoding(value, n_rows, n_cols)


def rref_rows(rows: Sequence[int], n_cols: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    work = list(rows)
    pivots: list[int] = []
    piv = 0
    for col in range(n_cols):
        sel = next((r for r in range(piv, len(work)) if (work[r] >> col) & 1), None)
        if sel is None:
            continue
        work[piv], work[sel] = work[sel], work[piv]
        for r in range(len(work)):
            if r != piv and (work[r] >> col) & 1:
                work[r] ^= work[piv]
        pivots.append(col)
        piv += 1
    return tuple(work[:piv]), tuple(pivots)


def nullspace(rows: Sequence[int], n_cols: int) -> tuple[int, ...]:
    """Basis of {v : parity(row & v) == 0 for every row}, as packed ints."""
    reduced, pivots = rref_rows(rows, n_cols)
    pivot_set = set(pivots)
    free_cols = [c for c in range(n_cols) if c not in pivot_set]
    basis = []
    for fc in free_cols:
        v = 1 << fc
        for r, pc in enumerate(pivots):
            if (reduced[r] >> fc) & 1:
                v |= 1 << pc
        basis.append(v)
    return tuple(basis)


def span(basis: Sequence[int]) -> tuple[int, ...]:
    """All 2^len(basis) combinations of an independent basis, xor-walk order."""
    out = [0]
    for b in basis:
        out += [x ^ b for x in out]
    return tuple(out)


def in_span(basis: Sequence[int], v: int) -> bool:
    x = v
    for b in sorted(basis, reverse=True):
        x = min(x, x ^ b)
    return x == 0


def enumerate_subspaces(basis: Sequence[int], dim: int) -> Iterator[tuple[int, ...]]:
    """Yield every ``dim``-dimensional subspace of span(basis).

    Each subspace is produced once, as the tuple of its canonical RREF basis
    rows expressed in the ambient coordinates.  Enumeration is by RREF shape
    over the coordinates of ``basis``: choose pivot columns, then the free
    entries right of each pivot.
    """
    w = len(basis)
    if dim < 0 or dim > w:
        return
    if dim == 0:
        yield ()
        return

    from itertools import combinations

    for pivots in combinations(range(w), dim):
        pivot_set = set(pivots)
        # free coordinate positions per row: columns right of the pivot that
        # are not pivots themselves
        free = [[c for c in range(p + 1, w) if c not in pivot_set] for p in pivots]
        counts = [len(f) for f in free]
        total = 1 << sum(counts)
        for mask in range(total):
            rows_coord = []
            shift = 0
            for i, p in enumerate(pivots):
                row = 1 << p
                for j, c in enumerate(free[i]):
                    if (mask >> (shift + j)) & 1:
                        row |= 1 << c
                shift += counts[i]
                rows_coord.append(row)
            # map coordinate rows through the ambient basis
            rows_amb = []
            for row in rows_coord:
                v = 0
                for c in range(w):
                    if (row >> c) & 1:
                        v ^= basis[c]
                rows_amb.append(v)
            yield tuple(rows_amb)
