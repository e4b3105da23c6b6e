"""Bit-packed vectors, matrices and binary linear codes.

Encoding convention, used everywhere in the package: coordinate ``i`` of a
vector in F2^n is bit ``i`` of its integer encoding (little-endian). Text
renderings list coordinates left to right starting at coordinate 0, so the
string ``"110"`` encodes the integer 3.

Matrix rows are packed into one 64-bit word each, so the number of columns is
limited to 64. Dense 2^n computations elsewhere cap n far below that.
"""
from __future__ import annotations

from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from smoothlab import kernels

WORD_BITS = 64
MAX_CODE_N = 26
MAX_ENUM_K = 28
MAX_SAMPLING_RETRIES = 1000
_CHUNK_BITS = 20


class CapExceeded(ValueError):
    """An exhaustive computation was refused because a size cap was exceeded."""


def _check_len(n: int) -> None:
    if not 1 <= n <= WORD_BITS:
        raise ValueError(f"length must be in [1, {WORD_BITS}], got {n}")


def _parse_bits(bits: str | Sequence[int]) -> list[int]:
    if isinstance(bits, str):
        bits = bits.strip()
        if any(ch not in "01" for ch in bits):
            raise ValueError(f"not a 0/1 string: {bits!r}")
        return [int(ch) for ch in bits]
    out = [int(b) for b in bits]
    if any(b not in (0, 1) for b in out):
        raise ValueError("bits must be 0 or 1")
    return out


def pack(bits: Sequence[int]) -> int:
    word = 0
    for i, b in enumerate(bits):
        if b:
            word |= 1 << i
    return word


def unpack(word: int, n: int) -> list[int]:
    return [(word >> i) & 1 for i in range(n)]


class GF2Vector:
    """Immutable vector in F2^n stored as a packed integer."""

    __slots__ = ("_bits", "_n")

    def __init__(self, bits: int, n: int):
        _check_len(n)
        bits = int(bits)
        if bits < 0 or bits >> n:
            raise ValueError(f"bits {bits:#x} do not fit in length {n}")
        object.__setattr__(self, "_bits", bits)
        object.__setattr__(self, "_n", n)

    def __setattr__(self, name, value):
        raise AttributeError("GF2Vector is immutable")

    @property
    def bits(self) -> int:
        return self._bits

    @property
    def n(self) -> int:
        return self._n

    @classmethod
    def from_bits(cls, bits: str | Sequence[int]) -> GF2Vector:
        parsed = _parse_bits(bits)
        return cls(pack(parsed), len(parsed))

    @classmethod
    def zeros(cls, n: int) -> GF2Vector:
        return cls(0, n)

    @property
    def weight(self) -> int:
        return self._bits.bit_count()

    def __len__(self) -> int:
        return self._n

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self._n:
            raise IndexError(f"index {i} out of range for length {self._n}")
        return (self._bits >> i) & 1

    def __xor__(self, other: GF2Vector) -> GF2Vector:
        if other.n != self._n:
            raise ValueError(f"length mismatch: {self._n} vs {other.n}")
        return GF2Vector(self._bits ^ other.bits, self._n)

    def dot(self, other: GF2Vector) -> int:
        if other.n != self._n:
            raise ValueError(f"length mismatch: {self._n} vs {other.n}")
        return (self._bits & other.bits).bit_count() & 1

    def to_list(self) -> list[int]:
        return unpack(self._bits, self._n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GF2Vector):
            return NotImplemented
        return self._n == other.n and self._bits == other.bits

    def __hash__(self) -> int:
        return hash((self._bits, self._n))

    def __str__(self) -> str:
        return "".join(str(b) for b in self.to_list())

    def __repr__(self) -> str:
        return f"GF2Vector('{self}')"


class GF2Matrix:
    """Immutable k x n matrix over F2, one packed uint64 word per row."""

    __slots__ = ("_words", "_cols")

    def __init__(self, words: Iterable[int] | np.ndarray, cols: int):
        _check_len(cols)
        arr = np.array([int(w) for w in words], dtype=np.uint64) if not isinstance(words, np.ndarray) \
            else words.astype(np.uint64, copy=True)
        if arr.ndim != 1:
            raise ValueError("words must be one-dimensional")
        if cols < WORD_BITS and arr.size and int(arr.max()) >> cols:
            raise ValueError(f"row words do not fit in {cols} columns")
        arr.setflags(write=False)
        object.__setattr__(self, "_words", arr)
        object.__setattr__(self, "_cols", cols)

    def __setattr__(self, name, value):
        raise AttributeError("GF2Matrix is immutable")

    @classmethod
    def from_rows(cls, rows: Sequence[str | Sequence[int]], cols: int | None = None) -> GF2Matrix:
        parsed = [_parse_bits(r) for r in rows]
        if cols is None:
            if not parsed:
                raise ValueError("cannot infer column count of an empty matrix")
            cols = len(parsed[0])
        if any(len(r) != cols for r in parsed):
            raise ValueError("ragged rows")
        return cls([pack(r) for r in parsed], cols)

    @classmethod
    def identity(cls, n: int) -> GF2Matrix:
        return cls([1 << i for i in range(n)], n)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> GF2Matrix:
        return cls([0] * rows, cols)

    @property
    def rows(self) -> int:
        return int(self._words.shape[0])

    @property
    def cols(self) -> int:
        return self._cols

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self._cols

    @property
    def words(self) -> np.ndarray:
        """Read-only uint64 array of packed rows."""
        return self._words

    def row(self, i: int) -> GF2Vector:
        return GF2Vector(int(self._words[i]), self._cols)

    def __getitem__(self, idx: tuple[int, int]) -> int:
        i, j = idx
        if not (0 <= i < self.rows and 0 <= j < self._cols):
            raise IndexError(f"index {idx} out of range for shape {self.shape}")
        return (int(self._words[i]) >> j) & 1

    def column_words(self) -> np.ndarray:
        """Packed columns: bit r of entry j is M[r, j]."""
        cols = np.zeros(self._cols, dtype=np.uint64)
        for r, word in enumerate(self._words):
            word = int(word)
            for j in range(self._cols):
                if (word >> j) & 1:
                    cols[j] |= np.uint64(1 << r)
        return cols

    def transpose(self) -> GF2Matrix:
        if self.rows == 0:
            raise ValueError("cannot transpose a matrix with no rows")
        return GF2Matrix(self.column_words(), self.rows)

    def vstack(self, other: GF2Matrix) -> GF2Matrix:
        if other.cols != self._cols:
            raise ValueError(f"column mismatch: {self._cols} vs {other.cols}")
        return GF2Matrix(np.concatenate([self._words, other.words]), self._cols)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.uint8)
        for i, word in enumerate(self._words):
            out[i] = unpack(int(word), self._cols)
        return out

    def rank(self) -> int:
        return len(_echelon_basis(int(w) for w in self._words))

    def rref(self) -> tuple[GF2Matrix, list[int]]:
        """Reduced row echelon form (nonzero rows only) and pivot columns."""
        rows, pivots = _rref(int(w) for w in self._words)
        return GF2Matrix(rows, self._cols), pivots

    def combination(self, coeffs: int) -> int:
        """XOR of the rows selected by the set bits of ``coeffs`` (i.e. M^T m)."""
        acc = 0
        i = 0
        while coeffs:
            if coeffs & 1:
                acc ^= int(self._words[i])
            coeffs >>= 1
            i += 1
        return acc

    def __eq__(self, other) -> bool:
        if not isinstance(other, GF2Matrix):
            return NotImplemented
        return self._cols == other.cols and np.array_equal(self._words, other.words)

    def __hash__(self) -> int:
        return hash((self._cols, self._words.tobytes()))

    def __repr__(self) -> str:
        body = ", ".join(f"'{GF2Vector(int(w), self._cols)}'" for w in self._words)
        return f"GF2Matrix.from_rows([{body}], cols={self._cols})"


def _echelon_basis(words: Iterable[int]) -> dict[int, int]:
    """Map leading bit -> basis word for the span of ``words``."""
    basis: dict[int, int] = {}
    for w in words:
        while w:
            lead = w.bit_length() - 1
            if lead not in basis:
                basis[lead] = w
                break
            w ^= basis[lead]
    return basis


def _rref(words: Iterable[int]) -> tuple[list[int], list[int]]:
    rows = [w for w in words]
    pivots: list[int] = []
    r = 0
    width = max((w.bit_length() for w in rows), default=0)
    for col in range(width):
        mask = 1 << col
        pivot = next((i for i in range(r, len(rows)) if rows[i] & mask), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] & mask:
                rows[i] ^= rows[r]
        pivots.append(col)
        r += 1
    return rows[:r], pivots


def nullspace(M: GF2Matrix) -> GF2Matrix:
    """Basis of {x : M x = 0}, one basis vector per row."""
    reduced, pivots = _rref(int(w) for w in M.words)
    pivot_set = set(pivots)
    basis = []
    for free in range(M.cols):
        if free in pivot_set:
            continue
        vec = 1 << free
        for row, col in zip(reduced, pivots):
            if (row >> free) & 1:
                vec |= 1 << col
        basis.append(vec)
    return GF2Matrix(basis, M.cols)


def mat_vec_mul(M: GF2Matrix, v: GF2Vector) -> GF2Vector:
    if v.n != M.cols:
        raise ValueError(f"dimension mismatch: matrix has {M.cols} columns, vector length {v.n}")
    out = 0
    for i, word in enumerate(M.words):
        out |= ((int(word) & v.bits).bit_count() & 1) << i
    return GF2Vector(out, M.rows)


class LinearCode:
    """Binary [n, k] code given by a full-rank generator and a parity-check matrix."""

    def __init__(self, gen: GF2Matrix, parity: GF2Matrix | None = None):
        n = gen.cols
        if parity is None:
            parity = nullspace(gen) if gen.rows else GF2Matrix.identity(n)
        if parity.cols != n:
            raise ValueError("generator and parity-check lengths differ")
        if gen.rank() != gen.rows:
            raise ValueError("generator matrix is not full row rank")
        if parity.rank() != parity.rows:
            raise ValueError("parity-check matrix is not full row rank")
        if gen.rows + parity.rows != n:
            raise ValueError(f"dimensions do not add up: {gen.rows} + {parity.rows} != {n}")
        for g in gen.words:
            for h in parity.words:
                if (int(g) & int(h)).bit_count() & 1:
                    raise ValueError("generator rows are not orthogonal to parity-check rows")
        self.gen = gen
        self.parity = parity

    @classmethod
    def from_generator(cls, rows: Sequence[str | Sequence[int]] | GF2Matrix) -> LinearCode:
        gen = rows if isinstance(rows, GF2Matrix) else GF2Matrix.from_rows(rows)
        return cls(gen)

    @property
    def n(self) -> int:
        return self.gen.cols

    @property
    def k(self) -> int:
        return self.gen.rows

    @property
    def size(self) -> int:
        return 1 << self.k

    def __repr__(self) -> str:
        return f"LinearCode(n={self.n}, k={self.k})"

    def codewords(self) -> np.ndarray:
        """All 2^k codewords as uint64; index m holds G^T m."""
        _check_enum(self.k)
        if self.k > _CHUNK_BITS:
            raise CapExceeded(f"materializing 2^{self.k} codewords; use weight_distribution instead")
        return kernels.span_images(self.gen.words)

    def contains(self, x: GF2Vector | int) -> bool:
        bits = x.bits if isinstance(x, GF2Vector) else int(x)
        return all((int(h) & bits).bit_count() % 2 == 0 for h in self.parity.words)

    @cached_property
    def min_dist(self) -> int:
        return min_distance(self)

    @cached_property
    def dual_min_dist(self) -> int:
        return min_distance(dual_code(self))

    def to_text(self) -> str:
        lines = [f"{self.n} {self.k}"]
        lines += [str(self.gen.row(i)) for i in range(self.k)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> LinearCode:
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty code file")
        try:
            n, k = (int(tok) for tok in lines[0].split())
        except ValueError:
            raise ValueError(f"bad header line {lines[0]!r}, expected 'n k'") from None
        rows = lines[1:]
        if len(rows) != k:
            raise ValueError(f"header says k={k} but {len(rows)} rows follow")
        for r in rows:
            if len(r) != n:
                raise ValueError(f"ragged row {r!r}: expected length {n}")
        if k == 0:
            return cls(GF2Matrix([], n))
        return cls(GF2Matrix.from_rows(rows, cols=n))


def save_code(code: LinearCode, path: str | Path) -> None:
    Path(path).write_text(code.to_text())


def load_code(path: str | Path) -> LinearCode:
    return LinearCode.from_text(Path(path).read_text())


def dual_code(C: LinearCode) -> LinearCode:
    return LinearCode(C.parity, C.gen)


def _check_enum(k: int, cap: int = MAX_ENUM_K) -> None:
    if k > cap:
        raise CapExceeded(f"exhaustive enumeration over 2^{k} codewords exceeds the cap 2^{cap}")


def _codeword_chunks(gen: GF2Matrix):
    words = gen.words
    low, high = words[:_CHUNK_BITS], words[_CHUNK_BITS:]
    base = kernels.span_images(low)
    for offset in kernels.span_images(high):
        yield base ^ offset


def weight_distribution(C: LinearCode, cap: int = MAX_ENUM_K) -> np.ndarray:
    """Counts of codewords of each weight 0..n, by exhaustive enumeration."""
    _check_enum(C.k, cap)
    counts = np.zeros(C.n + 1, dtype=np.int64)
    for chunk in _codeword_chunks(C.gen):
        counts += np.bincount(kernels.popcount(chunk), minlength=C.n + 1)
    return counts


def min_distance(C: LinearCode, cap: int = MAX_ENUM_K) -> int:
    """Exact minimum weight of a nonzero codeword.

    The trivial code {0} has no nonzero codeword; by convention its distance
    is reported as ``n + 1``.
    """
    if C.k == 0:
        return C.n + 1
    dist = weight_distribution(C, cap)
    return int(np.flatnonzero(dist[1:])[0]) + 1


def min_distance_search(C: LinearCode) -> int:
    """Minimum distance by increasing-weight search for a zero syndrome.

    Independent of the generator enumeration: tests weight-w vectors against
    the parity-check matrix and stops at the first codeword found.
    """
    from itertools import combinations

    checks = [int(h) for h in C.parity.words]
    for w in range(1, C.n + 1):
        for support in combinations(range(C.n), w):
            x = 0
            for j in support:
                x |= 1 << j
            if all((h & x).bit_count() % 2 == 0 for h in checks):
                return w
    return C.n + 1


def random_linear_code(n: int, k: int, seed: int | np.random.Generator) -> LinearCode:
    """Uniformly random full-rank [n, k] code, sampled by rejection."""
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got n={n}, k={k}")
    if n > MAX_CODE_N:
        raise CapExceeded(f"n={n} exceeds the code length cap {MAX_CODE_N}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    for _ in range(MAX_SAMPLING_RETRIES):
        rows = rng.integers(0, 1 << n, size=k, dtype=np.uint64)
        if len(_echelon_basis(int(r) for r in rows)) == k:
            return LinearCode(GF2Matrix(rows, n))
    raise RuntimeError(f"no full-rank {k}x{n} matrix after {MAX_SAMPLING_RETRIES} draws")
