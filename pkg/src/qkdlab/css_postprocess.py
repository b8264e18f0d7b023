"""Classical reconciliation and privacy amplification from a CSS code pair.

Bit strings are numpy ``uint8`` arrays of 0/1.  A :class:`CssPair` holds codes
``C2 <= C1``: Bob decodes to the nearest ``C1`` codeword and both parties keep
the ``C2`` coset of that codeword as the key.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._errors import ContractViolation, ParameterError


def _bits(x) -> np.ndarray:
    return np.asarray(x, dtype=np.uint8) & 1


# --- GF(2) linear algebra ---------------------------------------------------

def rref(mat):
    """Reduced row echelon form over GF(2).  Returns ``(reduced, pivot_columns)``."""
    a = _bits(mat).copy()
    if a.ndim != 2:
        raise ValueError("expected a 2-d bit matrix")
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(a[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        others = np.nonzero(a[:, c])[0]
        others = others[others != r]
        a[others] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(mat) -> int:
    return len(rref(mat)[1])


def nullspace(mat) -> np.ndarray:
    """Basis (as rows) of ``{x : mat @ x = 0}`` over GF(2)."""
    a, pivots = rref(mat)
    cols = a.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, pc in enumerate(pivots):
            basis[i, pc] = a[row, f]
    return basis


def solve_left(basis, word):
    """Coefficients ``c`` with ``c @ basis = word`` over GF(2), or ``None``."""
    basis = _bits(basis)
    word = _bits(word)
    k = basis.shape[0]
    aug = np.concatenate([basis.T, word[:, None]], axis=1)
    red, pivots = rref(aug)
    if k in pivots:
        return None
    coeffs = np.zeros(k, dtype=np.uint8)
    for row, pc in enumerate(pivots):
        coeffs[pc] = red[row, k]
    return coeffs


# --- codes ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BinaryCode:
    """Binary linear ``[n, k]`` code with generator and parity-check matrices."""

    generator: np.ndarray
    parity_check: np.ndarray
    _table: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        g, h = _bits(self.generator), _bits(self.parity_check)
        object.__setattr__(self, "generator", g)
        object.__setattr__(self, "parity_check", h)
        if g.shape[1] != h.shape[1]:
            raise ContractViolation("generator and parity check have different lengths")
        if np.any((g.astype(np.int64) @ h.T.astype(np.int64)) & 1):
            raise ContractViolation("generator rows violate the parity checks")
        if rank(g) != g.shape[0]:
            raise ContractViolation("generator rows are linearly dependent")
        if rank(g) + rank(h) != g.shape[1]:
            raise ContractViolation("parity check does not cut out exactly the generated code")

    @classmethod
    def from_generator(cls, generator) -> "BinaryCode":
        g = _bits(generator)
        return cls(g, nullspace(g))

    @classmethod
    def from_parity_check(cls, parity_check) -> "BinaryCode":
        h = _bits(parity_check)
        return cls(nullspace(h), h)

    @property
    def n(self) -> int:
        return self.generator.shape[1]

    @property
    def k(self) -> int:
        return self.generator.shape[0]

    def codewords(self) -> np.ndarray:
        msgs = np.array(list(itertools.product((0, 1), repeat=self.k)), dtype=np.int64).reshape(-1, self.k)
        return ((msgs @ self.generator.astype(np.int64)) & 1).astype(np.uint8)

    def contains(self, word) -> bool:
        return not syndrome(self, word).any()

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k,
                "generator": self.generator.tolist(),
                "parity_check": self.parity_check.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "BinaryCode":
        return cls(np.array(data["generator"]), np.array(data["parity_check"]))


def syndrome(code: BinaryCode, word) -> np.ndarray:
    word = _bits(word)
    if word.shape[-1] != code.n:
        raise ParameterError(f"word has length {word.shape[-1]}, code has length {code.n}")
    return ((code.parity_check.astype(np.int64) @ word.astype(np.int64)) & 1).astype(np.uint8)


def _coset_leaders(code: BinaryCode) -> dict:
    """Map syndrome -> minimum-weight error pattern (as a sorted support tuple).

    Among equal-weight patterns the lexicographically smallest bit string wins,
    i.e. the one whose integer value with bit 0 as the most significant is least.
    """
    if code._table:
        return code._table
    n, r = code.n, code.n - code.k
    if n > 24:
        raise ParameterError(f"exhaustive decoding supports n <= 24, got {n}")
    h = code.parity_check.astype(np.int64)
    # pack each column into an integer so a syndrome is an xor of column ints
    weights = 1 << np.arange(r)[::-1]
    colint = [int(v) for v in (h.T @ weights)] if r else [0] * n
    table = {}
    needed = 1 << r
    for w in range(n + 1):
        best = {}
        for support in itertools.combinations(range(n), w):
            s = 0
            for i in support:
                s ^= colint[i]
            if s in table:
                continue
            value = sum(1 << (n - 1 - i) for i in support)
            if s not in best or value < best[s][0]:
                best[s] = (value, support)
        table.update({s: support for s, (_, support) in best.items()})
        if len(table) == needed:
            break
    code._table.update(table)
    return code._table


def decode_nearest(code: BinaryCode, word) -> np.ndarray:
    """Nearest codeword to ``word`` (syndrome decoding with minimum-weight leaders)."""
    word = _bits(word)
    s = syndrome(code, word)
    key = int(s @ (1 << np.arange(s.size)[::-1])) if s.size else 0
    out = word.copy()
    out[list(_coset_leaders(code)[key])] ^= 1
    return out


@dataclass(frozen=True, eq=False)
class CssPair:
    """Nested codes ``c2 <= c1``; the key is the ``c2``-coset of a ``c1`` codeword.

    ``coset_basis`` holds ``c1.k - c2.k`` codewords of ``c1`` that, together with
    the rows of ``c2.generator``, form a basis of ``c1``.
    """

    c1: BinaryCode
    c2: BinaryCode
    coset_basis: np.ndarray

    def __post_init__(self):
        cb = _bits(self.coset_basis).reshape(-1, self.c1.n)
        object.__setattr__(self, "coset_basis", cb)
        if self.c2.n != self.c1.n:
            raise ContractViolation("codes have different lengths")
        for row in self.c2.generator:
            if not self.c1.contains(row):
                raise ContractViolation("c2 is not a subcode of c1")
        if cb.shape[0] != self.c1.k - self.c2.k or cb.shape[0] < 1:
            raise ContractViolation("coset basis must have k1 - k2 >= 1 rows")
        full = np.concatenate([self.c2.generator, cb])
        if rank(full) != self.c1.k or any(not self.c1.contains(row) for row in cb):
            raise ContractViolation("c2 generators plus coset basis do not span c1")

    @property
    def n(self) -> int:
        return self.c1.n

    @property
    def k(self) -> int:
        return self.coset_basis.shape[0]

    def to_dict(self) -> dict:
        return {"c1": self.c1.to_dict(), "c2": self.c2.to_dict(),
                "coset_basis": self.coset_basis.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "CssPair":
        return cls(BinaryCode.from_dict(data["c1"]), BinaryCode.from_dict(data["c2"]),
                   np.array(data["coset_basis"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "CssPair":
        return cls.from_dict(json.loads(text))


def hamming_parity_check(r: int = 3) -> np.ndarray:
    """Columns are the binary expansions of 1 .. 2**r - 1."""
    n = 2**r - 1
    return np.array([[(j >> (r - 1 - i)) & 1 for j in range(1, n + 1)] for i in range(r)],
                    dtype=np.uint8)


def steane_css() -> CssPair:
    """The [7,4] Hamming code over its [7,3] dual, carrying one key bit per block."""
    h = hamming_parity_check(3)
    c1 = BinaryCode.from_parity_check(h)
    c2 = BinaryCode.from_generator(h)
    return CssPair(c1, c2, np.ones((1, 7), dtype=np.uint8))


def random_css(n: int, k1: int, k2: int, rng: np.random.Generator) -> CssPair:
    """Random nested pair: ``c1`` from a random full-rank generator, ``c2`` its first ``k2`` rows."""
    if not 0 <= k2 < k1 <= n:
        raise ParameterError(f"need 0 <= k2 < k1 <= n, got n={n}, k1={k1}, k2={k2}")
    if n > 24:
        raise ParameterError("random CSS pairs are limited to n <= 24 (exhaustive decoding)")
    while True:
        g = rng.integers(0, 2, size=(k1, n), dtype=np.uint8)
        if rank(g) == k1:
            break
    c1 = BinaryCode.from_generator(g)
    if k2:
        c2 = BinaryCode.from_generator(g[:k2])
    else:
        c2 = BinaryCode(np.zeros((0, n), dtype=np.uint8), np.eye(n, dtype=np.uint8))
    return CssPair(c1, c2, g[k2:])


def coset_label(pair: CssPair, v) -> np.ndarray:
    """Key bits of the ``c2``-coset containing the ``c1`` codeword ``v``."""
    v = _bits(v)
    basis = np.concatenate([pair.c2.generator, pair.coset_basis])
    coeffs = solve_left(basis, v)
    if coeffs is None:
        raise ContractViolation("word is not a codeword of c1")
    return coeffs[pair.c2.k:]


def random_codeword(code: BinaryCode, rng: np.random.Generator) -> np.ndarray:
    msg = rng.integers(0, 2, size=code.k, dtype=np.int64)
    return ((msg @ code.generator.astype(np.int64)) & 1).astype(np.uint8)


def reconcile_alice(pair: CssPair, alice_bits, rng):
    """Alice picks a random ``v`` in ``c1``; returns ``(announced = u + v, key)``."""
    u = _bits(alice_bits)
    if u.size != pair.n:
        raise ParameterError(f"block has length {u.size}, code has length {pair.n}")
    v = random_codeword(pair.c1, rng)
    return u ^ v, coset_label(pair, v)


def reconcile_bob(pair: CssPair, bob_bits, announced) -> np.ndarray:
    """Bob decodes ``bob_bits + announced`` to ``c1`` and takes its coset."""
    b = _bits(bob_bits)
    if b.size != pair.n:
        raise ParameterError(f"block has length {b.size}, code has length {pair.n}")
    return coset_label(pair, decode_nearest(pair.c1, b ^ _bits(announced)))


def reconcile_and_extract(pair: CssPair, alice_bits, bob_bits, rng):
    """One block of reconciliation.  Returns ``(key_a, key_b, announced)``."""
    if len(alice_bits) != len(bob_bits):
        raise ParameterError("Alice's and Bob's blocks differ in length")
    announced, key_a = reconcile_alice(pair, alice_bits, rng)
    return key_a, reconcile_bob(pair, bob_bits, announced), announced


# --- batched versions for Monte-Carlo ------------------------------------------

def decode_nearest_batch(code: BinaryCode, words) -> np.ndarray:
    """Row-wise :func:`decode_nearest` for a ``(blocks, n)`` array, same tie-breaks."""
    words = _bits(words)
    if words.ndim != 2 or words.shape[1] != code.n:
        raise ParameterError(f"expected shape (blocks, {code.n}), got {words.shape}")
    table = _coset_leaders(code)
    r = code.n - code.k
    leaders = np.zeros((1 << r, code.n), dtype=np.uint8)
    for key, support in table.items():
        leaders[key, list(support)] = 1
    syn = (words.astype(np.int64) @ code.parity_check.T.astype(np.int64)) & 1
    keys = syn @ (1 << np.arange(r)[::-1]) if r else np.zeros(len(words), dtype=np.int64)
    return words ^ leaders[keys]


def coset_labels(pair: CssPair, words) -> np.ndarray:
    """Row-wise :func:`coset_label` for a ``(blocks, n)`` array of ``c1`` codewords."""
    words = _bits(words)
    if words.ndim != 2 or words.shape[1] != pair.n:
        raise ParameterError(f"expected shape (blocks, {pair.n}), got {words.shape}")
    if np.any((words.astype(np.int64) @ pair.c1.parity_check.T.astype(np.int64)) & 1):
        raise ContractViolation("word is not a codeword of c1")
    basis = np.concatenate([pair.c2.generator, pair.coset_basis])
    _, pivots = rref(basis)
    sub = basis[:, pivots]
    # coefficients c of v = c @ basis are read off the pivot columns: c = v[pivots] @ sub^-1
    inv = np.array([solve_left(sub, row) for row in np.eye(len(pivots), dtype=np.uint8)])
    coeffs = (words[:, pivots].astype(np.int64) @ inv.astype(np.int64)) & 1
    return coeffs[:, pair.c2.k:].astype(np.uint8)


def reconcile_blocks(pair: CssPair, alice_blocks, bob_blocks, rng):
    """Many independent blocks at once.  Returns ``(keys_a, keys_b, announced)``."""
    a, b = _bits(alice_blocks), _bits(bob_blocks)
    if a.shape != b.shape or a.ndim != 2 or a.shape[1] != pair.n:
        raise ParameterError(f"expected two arrays of shape (blocks, {pair.n})")
    msg = rng.integers(0, 2, size=(len(a), pair.c1.k), dtype=np.int64)
    v = ((msg @ pair.c1.generator.astype(np.int64)) & 1).astype(np.uint8)
    announced = a ^ v
    keys_b = coset_labels(pair, decode_nearest_batch(pair.c1, b ^ announced))
    return coset_labels(pair, v), keys_b, announced


def scramble(words, rng: np.random.Generator):
    """Apply a uniformly random permutation.  Returns ``(permuted, permutation)``."""
    words = np.asarray(words)
    perm = rng.permutation(len(words))
    return words[perm], perm


def unscramble(permuted, permutation):
    out = np.empty_like(np.asarray(permuted))
    out[np.asarray(permutation)] = permuted
    return out


def sample_bound(n_keys: int, p: float, eps_prime: float, mode: str = "simple",
                 sample: int | None = None, population: int | None = None) -> float:
    """Bound on the chance that the untested error fraction exceeds ``p + eps_prime``.

    ``mode="simple"`` tests ``n_keys/2`` of ``3 n_keys / 2`` pairs.
    ``mode="general"`` tests ``sample`` out of ``population``.
    """
    if not 0.0 < p < 1.0:
        raise ParameterError(f"p must lie in (0, 1), got {p}")
    if eps_prime < 0:
        raise ParameterError(f"eps_prime must be >= 0, got {eps_prime}")
    var = p * (1.0 - p)
    if mode == "simple":
        if n_keys <= 0:
            raise ParameterError(f"n_keys must be positive, got {n_keys}")
        exponent = n_keys * eps_prime**2 / (9.0 * var)
    elif mode == "general":
        if sample is None or population is None or not 0 < sample < population:
            raise ParameterError("general mode needs 0 < sample < population")
        m, big_n = sample, population
        exponent = m * (big_n - m) ** 2 * eps_prime**2 / (2.0 * big_n**2 * var)
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    return min(1.0, math.exp(-exponent))
