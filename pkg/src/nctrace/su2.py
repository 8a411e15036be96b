"""Irreducible matrix models for the three normalized rotation generators.

Each half-integer spin l gives a (2l+1) x (2l+1) block carrying generators
gens = (D1, D2, D3) with [D1, D2] = 2i D3 cyclically, D1 diagonal and Casimir
D1^2+D2^2+D3^2 = 4 l(l+1) I. The normalized generators b_k = D_k / sqrt(4l(l+1))
commute up to norm 1/(l+1), so words in them converge, block by block, to
commuting variables on the unit 2-sphere: the module measures that convergence
(diagonal pinchings against the Beta closed form, block norms against sup
norms, trace ratios against sphere integrals).

All limit quantities are invariant under the overall scale of the generators,
which is why the block construction can fix D = 2J without loss.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import exp, lgamma
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .sphere import SpherePoly, sphere_integrate

# ordered so the diagonal one comes first, matching gens[0]
PAULI_TRIPLE = (
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
)


@dataclass(frozen=True, order=True)
class HalfInteger:
    """l = twice_value / 2, stored exactly."""

    twice_value: int

    def __post_init__(self):
        if not isinstance(self.twice_value, int) or self.twice_value < 0:
            raise ValueError("twice_value must be a nonnegative integer")

    @property
    def value(self) -> float:
        return self.twice_value / 2.0

    @property
    def dim(self) -> int:
        return self.twice_value + 1

    def l_squared(self) -> float:
        """l(l+1), exact: twice(twice+2)/4 is a dyadic rational."""
        return self.twice_value * (self.twice_value + 2) / 4.0

    def __str__(self) -> str:
        t = self.twice_value
        return str(t // 2) if t % 2 == 0 else f"{t}/2"


def _as_half(l) -> HalfInteger:
    if isinstance(l, HalfInteger):
        return l
    if isinstance(l, int):
        return HalfInteger(2 * l)
    raise TypeError("spin must be a HalfInteger or a plain integer")


@dataclass(frozen=True)
class IrrepBlock:
    l: HalfInteger
    gens: np.ndarray  # shape (3, dim, dim); gens[0] diagonal

    @property
    def dim(self) -> int:
        return self.l.dim

    @property
    def laplacian_eig(self) -> float:
        return self.l.l_squared()

    @property
    def peter_weyl_weight(self) -> int:
        return self.l.dim**2

    @property
    def casimir_scalar(self) -> float:
        """The scalar value of gens[0]^2 + gens[1]^2 + gens[2]^2."""
        return 4.0 * self.l.l_squared()

    @property
    def unit_gens(self) -> np.ndarray:
        """b_k = D_k / sqrt(4 l(l+1)); satisfy sum b_k^2 = I."""
        return self.gens / np.sqrt(self.casimir_scalar)

    @property
    def unit_spectrum(self) -> np.ndarray:
        """Eigenvalues of unit_gens[0]: m / sqrt(l(l+1)), m = -l..l."""
        return np.real(np.diag(self.unit_gens[0]))


def build_block(l) -> IrrepBlock:
    """Ladder construction of the spin-l block, first generator diagonal.

    The raising operator acts by sqrt(l(l+1) - m(m+1)) on the basis ordered by
    ascending weight m; D = (2 Jz, 2 Jx, 2 Jy) gives [D1, D2] = 2i D3 cyclic
    with D1 = diag(-2l ... 2l).
    """
    half = _as_half(l)
    if half.twice_value < 1:
        raise ValueError("need l >= 1/2")
    dim = half.dim
    m = (np.arange(dim) - half.value).astype(float)
    ll = half.l_squared()
    jz = np.diag(m).astype(complex)
    jp = np.zeros((dim, dim), dtype=complex)
    jp[np.arange(1, dim), np.arange(dim - 1)] = np.sqrt(ll - m[:-1] * (m[:-1] + 1.0))
    jm = jp.conj().T
    jx = (jp + jm) / 2.0
    jy = (jp - jm) / 2.0j
    return IrrepBlock(half, 2.0 * np.stack([jz, jx, jy]))


def block_commutator_norm(block: IrrepBlock, j: int, k: int) -> float:
    """Spectral norm of [b_j, b_k]; equals 1/(l+1) for j != k."""
    if not (1 <= j <= 3 and 1 <= k <= 3):
        raise ValueError("generator indices are 1..3")
    b = block.unit_gens
    c = b[j - 1] @ b[k - 1] - b[k - 1] @ b[j - 1]
    return float(np.linalg.norm(c, 2))


def su2_to_so3(g: np.ndarray) -> np.ndarray:
    """Image of a special-unitary 2x2 matrix under the 2-to-1 covering map.

    Entry (k, j) is (1/2) tr(g P_k g* P_j) over the Pauli triple; row k then
    expands g P_k g* in the triple. Composition reverses order:
    su2_to_so3(gh) = su2_to_so3(h) @ su2_to_so3(g).
    """
    g = np.asarray(g, dtype=complex)
    if g.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    if np.abs(g.conj().T @ g - np.eye(2)).max() > 1e-10:
        raise ValueError("matrix is not unitary")
    if abs(np.linalg.det(g) - 1.0) > 1e-10:
        raise ValueError("matrix must have determinant 1")
    out = np.empty((3, 3))
    for k, pk in enumerate(PAULI_TRIPLE):
        conj = g @ pk @ g.conj().T
        for j, pj in enumerate(PAULI_TRIPLE):
            val = 0.5 * np.trace(conj @ pj)
            out[k, j] = val.real
    return out


def conjugation_covariance_check(block: IrrepBlock, j: int, s: float) -> float:
    """Residual of the rotation covariance of the generator triple.

    Conjugating D_k by e^{isD_j} reshuffles the triple by the SO(3) image of
    e^{is P_j}: the return value is max over k of
    || e^{isD_j} D_k e^{-isD_j} - sum_m R_{mk} D_m ||.
    """
    if not 1 <= j <= 3:
        raise ValueError("generator index is 1..3")
    rot = su2_to_so3(expm(1j * s * PAULI_TRIPLE[j - 1]))
    u = expm(1j * s * block.gens[j - 1])
    uinv = u.conj().T
    worst = 0.0
    for k in range(3):
        lhs = u @ block.gens[k] @ uinv
        rhs = np.tensordot(rot[:, k], block.gens, axes=(0, 0))
        worst = max(worst, float(np.linalg.norm(lhs - rhs, 2)))
    return worst


def block_conditional_expectation(block: IrrepBlock, M: np.ndarray) -> np.ndarray:
    """Pinching onto the eigenspaces of the diagonal generator.

    Eigenvalues of gens[0] are simple on an irrep, so this is diagonal
    extraction: idempotent, trace-preserving, norm-nonincreasing.
    """
    M = np.asarray(M)
    if M.shape != (block.dim, block.dim):
        raise ValueError(f"matrix must be {block.dim}x{block.dim}")
    return np.diag(np.diag(M))


# ---------------------------------------------------------------------------
# noncommutative polynomials in the three normalized generators


@dataclass(frozen=True)
class GenPoly:
    """Formal complex combination of words in the three normalized generators.

    Words are tuples of letter indices in {1, 2, 3}; the empty word is the
    identity. Multiplication concatenates words.
    """

    coeffs: dict

    def __post_init__(self):
        clean = {}
        for word, c in self.coeffs.items():
            w = tuple(int(v) for v in word)
            if any(v not in (1, 2, 3) for v in w):
                raise ValueError(f"letters must be 1, 2 or 3, got {w}")
            c = complex(c)
            if abs(c) > 1e-15:
                clean[w] = clean.get(w, 0j) + c
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def one(cls) -> "GenPoly":
        return cls({(): 1.0 + 0j})

    @classmethod
    def letter(cls, k: int) -> "GenPoly":
        return cls({(k,): 1.0 + 0j})

    @classmethod
    def word(cls, letters: Sequence[int], coeff=1.0) -> "GenPoly":
        return cls({tuple(letters): complex(coeff)})

    @classmethod
    def parse(cls, text: str) -> "GenPoly":
        """Parse strings like "b1b2b2" or "1" (the empty word)."""
        t = text.strip().replace(" ", "")
        if t in ("1", ""):
            return cls.one()
        letters = []
        i = 0
        while i < len(t):
            if t[i] != "b" or i + 1 >= len(t) or t[i + 1] not in "123":
                raise ValueError(f"cannot parse generator word {text!r}")
            letters.append(int(t[i + 1]))
            i += 2
        return cls.word(letters)

    def __add__(self, other: "GenPoly") -> "GenPoly":
        out = dict(self.coeffs)
        for w, c in other.coeffs.items():
            out[w] = out.get(w, 0j) + c
        return GenPoly(out)

    def __rmul__(self, scalar) -> "GenPoly":
        s = complex(scalar)
        return GenPoly({w: s * c for w, c in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, GenPoly):
            return complex(other) * self
        out: dict = {}
        for w1, c1 in self.coeffs.items():
            for w2, c2 in other.coeffs.items():
                w = w1 + w2
                out[w] = out.get(w, 0j) + c1 * c2
        return GenPoly(out)

    def adjoint(self) -> "GenPoly":
        """Letters are self-adjoint, so words reverse and coefficients conjugate."""
        return GenPoly({tuple(reversed(w)): c.conjugate() for w, c in self.coeffs.items()})

    def max_word_length(self) -> int:
        return max((len(w) for w in self.coeffs), default=0)


def su2_symbol(w: GenPoly) -> SpherePoly:
    """Commutative image on the 2-sphere: letter k becomes the coordinate t_k."""
    out: dict = {}
    for word, c in w.coeffs.items():
        n = [0, 0, 0]
        for k in word:
            n[k - 1] += 1
        key = tuple(n)
        out[key] = out.get(key, 0j) + c
    return SpherePoly(3, out)


def evaluate_on_block(w: GenPoly, block: IrrepBlock) -> np.ndarray:
    b = block.unit_gens
    out = np.zeros((block.dim, block.dim), dtype=complex)
    for word, c in sorted(w.coeffs.items()):
        m = np.eye(block.dim, dtype=complex)
        for k in word:
            m = m @ b[k - 1]
        out += c * m
    return out


def _word_trace(word: tuple, b: np.ndarray, dim: int, cache: dict) -> complex:
    """Trace of a product of unit generators, splitting the word in half.

    tr(AB) = einsum(ij,ji) avoids the final matrix product; halves are cached
    so powers of a single letter cost one multiplication per block.
    """
    if not word:
        return complex(dim)
    if len(word) == 1:
        return complex(np.trace(b[word[0] - 1]))

    def half_product(w: tuple) -> np.ndarray:
        if w not in cache:
            m = b[w[0] - 1]
            for k in w[1:]:
                m = m @ b[k - 1]
            cache[w] = m
        return cache[w]

    cut = len(word) // 2
    left = half_product(word[:cut])
    right = half_product(word[cut:])
    return complex(np.einsum("ij,ji->", left, right))


def block_trace(w: GenPoly, block: IrrepBlock) -> complex:
    b = block.unit_gens
    cache: dict = {}
    return sum((c * _word_trace(word, b, block.dim, cache) for word, c in sorted(w.coeffs.items())), 0j)


def beta_formula_residual(l, n1: int, n2: int, n3: int) -> float:
    """Distance of the pinched word diagonal from its closed-form limit.

    The word is b1^n1 b2^n2 b3^n3; its pinching is compared entrywise, on the
    Hermitian part, against c * x^n1 (1-x^2)^{(n2+n3)/2} over the eigenvalues x
    of b1, with c = Beta((n2+1)/2, (n3+1)/2) / pi for n2, n3 both even and
    c = 0 when either is odd. The skew part of the diagonal is pure commutator
    residue of size O(1/l), pinned separately by tests.
    """
    if min(n1, n2, n3) < 0:
        raise ValueError("exponents must be nonnegative")
    block = build_block(l)
    word = GenPoly.word([1] * n1 + [2] * n2 + [3] * n3)
    mat = evaluate_on_block(word, block)
    diag = np.real(np.diag(mat))  # diagonal of the Hermitian part (W + W*)/2
    x = block.unit_spectrum
    if n2 % 2 or n3 % 2:
        closed = np.zeros_like(x)
    else:
        log_c = lgamma((n2 + 1) / 2.0) + lgamma((n3 + 1) / 2.0) - lgamma((n2 + n3 + 2) / 2.0)
        c = exp(log_c) / np.pi
        closed = c * x**n1 * (1.0 - x * x) ** ((n2 + n3) // 2)
    return float(np.abs(diag - closed).max())


def block_norm_vs_symbol(l_list, w: GenPoly, n_samples: int = 4000, seed: int = 0) -> list:
    """Per spin: |block norm of the word - sampled sup of its sphere symbol|.

    Returns (twice_value, gap) pairs; gaps decrease along growing spins for
    words whose symbol attains its sup away from the spectrum edge effects.
    """
    symbol = su2_symbol(w)
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n_samples, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = np.vstack([np.eye(3), -np.eye(3), dirs])
    sup = float(np.abs(symbol.evaluate(dirs)).max())
    out = []
    for l in l_list:
        block = build_block(l)
        norm = float(np.linalg.norm(evaluate_on_block(w, block), 2))
        out.append((block.l.twice_value, abs(norm - sup)))
    return out


# ---------------------------------------------------------------------------
# trace ratio estimation


def _spin_range(twice_max: int):
    for twice in range(1, twice_max + 1):
        yield HalfInteger(twice)


def _ratio_partial_sums(w: GenPoly, twice_grid: Sequence[int]) -> tuple:
    """Weighted numerator/denominator partial sums at each grid point.

    Numerator adds (2l+1) * tr(w(b)) * (1 + l(l+1))^{-3/2} per spin (the word
    acts identically on the (2l+1) copies of the block); denominator adds
    (2l+1)^2 * (1 + l(l+1))^{-3/2}. Spin 0 is excluded: a single bounded term
    absorbed by the fit intercept, mirroring the lattice-sum convention.
    """
    grid = [int(t) for t in twice_grid]
    if grid != sorted(grid) or grid[0] < 1:
        raise ValueError("twice grid must be increasing with positive entries")
    nums, dens = [], []
    num = 0j
    den = 0.0
    it = iter(grid)
    nxt = next(it)
    for half in _spin_range(grid[-1]):
        block = build_block(half)
        weight = (1.0 + half.l_squared()) ** -1.5
        num += block.dim * block_trace(w, block) * weight
        den += block.dim**2 * weight
        while nxt is not None and half.twice_value == nxt:
            nums.append(num)
            dens.append(den)
            nxt = next(it, None)
    return nums, dens


def su2_dixmier_ratio(w: GenPoly, L_max: int) -> tuple:
    """(slope estimate, (1/4pi) * sphere integral of the symbol).

    The estimate is the least-squares slope of numerator partial sums against
    denominator partial sums over the doubling grid of spins ending at L_max.
    Both sums diverge logarithmically with the same weights, so the slope
    strips the shared O(1) intercept that a single quotient would keep as an
    O(1/log L) error.
    """
    if L_max < 4:
        raise ValueError("L_max must be >= 4")
    tmax = 2 * int(L_max)
    grid = [tmax >> 3, tmax >> 2, tmax >> 1, tmax]
    nums, dens = _ratio_partial_sums(w, grid)
    design = np.stack([dens, np.ones(len(dens))], axis=1)
    (slope, _), *_ = np.linalg.lstsq(design, np.array(nums), rcond=None)
    reference = sphere_integrate(su2_symbol(w)) / (4.0 * np.pi)
    return _real_if_close(slope), _real_if_close(reference)


def su2_dixmier_quotient(w: GenPoly, L_max: int) -> float | complex:
    """Single-point quotient of the two partial sums at L_max.

    Converges to the same limit as su2_dixmier_ratio but only at an
    O(1/log L) rate; kept for comparison.
    """
    tmax = 2 * int(L_max)
    (num,), (den,) = _ratio_partial_sums(w, [tmax])
    return _real_if_close(num / den)


def _real_if_close(z: complex, tol: float = 1e-12) -> float | complex:
    z = complex(z)
    return z.real if abs(z.imag) <= tol * max(1.0, abs(z.real)) else z


def write_block_table(w: GenPoly, L_max: int, path) -> None:
    """CSV per spin: twice_value, dim, block trace, running quotient."""
    tmax = 2 * int(L_max)
    grid = list(range(1, tmax + 1))
    nums, dens = _ratio_partial_sums(w, grid)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["twice_l", "dim", "partial_numerator", "partial_denominator", "quotient"])
        for twice, num, den in zip(grid, nums, dens):
            q = _real_if_close(num / den)
            writer.writerow([twice, twice + 1, repr(_real_if_close(num)), repr(den), repr(q)])
