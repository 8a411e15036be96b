"""Represented operator words on l2(Z^d) and their principal symbols.

A word is an ordered product of two kinds of letters: left twisted shifts
coming from a torus element (pi1), and diagonal operators evaluating a sphere
polynomial at the lattice direction n/|n| (pi2). The symbol map forgets the
ordering; the defect of a word against the normal-ordered representative of
its symbol is a finite sum of weighted shift differences, whose tail operator
norms this module certifies with a shell scan plus an analytic remainder.

Certification layout for one word: expand the word exactly into "atoms", one
per choice of a torus mode for each pi1 letter. An atom acts as

    e_n -> coeff * exp((i/2) <a, theta n>) * prod_j y_j(unit(n + s_j)) * e_{n+M}

with M the total shift, a the accumulated phase vector and s_j the partial
shifts seen by each diagonal factor. The same expansion applied to the
normal-ordered representative produces atoms with identical (coeff, a, M) and
all s_j = 0, so the difference pairs off atom by atom and its tail norm is a
sum of terms sup_{|n|>R} |prod y_j(unit(n+s_j)) - prod y_j(unit(n))|.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._lattice import ball_points, iter_shell
from .sphere import SpherePoly, SphereFunction, as_evaluator, sphere_integrate, sphere_volume
from .torus import ThetaMatrix, TorusElement, torus_adjoint, torus_identity, torus_mul, torus_trace, twist_phase

SCAN_FACTOR = 4


# ---------------------------------------------------------------------------
# words and symbols


@dataclass(frozen=True)
class TorusLetter:
    """Left twisted-shift letter pi1(x)."""

    x: TorusElement


@dataclass(frozen=True)
class SphereLetter:
    """Diagonal letter pi2(y), entry y(n/|n|)."""

    y: SpherePoly


@dataclass(frozen=True)
class OperatorWord:
    """Nonempty ordered product of letters, leftmost applied last."""

    theta: ThetaMatrix
    letters: tuple

    def __post_init__(self):
        letters = tuple(self.letters)
        if not letters:
            raise ValueError("a word needs at least one letter")
        for let in letters:
            if isinstance(let, TorusLetter):
                if not let.x.theta.same_as(self.theta):
                    raise ValueError("letter lives over a different theta")
            elif isinstance(let, SphereLetter):
                if let.y.d != self.theta.d:
                    raise ValueError("sphere letter dimension mismatch")
            else:
                raise TypeError(f"not a word letter: {let!r}")
        object.__setattr__(self, "letters", letters)

    @property
    def d(self) -> int:
        return self.theta.d

    def __mul__(self, other: "OperatorWord") -> "OperatorWord":
        if not self.theta.same_as(other.theta):
            raise ValueError("cannot concatenate words over different theta")
        return OperatorWord(self.theta, self.letters + other.letters)

    def adjoint(self) -> "OperatorWord":
        out = []
        for let in reversed(self.letters):
            if isinstance(let, TorusLetter):
                out.append(TorusLetter(torus_adjoint(let.x)))
            else:
                out.append(SphereLetter(let.y.conjugate()))
        return OperatorWord(self.theta, tuple(out))


@dataclass(frozen=True)
class Symbol:
    """Finite sum of (torus element, sphere polynomial) product pairs."""

    theta: ThetaMatrix
    terms: tuple

    def __post_init__(self):
        kept = []
        for x, y in self.terms:
            if not x.theta.same_as(self.theta):
                raise ValueError("symbol term over a different theta")
            if y.d != self.theta.d:
                raise ValueError("sphere factor dimension mismatch")
            if x.coeffs and y.coeffs:
                kept.append((x, y))
        object.__setattr__(self, "terms", tuple(kept))

    @property
    def d(self) -> int:
        return self.theta.d

    def __add__(self, other: "Symbol") -> "Symbol":
        if not self.theta.same_as(other.theta):
            raise ValueError("symbols over different theta")
        merged = list(self.terms)
        for x, y in other.terms:
            for i, (xi, yi) in enumerate(merged):
                if yi.coeffs == y.coeffs:
                    merged[i] = (xi + x, yi)
                    break
            else:
                merged.append((x, y))
        return Symbol(self.theta, tuple(merged))

    def __rmul__(self, scalar) -> "Symbol":
        s = complex(scalar)
        return Symbol(self.theta, tuple((s * x, y) for x, y in self.terms))

    def __mul__(self, other):
        if not isinstance(other, Symbol):
            return complex(other) * self
        if not self.theta.same_as(other.theta):
            raise ValueError("symbols over different theta")
        out = Symbol(self.theta, ())
        for x1, y1 in self.terms:
            for x2, y2 in other.terms:
                out = out + Symbol(self.theta, ((torus_mul(x1, x2), y1 * y2),))
        return out

    def adjoint(self) -> "Symbol":
        return Symbol(self.theta, tuple((torus_adjoint(x), y.conjugate()) for x, y in self.terms))

    def direction_slice(self, s) -> TorusElement:
        """The torus element sum_k y_k(s) x_k at a fixed direction s."""
        s = np.asarray(s, dtype=float)
        out = TorusElement(self.theta, {})
        for x, y in self.terms:
            out = out + complex(y.evaluate(s)) * x
        return out

    def gap(self, other: "Symbol", n_directions: int = 64, seed: int = 0) -> float:
        """Max l2 distance of direction slices over sampled unit directions.

        Slices determine the symbol (polynomials of the tested degrees are
        pinned by finitely many directions with probability one), so this is a
        practical semantic distance for tests.
        """
        if not self.theta.same_as(other.theta):
            raise ValueError("symbols over different theta")
        rng = np.random.default_rng(seed)
        dirs = rng.normal(size=(n_directions, self.d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        axes = np.eye(self.d)
        worst = 0.0
        for s in np.vstack([axes, -axes, dirs]):
            worst = max(worst, (self.direction_slice(s) - other.direction_slice(s)).l2_norm())
        return worst


def sym(word: OperatorWord) -> Symbol:
    """Principal symbol: product of letter symbols, letter order forgotten."""
    one_poly = SpherePoly.constant(word.d, 1.0)
    out = Symbol(word.theta, ((torus_identity(word.theta), one_poly),))
    for let in word.letters:
        if isinstance(let, TorusLetter):
            term = Symbol(word.theta, ((let.x, one_poly),))
        else:
            term = Symbol(word.theta, ((torus_identity(word.theta), let.y),))
        out = out * term
    return out


def injectivity_witness(symbol: Symbol, n_directions: int = 128, seed: int = 0) -> float:
    """max over sampled directions of |sum_k trace(x_k) y_k(s)|.

    Strictly positive witnesses that the symbol's translation-average is a
    nonzero function of the direction, the lower bound behind the injectivity
    argument. Compare with averaged_window_norm, which evaluates the same
    function on lattice directions.
    """
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n_directions, symbol.d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = np.vstack([np.eye(symbol.d), -np.eye(symbol.d), dirs])
    vals = np.zeros(dirs.shape[0], dtype=complex)
    for x, y in symbol.terms:
        vals += torus_trace(x) * y.evaluate(dirs)
    return float(np.abs(vals).max()) if len(vals) else 0.0


def averaged_window_norm(symbol: Symbol, radius: int) -> float:
    """Norm of sum_k trace(x_k) pi2(y_k) on the window {|n| <= radius}.

    The operator is diagonal, so the norm is a max over lattice directions;
    the origin uses the spherical-mean convention.
    """
    window = LatticeWindow(symbol.d, radius)
    total = np.zeros(window.size, dtype=complex)
    for x, y in symbol.terms:
        total += torus_trace(x) * _direction_values(y, window)
    return float(np.abs(total).max())


# ---------------------------------------------------------------------------
# matrix models on finite windows


@dataclass(frozen=True)
class LatticeWindow:
    """The lattice ball {|n| <= radius} with a fixed basis order.

    Points are sorted by (|n|^2, lexicographic), so enlarging the radius
    extends the basis without permuting it.
    """

    d: int
    radius: int

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError("window radius must be >= 1")

    @property
    def points(self) -> np.ndarray:
        pts = ball_points(self.d, self.radius)
        order = sorted(range(len(pts)), key=lambda i: (int(pts[i] @ pts[i]), tuple(pts[i])))
        return pts[order]

    @property
    def size(self) -> int:
        return len(self.points)

    def index(self) -> dict:
        return {tuple(p): i for i, p in enumerate(self.points)}

    def interior(self, margin: float) -> np.ndarray:
        """Indices of points with |n| <= radius - margin."""
        pts = self.points
        keep = np.einsum("ij,ij->i", pts, pts) <= (self.radius - margin) ** 2
        return np.nonzero(keep)[0]


class Pi1Matrix(NamedTuple):
    matrix: np.ndarray
    escaped: np.ndarray  # per-column l2 mass sent outside the window


def build_pi1_matrix(x: TorusElement, window: LatticeWindow) -> Pi1Matrix:
    """Twisted-shift matrix of pi1(x): e_n -> sum_m x_m exp((i/2)<m, theta n>) e_{n+m}.

    Columns near the boundary lose the part of their image that leaves the
    window; that mass is returned per column instead of being silently dropped.
    """
    if window.d != x.d:
        raise ValueError("window dimension mismatch")
    if x.support_radius() > window.radius:
        raise ValueError("window radius must cover the support of x")
    pts = window.points
    idx = window.index()
    size = len(pts)
    mat = np.zeros((size, size), dtype=complex)
    escaped2 = np.zeros(size)
    theta = x.theta.entries
    for m, c in x.coeffs.items():
        mvec = np.array(m)
        # row n carries exp((i/2) <m, theta n>); n . (theta^T m) = <m, theta n>
        phases = c * np.exp(0.5j * (pts.astype(float) @ (theta.T @ mvec.astype(float))))
        targets = pts + mvec
        for col in range(size):
            row = idx.get(tuple(targets[col]))
            if row is None:
                escaped2[col] += abs(phases[col]) ** 2
            else:
                mat[row, col] += phases[col]
    return Pi1Matrix(mat, np.sqrt(escaped2))


def _direction_values(y, window: LatticeWindow, zero_value=None) -> np.ndarray:
    pts = window.points.astype(float)
    norms = np.linalg.norm(pts, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    vals = as_evaluator(y)(pts / safe[:, None])
    at_zero = zero_value
    if at_zero is None:
        if isinstance(y, SpherePoly):
            at_zero = sphere_integrate(y) / sphere_volume(y.d)
        else:
            raise ValueError("need an explicit zero_value for non-polynomial evaluators")
    return np.where(norms == 0.0, complex(at_zero), vals)


def build_pi2_matrix(y, window: LatticeWindow, zero_value=None) -> np.ndarray:
    """Diagonal matrix of pi2(y), entries y(n/|n|).

    The origin gets the normalized spherical mean of y (any fixed choice
    differs by a rank-one perturbation; this one is basis-independent).
    """
    return np.diag(_direction_values(y, window, zero_value))


def word_matrix(word: OperatorWord, window: LatticeWindow) -> np.ndarray:
    """Product of the letter matrices on the window, leftmost letter leftmost.

    Boundary columns are unreliable whenever a pi1 letter shifts mass out of
    the window; restrict comparisons to window.interior(total shift bound).
    """
    out = None
    for let in word.letters:
        mat = (
            build_pi1_matrix(let.x, window).matrix
            if isinstance(let, TorusLetter)
            else build_pi2_matrix(let.y, window)
        )
        out = mat if out is None else out @ mat
    return out


def representative_matrix(symbol: Symbol, window: LatticeWindow) -> np.ndarray:
    """Normal-ordered model of a symbol: sum_k pi1(x_k) @ pi2(y_k)."""
    size = window.size
    out = np.zeros((size, size), dtype=complex)
    for x, y in symbol.terms:
        out += build_pi1_matrix(x, window).matrix @ build_pi2_matrix(y, window)
    return out


# ---------------------------------------------------------------------------
# atoms and certified tail norms


@dataclass(frozen=True)
class _Atom:
    shift: tuple
    coeff: complex
    phase: tuple
    factors: tuple  # ((poly, shift tuple), ...)


def _compose(left: _Atom, right: _Atom, theta: ThetaMatrix) -> _Atom:
    coeff = left.coeff * right.coeff * twist_phase(theta, left.phase, right.shift)
    shift = tuple(a + b for a, b in zip(left.shift, right.shift))
    phase = tuple(a + b for a, b in zip(left.phase, right.phase))
    factors = tuple((y, tuple(a + b for a, b in zip(s, right.shift))) for y, s in left.factors)
    return _Atom(shift, coeff, phase, factors + right.factors)


def _word_atoms(word: OperatorWord) -> list:
    zero = (0,) * word.d
    acc = [_Atom(zero, 1.0 + 0j, zero, ())]
    for let in word.letters:
        if isinstance(let, TorusLetter):
            opts = [_Atom(m, c, m, ()) for m, c in sorted(let.x.coeffs.items())]
        else:
            opts = [_Atom(zero, 1.0 + 0j, zero, ((let.y, zero),))]
        acc = [_compose(a, o, word.theta) for a in acc for o in opts]
    return acc


def _shifted_signatures(word: OperatorWord) -> list:
    """Aggregate |coeff| over atoms sharing a diagonal-factor signature.

    Atoms whose factors all carry zero shift cancel exactly against the
    normal-ordered representative and are dropped here.
    """
    weights: dict = {}
    factors_of: dict = {}
    for atom in _word_atoms(word):
        if not atom.factors or all(not any(s) for _, s in atom.factors):
            continue
        # content-based key: summation order must not depend on object identity
        key = tuple(
            (tuple(sorted((n, c.real, c.imag) for n, c in y.coeffs.items())), s)
            for y, s in atom.factors
        )
        weights[key] = weights.get(key, 0.0) + abs(atom.coeff)
        factors_of[key] = atom.factors
    return [(factors_of[k], w) for k, w in sorted(weights.items())]


def _scan_product_difference(factors, d: int, r2_lo: int, r2_hi: int) -> float:
    """sup over the shell r2_lo < |n|^2 <= r2_hi of |prod y(unit(n+s)) - prod y(unit(n))|."""
    worst = 0.0
    for chunk in iter_shell(d, r2_lo, r2_hi):
        pts = chunk.astype(float)
        base_dirs = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        shifted = np.ones(len(chunk), dtype=complex)
        base = np.ones(len(chunk), dtype=complex)
        for y, s in factors:
            ev = as_evaluator(y)
            base_vals = ev(base_dirs)
            base = base * base_vals
            if any(s):
                moved = pts + np.asarray(s, dtype=float)
                shifted = shifted * ev(moved / np.linalg.norm(moved, axis=1, keepdims=True))
            else:
                shifted = shifted * base_vals
        worst = max(worst, float(np.abs(shifted - base).max()))
    return worst


def _factor_bounds(y) -> tuple:
    """(sup bound or None, function beyond, |s| -> single-factor tail bound)."""
    if isinstance(y, SpherePoly):
        g = y.gradient_sup_bound()
        # chord from n to n+s avoids the ball of radius beyond - |s|, where the
        # degree-0 homogeneous extension has gradient at most g / (beyond - |s|)
        return y.sup_bound(), lambda beyond, sh: g * sh / (beyond - sh)
    if isinstance(y, SphereFunction):
        if y.lipschitz is None:
            raise ValueError("remainder bound needs a Lipschitz constant")
        lip = y.lipschitz
        # |unit(n+s) - unit(n)| <= 2|s| / max(|n+s|, |n|)
        return None, lambda beyond, sh: lip * 2.0 * sh / beyond
    raise TypeError(f"unsupported diagonal factor {type(y)!r}")


def _remainder_bound(factors, beyond: float) -> float:
    """Bound |prod y(unit(n+s)) - prod y(unit(n))| for all |n| > beyond."""
    bounds = [_factor_bounds(y) for y, _ in factors]
    shifts = [float(np.linalg.norm(s)) for _, s in factors]
    total = 0.0
    for j, ((_, tail_j), sh) in enumerate(zip(bounds, shifts)):
        if sh == 0.0:
            continue
        if beyond <= sh:
            raise ValueError("scan window too small for the shift sizes")
        others = 1.0
        for i, (sup_i, _) in enumerate(bounds):
            if i == j:
                continue
            if sup_i is None:
                raise ValueError("product remainders need sup bounds for every factor")
            others *= sup_i
        total += others * tail_j(beyond, sh)
    return total


def commutator_tail_norm(x: TorusElement, y, R: float, scan_factor: float = SCAN_FACTOR) -> float:
    """Certified norm of [pi1(x), pi2(y)] restricted to {|n| > R}.

    Per mode m of x the commutator is the weighted shift
    n -> x_m * phase * (y(unit(n+m)) - y(unit(n))) e_{n+m}; its tail norm is the
    sup of the weight over |n| > R, evaluated by scanning the shell
    (R, scan_factor*R] and bounding the rest analytically. Modes aggregate by
    triangle inequality. Enlarging scan_factor never increases the report.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    d = x.d
    if isinstance(y, SpherePoly) and y.d != d:
        raise ValueError("dimension mismatch")
    total = 0.0
    for m, c in sorted(x.coeffs.items()):
        if not any(m):
            continue  # pi1(u_0) is scalar, commutator vanishes
        hi = max(scan_factor * R, R + float(np.linalg.norm(m)) + 1.0)
        factors = ((y, m),)
        scan = _scan_product_difference(factors, d, int(R * R), int(hi * hi))
        rem = _remainder_bound(factors, hi)
        total += abs(c) * max(scan, rem)
    return total


@dataclass(frozen=True)
class CompactnessReport:
    radii: tuple
    tail_norms: tuple
    fit_slope: float | None

    def to_json(self) -> str:
        return json.dumps(
            {
                "R": list(self.radii),
                "tail_norm": list(self.tail_norms),
                "fit_slope": self.fit_slope,
            }
        )


def _loglog_slope(radii, values) -> float | None:
    xs = [np.log(r) for r, v in zip(radii, values) if v > 0]
    ys = [np.log(v) for v in values if v > 0]
    if len(xs) < 2:
        return None
    design = np.stack([xs, np.ones(len(xs))], axis=1)
    slope, _ = np.linalg.lstsq(design, np.array(ys), rcond=None)[0]
    return float(slope)


def residual_compactness_report(
    word: OperatorWord, R_list, scan_factor: float = SCAN_FACTOR
) -> CompactnessReport:
    """Tail norms of (word - normal-ordered representative of sym(word)).

    For each R the report is a certified upper bound on the operator norm of
    the difference restricted to {|n| > R}; it is 0 exactly when the word is
    already normal-ordered. fit_slope is the log-log slope of the norms
    against R (None when fewer than two positive entries).
    """
    radii = tuple(float(r) for r in R_list)
    if any(r < 1 for r in radii):
        raise ValueError("radii must be >= 1")
    signatures = _shifted_signatures(word)
    norms = []
    for R in radii:
        total = 0.0
        for factors, weight in signatures:
            max_shift = max(float(np.linalg.norm(s)) for _, s in factors)
            hi = max(scan_factor * R, R + max_shift + 1.0)
            scan = _scan_product_difference(factors, word.d, int(R * R), int(hi * hi))
            rem = _remainder_bound(factors, hi)
            total += weight * max(scan, rem)
        norms.append(total)
    return CompactnessReport(radii, tuple(norms), _loglog_slope(radii, norms))


def random_word(
    theta: ThetaMatrix,
    rng: np.random.Generator,
    n_letters: int = 4,
    max_mode: int = 1,
    max_degree: int = 2,
) -> OperatorWord:
    """Sample a word whose compactness residual is not identically zero.

    Words that are already normal-ordered (no diagonal letter ever sees a
    nonzero shift) are rejected and redrawn, since their residual is exactly 0
    at every radius and says nothing about tail decay. The same goes for words
    whose shifted diagonal letters are all constant polynomials: a constant
    takes the same value at n and n + s, so the difference vanishes anyway.
    """
    d = theta.d
    while True:
        letters = []
        kinds = rng.integers(0, 2, size=n_letters)
        for kind in kinds:
            if kind == 0:
                modes = {}
                for _ in range(rng.integers(1, 3)):
                    m = tuple(int(v) for v in rng.integers(-max_mode, max_mode + 1, size=d))
                    modes[m] = complex(rng.normal(), rng.normal())
                letters.append(TorusLetter(TorusElement(theta, modes)))
            else:
                terms = {}
                for _ in range(rng.integers(1, 3)):
                    nvec = tuple(int(v) for v in rng.integers(0, max_degree + 1, size=d))
                    terms[nvec] = complex(rng.normal())
                letters.append(SphereLetter(SpherePoly(d, terms)))
        try:
            word = OperatorWord(theta, tuple(letters))
        except ValueError:
            continue
        signatures = _shifted_signatures(word)
        if any(any(any(s) and y.degree() > 0 for y, s in factors) for factors, _ in signatures):
            return word
