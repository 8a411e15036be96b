"""Polynomial calculus and quadrature on the unit sphere S^{d-1}.

Multi-indices are plain tuples of nonnegative ints. A SpherePoly stores the
coefficients of t -> sum c_n prod t_k^{n_k}; since |t|^2 = 1 identifies distinct
coefficient maps, equality of polynomials as sphere functions is semantic
(moments of the difference plus a sampled sup), never structural.

Quadrature menu: d=2 trapezoid in the angle, d=3 Gauss-Legendre x trapezoid,
d=4 additionally a uniform product parameterization of S^3, d>=4 scrambled Sobol
through a measure-preserving polar map. Every rule carries a coarser companion
set whose disagreement with the full rule is reported as the error proxy.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from math import lgamma, exp
from typing import Callable, Iterable, NamedTuple

import numpy as np
from scipy.special import betaincinv
from scipy.stats import qmc

PRUNE_TOL = 1e-15
MEMBERSHIP_TOL = 1e-10


def _validate_multi_index(nvec, d: int) -> tuple:
    key = tuple(int(v) for v in nvec)
    if len(key) > d:
        raise ValueError(f"multi-index {key} longer than dimension {d}")
    key = key + (0,) * (d - len(key))
    if any(v < 0 for v in key):
        raise ValueError(f"multi-index entries must be nonnegative, got {key}")
    return key


def _multi_indices(d: int, max_degree: int) -> list:
    """All d-tuples of nonnegative ints with sum <= max_degree, lexicographic."""
    out = []

    def rec(prefix, remaining):
        if len(prefix) == d - 1:
            for last in range(remaining + 1):
                out.append(prefix + (last,))
            return
        for v in range(remaining + 1):
            rec(prefix + (v,), remaining - v)

    rec((), max_degree)
    return out


def sphere_moment(nvec, d: int) -> float:
    """Exact integral of prod t_k^{n_k} over S^{d-1}.

    Zero when any exponent is odd; otherwise
    2 * prod Gamma((n_k+1)/2) / Gamma((|n|+d)/2), computed in log space. The
    empty index returns the sphere volume 2 pi^{d/2} / Gamma(d/2).
    """
    if d < 2:
        raise ValueError("sphere dimension parameter d must be >= 2")
    key = _validate_multi_index(nvec, d)
    if any(v % 2 for v in key):
        return 0.0
    total = sum(key)
    log_num = sum(lgamma((v + 1) / 2.0) for v in key)
    return 2.0 * exp(log_num - lgamma((total + d) / 2.0))


def sphere_volume(d: int) -> float:
    return sphere_moment((), d)


@dataclass(frozen=True)
class SpherePoly:
    """Finitely supported polynomial restricted to the unit sphere."""

    d: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for n, c in self.coeffs.items():
            key = _validate_multi_index(n, self.d)
            c = complex(c)
            if abs(c) > PRUNE_TOL:
                clean[key] = clean.get(key, 0j) + c
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def constant(cls, d: int, value=1.0) -> "SpherePoly":
        return cls(d, {(0,) * d: complex(value)})

    @classmethod
    def monomial(cls, d: int, nvec, coeff=1.0) -> "SpherePoly":
        return cls(d, {_validate_multi_index(nvec, d): complex(coeff)})

    @classmethod
    def coordinate(cls, d: int, k: int) -> "SpherePoly":
        """t_k, with k 1-based."""
        if not 1 <= k <= d:
            raise ValueError(f"coordinate index {k} out of range 1..{d}")
        n = [0] * d
        n[k - 1] = 1
        return cls(d, {tuple(n): 1.0 + 0j})

    def degree(self) -> int:
        return max((sum(n) for n in self.coeffs), default=0)

    def is_real(self) -> bool:
        return all(abs(c.imag) <= PRUNE_TOL for c in self.coeffs.values())

    def __add__(self, other: "SpherePoly") -> "SpherePoly":
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        out = dict(self.coeffs)
        for n, c in other.coeffs.items():
            out[n] = out.get(n, 0j) + c
        return SpherePoly(self.d, out)

    def __sub__(self, other: "SpherePoly") -> "SpherePoly":
        return self + (-1) * other

    def __rmul__(self, scalar) -> "SpherePoly":
        s = complex(scalar)
        return SpherePoly(self.d, {n: s * c for n, c in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, SpherePoly):
            if self.d != other.d:
                raise ValueError("dimension mismatch")
            out: dict = {}
            for n, cn in self.coeffs.items():
                for m, cm in other.coeffs.items():
                    p = tuple(a + b for a, b in zip(n, m))
                    out[p] = out.get(p, 0j) + cn * cm
            return SpherePoly(self.d, out)
        return complex(other) * self

    def conjugate(self) -> "SpherePoly":
        return SpherePoly(self.d, {n: c.conjugate() for n, c in self.coeffs.items()})

    def partial(self, k: int) -> "SpherePoly":
        """Flat partial derivative d/dt_k (k 1-based), no sphere reduction."""
        if not 1 <= k <= self.d:
            raise ValueError(f"coordinate index {k} out of range 1..{self.d}")
        out = {}
        i = k - 1
        for n, c in self.coeffs.items():
            if n[i] == 0:
                continue
            m = list(n)
            m[i] -= 1
            out[tuple(m)] = out.get(tuple(m), 0j) + n[i] * c
        return SpherePoly(self.d, out)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at points of shape (..., d)."""
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.d:
            raise ValueError(f"points must have last axis {self.d}")
        out = np.zeros(pts.shape[:-1], dtype=complex)
        for n, c in self.coeffs.items():
            term = np.ones(pts.shape[:-1])
            for k, e in enumerate(n):
                if e:
                    term = term * pts[..., k] ** e
            out += c * term
        return out

    def sup_bound(self) -> float:
        """sum |c_n|, a sup-norm bound on the unit sphere."""
        return float(sum(abs(c) for c in self.coeffs.values()))

    def gradient_sup_bound(self) -> float:
        """Bound on |grad| over the sphere: sum |c_n| * ||n||_2.

        Also bounds |t| * |grad of the degree-0 homogeneous extension|, which is
        what the tail-norm remainders need.
        """
        return float(sum(abs(c) * np.linalg.norm(n) for n, c in self.coeffs.items()))


@dataclass(frozen=True)
class SphereFunction:
    """Black-box evaluator on unit vectors, with an optional Lipschitz constant.

    The Lipschitz constant is with respect to the chordal metric |a - b| on unit
    vectors; it is only needed by certified tail bounds.
    """

    d: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    lipschitz: float | None = None

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(points, dtype=float)))


def as_evaluator(f) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(f, SpherePoly):
        return f.evaluate
    if isinstance(f, SphereFunction):
        return f
    if callable(f):
        return f
    raise TypeError(f"cannot evaluate object of type {type(f)!r} on the sphere")


def semantic_gap(p: SpherePoly, q: SpherePoly, n_samples: int = 400, seed: int = 0) -> float:
    """How far two coefficient maps are as functions on the sphere.

    Exact moments of the difference against all monomials up to the combined
    degree, plus a sampled sup of the pointwise difference. Zero iff equal as
    sphere functions (up to sampling for the transcendental part; the moment
    block alone separates polynomials of the tested degrees).
    """
    if p.d != q.d:
        raise ValueError("dimension mismatch")
    diff = p - q
    if not diff.coeffs:
        return 0.0
    gap = 0.0
    probe_deg = p.degree() + q.degree()
    for nvec in _multi_indices(diff.d, probe_deg):
        probe = SpherePoly.monomial(diff.d, nvec)
        gap = max(gap, abs(sphere_integrate(diff * probe)))
    pts = random_unit_vectors(n_samples, diff.d, np.random.default_rng(seed))
    gap = max(gap, float(np.abs(diff.evaluate(pts)).max()))
    return gap


def random_unit_vectors(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=(n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sphere_integrate(b: SpherePoly) -> complex:
    """Exact integral over the sphere via the closed-form moments."""
    return complex(sum(c * sphere_moment(n, b.d) for n, c in b.coeffs.items()))


# ---------------------------------------------------------------------------
# quadrature rules


class QuadratureResult(NamedTuple):
    value: complex
    error: float


@dataclass(frozen=True)
class QuadratureRule:
    d: int
    kind: str
    points: np.ndarray
    weights: np.ndarray
    coarse_points: np.ndarray
    coarse_weights: np.ndarray

    @property
    def size(self) -> int:
        return self.points.shape[0]


def _circle_points(n: int) -> tuple:
    phi = 2.0 * np.pi * np.arange(n) / n
    pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    return pts, np.full(n, 2.0 * np.pi / n)


def _s2_product_points(n_z: int, n_phi: int) -> tuple:
    z, wz = np.polynomial.legendre.leggauss(n_z)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wphi = 2.0 * np.pi / n_phi
    Z, P = np.meshgrid(z, phi, indexing="ij")
    WZ, _ = np.meshgrid(wz, phi, indexing="ij")
    r = np.sqrt(1.0 - Z**2)
    pts = np.stack([(r * np.cos(P)).ravel(), (r * np.sin(P)).ravel(), Z.ravel()], axis=1)
    return pts, (WZ * wphi).ravel()


def _s3_hopf_points(n_u: int, n_phi: int) -> tuple:
    """Uniform product parameterization of S^3.

    t = (sqrt(1-u) cos p1, sqrt(1-u) sin p1, sqrt(u) cos p2, sqrt(u) sin p2)
    carries the uniform measure (1/2) du dp1 dp2, total 2 pi^2.
    """
    zu, wu = np.polynomial.legendre.leggauss(n_u)
    u = 0.5 * (zu + 1.0)
    wu = 0.5 * wu
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wphi = 2.0 * np.pi / n_phi
    U, P1, P2 = np.meshgrid(u, phi, phi, indexing="ij")
    WU = np.meshgrid(wu, phi, phi, indexing="ij")[0]
    r1 = np.sqrt(1.0 - U).ravel()
    r2 = np.sqrt(U).ravel()
    pts = np.stack(
        [
            r1 * np.cos(P1).ravel(),
            r1 * np.sin(P1).ravel(),
            r2 * np.cos(P2).ravel(),
            r2 * np.sin(P2).ravel(),
        ],
        axis=1,
    )
    w = 0.5 * WU.ravel() * wphi * wphi
    return pts, w


def _cube_to_sphere(u: np.ndarray, d: int) -> np.ndarray:
    """Measure-preserving map [0,1]^{d-1} -> S^{d-1} (polar recursion).

    Latitude j (from d down to 3) is drawn with density proportional to
    (1 - s^2)^{(j-3)/2} via the inverse regularized incomplete Beta; the last
    two coordinates come from an angle. Smooth except at coordinate poles.
    """
    n = u.shape[0]
    out = np.empty((n, d))
    radial = np.ones(n)
    col = 0
    for j in range(d, 2, -1):
        a = (j - 1) / 2.0
        s = 2.0 * betaincinv(a, a, u[:, col]) - 1.0
        out[:, j - 1] = radial * s
        radial = radial * np.sqrt(np.maximum(0.0, 1.0 - s * s))
        col += 1
    phi = 2.0 * np.pi * u[:, col]
    out[:, 0] = radial * np.cos(phi)
    out[:, 1] = radial * np.sin(phi)
    return out


def _sobol_points(d: int, n: int, seed: int) -> tuple:
    m = max(4, int(round(np.log2(n))))
    eng = qmc.Sobol(d=d - 1, scramble=True, seed=seed)
    u = eng.random_base2(m=m)
    pts = _cube_to_sphere(u, d)
    w = np.full(pts.shape[0], sphere_volume(d) / pts.shape[0])
    return pts, w


def quadrature_rule(d: int, n=None, kind: str | None = None, seed: int = 0) -> QuadratureRule:
    """Build a sphere rule. kind defaults to trapezoid (d=2), product (d=3), sobol (d>=4).

    d=4 additionally supports kind="hopf", the uniform product rule on S^3,
    whose accuracy on smooth integrands is limited only by roundoff.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if kind is None:
        kind = "trapezoid" if d == 2 else ("product" if d == 3 else "sobol")
    if kind == "trapezoid":
        if d != 2:
            raise ValueError("trapezoid rule is the d=2 product rule")
        n = int(n or 2048)
        pts, w = _circle_points(n)
        cpts, cw = _circle_points(max(8, n // 2))
    elif kind == "product":
        if d != 3:
            raise ValueError(f"product Gauss rule unsupported for d={d}")
        if n is None:
            nz, nphi = 96, 192
        elif np.isscalar(n):
            nz, nphi = int(n), 2 * int(n)
        else:
            nz, nphi = map(int, n)
        pts, w = _s2_product_points(nz, nphi)
        cpts, cw = _s2_product_points(max(4, nz // 2), max(8, nphi // 2))
    elif kind == "hopf":
        if d != 4:
            raise ValueError("hopf product rule exists only for d=4")
        if n is None:
            nu, nphi = 48, 64
        elif np.isscalar(n):
            nu, nphi = int(n), int(n)
        else:
            nu, nphi = map(int, n)
        pts, w = _s3_hopf_points(nu, nphi)
        cpts, cw = _s3_hopf_points(max(4, nu // 2), max(8, nphi // 2))
    elif kind == "sobol":
        if d < 4:
            raise ValueError("use the product rules below d=4")
        n = int(n or (1 << 20))
        pts, w = _sobol_points(d, n, seed)
        half = pts.shape[0] // 2
        cpts, cw = pts[:half], np.full(half, sphere_volume(d) / half)
    else:
        raise ValueError(f"unknown quadrature kind {kind!r}")
    return QuadratureRule(d, kind, pts, w, cpts, cw)


def quadrature_integrate(f, rule: QuadratureRule) -> QuadratureResult:
    """Estimate the sphere integral of f with a two-level error proxy."""
    ev = as_evaluator(f)
    value = complex(np.dot(rule.weights, ev(rule.points)))
    coarse = complex(np.dot(rule.coarse_weights, ev(rule.coarse_points)))
    return QuadratureResult(value, abs(value - coarse))


# ---------------------------------------------------------------------------
# linear actions


def vg_action(g: np.ndarray, b) -> SphereFunction:
    """Weighted pullback (V_g b)(t) = |gt|^{-d} b(gt / |gt|).

    Composition runs contravariantly: V_{g1}(V_{g2} b) = V_{g2 g1} b pointwise.
    """
    g = np.asarray(g, dtype=float)
    d = g.shape[0]
    if g.shape != (d, d):
        raise ValueError("g must be square")
    if abs(np.linalg.det(g)) <= 1e-12:
        raise ValueError("g is numerically singular")
    ev = as_evaluator(b)
    bd = getattr(b, "d", d)
    if bd != d:
        raise ValueError("dimension mismatch between g and b")

    def evaluator(pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        gt = pts @ g.T
        norms = np.linalg.norm(gt, axis=-1)
        return ev(gt / norms[..., None]) / norms**d

    return SphereFunction(d, evaluator)


def invariance_residual(g: np.ndarray, b: SpherePoly, rule: QuadratureRule) -> float:
    """|quadrature of V_g b  -  det(g)^{-1} * exact integral of b|."""
    est = quadrature_integrate(vg_action(g, b), rule).value
    ref = sphere_integrate(b) / np.linalg.det(np.asarray(g, dtype=float))
    return abs(est - ref)


def lie_action(A: np.ndarray, b: SpherePoly) -> SpherePoly:
    """Generator of the weighted pullback along e^{sA}, as a raw polynomial.

    <grad b, At> - <grad b, t><At, t> - d <At, t> b, computed without reducing
    modulo |t|^2 = 1, so the output degree is at most deg(b) + 2.
    """
    A = np.asarray(A, dtype=float)
    d = b.d
    if A.shape != (d, d):
        raise ValueError(f"A must be {d}x{d}")
    partials = [b.partial(k) for k in range(1, d + 1)]
    coords = [SpherePoly.coordinate(d, k) for k in range(1, d + 1)]
    zero = SpherePoly(d, {})
    At = [
        sum((A[k, j] * coords[j] for j in range(d)), zero)
        for k in range(d)
    ]
    grad_At = sum((partials[k] * At[k] for k in range(d)), zero)
    euler = sum((coords[k] * partials[k] for k in range(d)), zero)
    At_t = sum((At[k] * coords[k] for k in range(d)), zero)
    return grad_At - euler * At_t - d * (At_t * b)


def sp_algebra_membership(A: np.ndarray, omega: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
    """Whether omega A + A^T omega vanishes within tol."""
    A = np.asarray(A, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if A.shape != omega.shape or A.shape[0] != A.shape[1]:
        raise ValueError("dimension mismatch")
    return float(np.abs(omega @ A + A.T @ omega).max()) <= tol


def sp_group_membership(g: np.ndarray, form: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
    """Whether g^T form g = form within tol (form may be any antisymmetric matrix)."""
    g = np.asarray(g, dtype=float)
    form = np.asarray(form, dtype=float)
    if g.shape != form.shape or g.shape[0] != g.shape[1]:
        raise ValueError("dimension mismatch")
    return float(np.abs(g.T @ form @ g - form).max()) <= tol


# ---------------------------------------------------------------------------
# moment functionals and the reduction identities


@dataclass(frozen=True)
class MomentFunctional:
    """Finite table nvec -> value, standing in for an integration functional."""

    d: int
    values: dict
    max_degree: int

    @classmethod
    def exact(cls, d: int, max_degree: int) -> "MomentFunctional":
        table = {n: complex(sphere_moment(n, d)) for n in _multi_indices(d, max_degree)}
        return cls(d, table, max_degree)

    @classmethod
    def from_quadrature(cls, d: int, max_degree: int, rule: QuadratureRule) -> "MomentFunctional":
        table = {}
        for n in _multi_indices(d, max_degree):
            table[n] = quadrature_integrate(SpherePoly.monomial(d, n), rule).value
        return cls(d, table, max_degree)

    def __call__(self, nvec) -> complex:
        key = _validate_multi_index(nvec, self.d)
        if key not in self.values:
            raise ValueError(f"moment table does not cover {key}")
        return self.values[key]


@dataclass(frozen=True)
class RecursionReport:
    d: int
    max_degree: int
    rows: list  # (nvec, odd_residual, first_reduction_residual, main_reduction_residual)

    @property
    def max_odd_residual(self) -> float:
        return max((r[1] for r in self.rows), default=0.0)

    @property
    def max_first_reduction_residual(self) -> float:
        return max((r[2] for r in self.rows), default=0.0)

    @property
    def max_main_reduction_residual(self) -> float:
        return max((r[3] for r in self.rows), default=0.0)

    @property
    def max_residual(self) -> float:
        return max(
            self.max_odd_residual,
            self.max_first_reduction_residual,
            self.max_main_reduction_residual,
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "d": self.d,
                "max_degree": self.max_degree,
                "max_odd_residual": self.max_odd_residual,
                "max_first_reduction_residual": self.max_first_reduction_residual,
                "max_main_reduction_residual": self.max_main_reduction_residual,
            },
            sort_keys=True,
        )


def moment_recursion_check(l: MomentFunctional | None, max_degree: int, d: int | None = None) -> RecursionReport:
    """Residuals of the three reduction identities on every index up to max_degree.

    Identities checked for each nvec:
      odd vanishing      l(b_n) = 0 when some n_j is odd,
      paired reduction   l(b_{n+2e_{2k-1}}) = (n_{2k-1}+1)/(n_{2k}+1) * l(b_{n+2e_{2k}}),
      degree reduction   l(b_{n+2e_k})      = (n_k+1)/(|n|+d)       * l(b_n).

    The pairing identity needs even d. Passing l=None checks the exact moment
    table (all residuals vanish identically, the closed form satisfies the
    recursions by construction).
    """
    if l is None:
        if d is None:
            raise ValueError("need a dimension when no functional is given")
        l = MomentFunctional.exact(d, max_degree + 2)
    if l.d % 2:
        raise ValueError("the paired reduction identity requires even d")
    if l.max_degree < max_degree + 2:
        raise ValueError("moment table must cover max_degree + 2")
    dim = l.d
    rows = []
    for nvec in _multi_indices(dim, max_degree):
        odd_res = abs(l(nvec)) if any(v % 2 for v in nvec) else 0.0
        first_res = 0.0
        for k in range(dim // 2):
            i, j = 2 * k, 2 * k + 1
            bumped_i = list(nvec)
            bumped_i[i] += 2
            bumped_j = list(nvec)
            bumped_j[j] += 2
            first_res = max(
                first_res,
                abs(l(bumped_i) - (nvec[i] + 1) / (nvec[j] + 1) * l(bumped_j)),
            )
        main_res = 0.0
        deg = sum(nvec)
        for k in range(dim):
            bumped = list(nvec)
            bumped[k] += 2
            main_res = max(main_res, abs(l(bumped) - (nvec[k] + 1) / (deg + dim) * l(nvec)))
        rows.append((nvec, odd_res, first_res, main_res))
    return RecursionReport(dim, max_degree, rows)


def write_moment_csv(functional: MomentFunctional, path) -> None:
    """Columns n_1..n_d,value."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"n_{k + 1}" for k in range(functional.d)] + ["value"])
        for nvec in sorted(functional.values):
            val = functional.values[nvec]
            writer.writerow(list(nvec) + [repr(val.real) if val.imag == 0 else repr(val)])
