"""Symplectic linear algebra and grid checks for the flat twisted plane.

Three groups of tools: the normal form beta with beta^T theta beta = Omega and
the Sp(theta) machinery built on it; phase-shift unitaries on a zero-padded
uniform grid, where the commutation phase law is an exact finite identity; and
the scalar decay profiles behind the trace-ideal memberships (the weighted
pullback multiplier, its difference from the flat weight, and the Riesz-kernel
difference), certified by sampled shell suprema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm, schur

from ._lattice import iter_shell
from .sphere import SpherePoly, _multi_indices, as_evaluator, invariance_residual, sp_group_membership, vg_action
from .torus import ThetaMatrix

MEMBERSHIP_TOL = 1e-9


def _theta_entries(theta) -> np.ndarray:
    if isinstance(theta, ThetaMatrix):
        return theta.entries
    return ThetaMatrix(np.asarray(theta, dtype=float)).entries


@dataclass(frozen=True)
class SymplecticForm:
    """The fixed block form [[0,1],[-1,0]] repeated along the diagonal."""

    d: int

    def __post_init__(self):
        if self.d < 2 or self.d % 2:
            raise ValueError("the block form needs even d >= 2")

    @property
    def matrix(self) -> np.ndarray:
        block = np.array([[0.0, 1.0], [-1.0, 0.0]])
        out = np.zeros((self.d, self.d))
        for k in range(self.d // 2):
            out[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = block
        return out


@dataclass(frozen=True)
class NormalForm:
    beta: np.ndarray
    residual: float
    gram: np.ndarray  # beta beta^T, reported for inspection, never asserted

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.beta))


def antisymmetric_normal_form(theta) -> NormalForm:
    """Real invertible beta with beta^T theta beta = Omega.

    The real Schur form of an antisymmetric matrix is already the orthogonal
    2x2 block pairing Q^T theta Q = blockdiag(lam_j [[0,1],[-1,0]]); negative
    lam_j are cured by swapping the two columns of the pair, and scaling each
    pair by lam_j^{-1/2} lands on Omega.
    """
    th = _theta_entries(theta)
    d = th.shape[0]
    if d % 2:
        raise ValueError("antisymmetric normal form needs even d")
    if abs(np.linalg.det(th)) <= 1e-12:
        raise ValueError("theta is numerically singular")
    T, Q = schur(th, output="real")
    scale = np.empty(d)
    for k in range(d // 2):
        i = 2 * k
        lam = T[i, i + 1]
        if lam < 0:
            Q = Q.copy()
            Q[:, [i, i + 1]] = Q[:, [i + 1, i]]
            lam = -lam
        scale[i] = scale[i + 1] = lam**-0.5
    beta = Q * scale
    omega = SymplecticForm(d).matrix
    residual = float(np.abs(beta.T @ th @ beta - omega).max())
    return NormalForm(beta, residual, beta @ beta.T)


def random_sp_block(d: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """Random element of the group of the block form: e^{Omega S}, S symmetric.

    Omega S runs over the full Lie algebra as S runs over symmetric matrices.
    S is normalised to unit spectral norm so that cond(g) <= e^{2 scale}
    independently of d; quadrature error in the invariance checks grows with
    cond(g)^d, so unbounded generators would drown the identity being tested.
    """
    omega = SymplecticForm(d).matrix
    s = rng.normal(size=(d, d))
    s = (s + s.T) / 2.0
    s /= np.linalg.norm(s, 2)
    return expm(scale * omega @ s)


def sp_theta_conjugate(g: np.ndarray, beta: np.ndarray, theta=None) -> np.ndarray:
    """beta g beta^{-1}; maps the block-form group onto Sp(theta).

    g must preserve the block form. When theta is supplied the output is
    verified against it as well.
    """
    g = np.asarray(g, dtype=float)
    beta = np.asarray(beta, dtype=float)
    d = g.shape[0]
    if not sp_group_membership(g, SymplecticForm(d).matrix, MEMBERSHIP_TOL):
        raise ValueError("g does not preserve the block form")
    out = beta @ g @ np.linalg.inv(beta)
    if theta is not None and not sp_group_membership(out, _theta_entries(theta), MEMBERSHIP_TOL):
        raise ValueError("conjugated matrix fails the theta-form membership")
    return out


def random_sp_theta(theta, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    nf = antisymmetric_normal_form(theta)
    return sp_theta_conjugate(random_sp_block(nf.beta.shape[0], rng, scale), nf.beta, theta)


@dataclass(frozen=True)
class InvarianceReport:
    rows: tuple  # (transform index, multi-index, residual)

    @property
    def max_residual(self) -> float:
        return max((r[2] for r in self.rows), default=0.0)

    def to_json(self) -> str:
        return json.dumps(
            {
                "max_residual": self.max_residual,
                "rows": [{"g": i, "monomial": list(n), "residual": r} for i, n, r in self.rows],
            }
        )


def sp_invariant_functional_check(theta, degree: int, rule, n_transforms: int = 20, seed: int = 0) -> InvarianceReport:
    """Invariance of the homogeneous integration functional under Sp(theta).

    Symplectic matrices have determinant 1, so the weighted pullback must
    preserve every monomial integral exactly; rows record the quadrature
    residual per (random transform, monomial up to the degree).
    """
    th = _theta_entries(theta)
    d = th.shape[0]
    if rule.d != d:
        raise ValueError("quadrature rule dimension mismatch")
    rng = np.random.default_rng(seed)
    nf = antisymmetric_normal_form(th)
    rows = []
    for i in range(n_transforms):
        g = sp_theta_conjugate(random_sp_block(d, rng), nf.beta, th)
        for nvec in _multi_indices(d, degree):
            b = SpherePoly.monomial(d, nvec)
            rows.append((i, nvec, invariance_residual(g, b, rule)))
    return InvarianceReport(tuple(rows))


# ---------------------------------------------------------------------------
# grid model of the phase-shift unitaries


@dataclass(frozen=True)
class UniformGrid:
    """Uniform box grid (points - n//2) * spacing per axis, zero-padded outside."""

    d: int
    points_per_axis: int
    spacing: float

    def __post_init__(self):
        if self.points_per_axis < 4 or self.spacing <= 0:
            raise ValueError("need at least 4 points per axis and positive spacing")

    @property
    def axis(self) -> np.ndarray:
        n = self.points_per_axis
        return (np.arange(n) - n // 2) * self.spacing

    def mesh(self) -> np.ndarray:
        axes = np.meshgrid(*([self.axis] * self.d), indexing="ij")
        return np.stack(axes, axis=-1)

    def steps_of(self, t) -> np.ndarray:
        """Integer step count of a grid-aligned shift; rejects misaligned t."""
        t = np.asarray(t, dtype=float)
        if t.shape != (self.d,):
            raise ValueError(f"shift must have shape ({self.d},)")
        steps = t / self.spacing
        rounded = np.round(steps)
        if np.abs(steps - rounded).max() > 1e-9:
            raise ValueError("shift is not aligned with the grid")
        return rounded.astype(int)


def grid_unitary_apply(grid: UniformGrid, theta, t, xi: np.ndarray) -> np.ndarray:
    """(U(t) xi)(u) = exp(+(i/2) <t, theta u>) xi(u - t), zero-padded.

    The phase sign is fixed so that U(t)U(s) = exp(+(i/2)<t, theta s>) U(t+s).
    """
    th = _theta_entries(theta)
    t = np.asarray(t, dtype=float)
    steps = grid.steps_of(t)
    xi = np.asarray(xi)
    if xi.shape != (grid.points_per_axis,) * grid.d:
        raise ValueError("state shape does not match the grid")
    shifted = np.zeros_like(xi, dtype=complex)
    src = []
    dst = []
    for k, step in enumerate(steps):
        n = grid.points_per_axis
        if abs(step) >= n:
            return shifted
        if step >= 0:
            dst.append(slice(step, n))
            src.append(slice(0, n - step))
        else:
            dst.append(slice(0, n + step))
            src.append(slice(-step, n))
    shifted[tuple(dst)] = xi[tuple(src)]
    mesh = grid.mesh()
    phase = np.exp(0.5j * np.tensordot(mesh, th.T @ t, axes=(-1, 0)))
    return phase * shifted


def ccr_phase(t, s, theta) -> complex:
    th = _theta_entries(theta)
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    return complex(np.exp(0.5j * float(t @ th @ s)))


def _default_test_vectors(grid: UniformGrid) -> list:
    mesh = grid.mesh()
    r2 = np.sum(mesh**2, axis=-1)
    gauss = np.exp(-0.5 * r2)
    wave = np.exp(1j * np.tensordot(mesh, np.arange(1, grid.d + 1, dtype=float), axes=(-1, 0)))
    poly = (1.0 + mesh[..., 0]) * np.exp(-0.7 * r2)
    return [gauss, gauss * wave, poly]


def ccr_phase_residual(t, s, theta, grid: UniformGrid, test_vectors=None) -> float:
    """max |U(t)U(s) xi - phase * U(t+s) xi| over an interior window.

    The window keeps the points whose preimages under both shift orders stay
    inside the box, so zero padding never enters the comparison.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    steps_t = grid.steps_of(t)
    steps_total = steps_t + grid.steps_of(s)
    n = grid.points_per_axis
    interior = []
    # u is comparable when both u - t and u - t - s stayed inside the box
    for outer, total in zip(steps_t, steps_total):
        lo = max(0, outer, total)
        hi = min(n, n + outer, n + total)
        if lo >= hi:
            raise ValueError("shifts leave no interior window on this grid")
        interior.append(slice(lo, hi))
    interior = tuple(interior)
    phase = ccr_phase(t, s, theta)
    worst = 0.0
    for xi in test_vectors or _default_test_vectors(grid):
        lhs = grid_unitary_apply(grid, theta, t, grid_unitary_apply(grid, theta, s, xi))
        rhs = phase * grid_unitary_apply(grid, theta, t + s, xi)
        worst = max(worst, float(np.abs((lhs - rhs)[interior]).max()))
    return worst


# ---------------------------------------------------------------------------
# scalar decay profiles


def multiplier_identity_residual(g: np.ndarray, b, d: int, samples: int = 10000, seed: int = 0) -> float:
    """Pointwise residual of the conjugated-multiplier factorization.

    Checks b(gt/|gt|)(1+|gt|^2)^{-d/2} against
    (V_g b)(t/|t|) * (|gt|/|t|)^d * (1+|gt|^2)^{-d/2} on sampled t spanning
    several orders of magnitude; the two sides are equal as scalars, so the
    residual is pure roundoff.
    """
    g = np.asarray(g, dtype=float)
    if abs(np.linalg.det(g)) <= 1e-12:
        raise ValueError("g is numerically singular")
    rng = np.random.default_rng(seed)
    t = rng.normal(size=(samples, d)) * np.exp(rng.uniform(-3, 3, size=(samples, 1)))
    norms = np.linalg.norm(t, axis=1)
    keep = norms > 1e-12
    t, norms = t[keep], norms[keep]
    gt = t @ g.T
    gnorms = np.linalg.norm(gt, axis=1)
    ev = as_evaluator(b)
    lhs = ev(gt / gnorms[:, None]) * (1.0 + gnorms**2) ** (-d / 2.0)
    pullback = vg_action(g, b)
    rhs = pullback(t / norms[:, None]) * (gnorms / norms) ** d * (1.0 + gnorms**2) ** (-d / 2.0)
    return float(np.abs(lhs - rhs).max())


def _shell_points(d: int, R: float, n_random: int, rng: np.random.Generator) -> np.ndarray:
    dirs = rng.normal(size=(n_random, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = np.vstack([np.eye(d), -np.eye(d), dirs])
    radii = np.geomspace(R, 2.0 * R, 17)
    return (dirs[:, None, :] * radii[None, :, None]).reshape(-1, d)


def _h_weight(g: np.ndarray, t: np.ndarray, d: int) -> np.ndarray:
    """(|gt|/|t|)^d (1+|gt|^2)^{-d/2} - (1+|t|^2)^{-d/2}."""
    norms = np.linalg.norm(t, axis=-1)
    gnorms = np.linalg.norm(t @ g.T, axis=-1)
    return (gnorms / norms) ** d * (1.0 + gnorms**2) ** (-d / 2.0) - (1.0 + norms**2) ** (-d / 2.0)


@dataclass(frozen=True)
class ShellProfile:
    radii: tuple
    sups: tuple
    extra: dict

    def bounded_ratio(self) -> float:
        """max over the last two radii / max over the first two."""
        if len(self.sups) < 4:
            raise ValueError("need at least four radii")
        head = max(self.sups[0], self.sups[1])
        tail = max(self.sups[-2], self.sups[-1])
        return tail / head if head > 0 else float("inf")

    def to_json(self) -> str:
        return json.dumps({"radii": list(self.radii), "sup": list(self.sups), **self.extra})


def h_decay_profile(
    g: np.ndarray,
    d: int,
    shell_radii: Sequence[float],
    n_random: int = 2000,
    seed: int = 0,
    cell_radii: Sequence[int] | None = None,
) -> ShellProfile:
    """Weighted sups sup_{|t| in [R, 2R]} |h(t)| |t|^{d+2} per shell radius.

    Bounded profiles certify the quadratic-decay margin of h beyond mere
    integrability. When cell_radii is given (affordable for d = 2), partial
    sums of per-unit-cell sups of |h| over balls are reported as well; their
    stabilization is the summability surrogate.
    """
    g = np.asarray(g, dtype=float)
    if abs(np.linalg.det(g)) <= 1e-12:
        raise ValueError("g is numerically singular")
    rng = np.random.default_rng(seed)
    sups = []
    for R in shell_radii:
        pts = _shell_points(d, float(R), n_random, rng)
        vals = np.abs(_h_weight(g, pts, d)) * np.linalg.norm(pts, axis=1) ** (d + 2)
        sups.append(float(vals.max()))
    extra = {}
    if cell_radii is not None:
        # cell n + [0,1]^d sampled at its corners and center
        corners = np.array(np.meshgrid(*([[0.0, 1.0]] * d), indexing="ij")).reshape(d, -1).T
        offsets = np.vstack([corners, np.full((1, d), 0.5)])
        cell_sums = []
        for R in cell_radii:
            total = 0.0
            for chunk in iter_shell(d, -1, int(R) * int(R)):
                corners = chunk[:, None, :].astype(float) + offsets[None, :, :]
                flat = corners.reshape(-1, d)
                norms = np.linalg.norm(flat, axis=1)
                vals = np.zeros(len(flat))
                ok = norms > 1e-9
                vals[ok] = np.abs(_h_weight(g, flat[ok], d))
                total += float(np.sum(vals.reshape(len(chunk), -1).max(axis=1)))
            cell_sums.append(total)
        extra["cell_radii"] = [int(r) for r in cell_radii]
        extra["cell_sums"] = cell_sums
    return ShellProfile(tuple(float(r) for r in shell_radii), tuple(sups), extra)


def riesz_difference_decay(k: int, d: int, radii: Sequence[float], n_random: int = 2000, seed: int = 0) -> ShellProfile:
    """Shell sups of |t_k/|t| - t_k/(1+|t|^2)^{1/2}| * |t|^2.

    The weighted difference tends to (1/2)|t_k|/|t| <= 1/2 along rays, so the
    profile is bounded by 1/2 up to sampling slack and approaches it on the
    k-th axis.
    """
    if not 1 <= k <= d:
        raise ValueError(f"coordinate index {k} out of range 1..{d}")
    rng = np.random.default_rng(seed)
    sups = []
    for R in radii:
        pts = _shell_points(d, float(R), n_random, rng)
        norms = np.linalg.norm(pts, axis=1)
        hk = pts[:, k - 1] / norms - pts[:, k - 1] / np.sqrt(1.0 + norms**2)
        sups.append(float((np.abs(hk) * norms**2).max()))
    return ShellProfile(tuple(float(r) for r in radii), tuple(sups), {})
