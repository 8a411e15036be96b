"""Twisted torus algebra with finitely supported coefficient series.

Elements are finite sums x = sum_n c_n u_n over integer vectors n, multiplied by
the relation u_n u_m = exp((i/2) <n, theta m>) u_{n+m} for a fixed real
antisymmetric matrix theta. Coefficients are complex doubles; the phases are
unimodular so no symbolic field is needed. Magnitudes at or below PRUNE_TOL are
dropped after every operation to keep supports finite under repeated products.

Since <n, theta n> = 0, each u_n is unitary with u_n* = u_{-n}; the adjoint rule
below follows from that.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

PRUNE_TOL = 1e-15
ANTISYM_TOL = 1e-12


@dataclass(frozen=True)
class ThetaMatrix:
    """Real antisymmetric d x d twist matrix."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"theta must be square, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError("theta needs dimension >= 2")
        if np.abs(arr + arr.T).max() > ANTISYM_TOL:
            raise ValueError("theta is not antisymmetric within 1e-12")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    def is_nondegenerate(self, tol: float = 1e-12) -> bool:
        return abs(np.linalg.det(self.entries)) > tol

    @classmethod
    def from_upper(cls, d: int, upper: Iterable[float]) -> "ThetaMatrix":
        """Build from the row-major strict upper triangle (d(d-1)/2 entries)."""
        vals = list(upper)
        need = d * (d - 1) // 2
        if len(vals) != need:
            raise ValueError(f"expected {need} upper-triangular entries for d={d}, got {len(vals)}")
        arr = np.zeros((d, d))
        k = 0
        for i in range(d):
            for j in range(i + 1, d):
                arr[i, j] = vals[k]
                arr[j, i] = -vals[k]
                k += 1
        return cls(arr)

    def same_as(self, other: "ThetaMatrix") -> bool:
        return self is other or (
            self.entries.shape == other.entries.shape
            and np.array_equal(self.entries, other.entries)
        )


def _check_same_theta(x: "TorusElement", y: "TorusElement") -> None:
    if not x.theta.same_as(y.theta):
        raise ValueError("elements live over different theta matrices; refusing to combine")


@dataclass(frozen=True)
class TorusElement:
    """Finitely supported twisted series over Z^d.

    coeffs maps integer tuples to complex amplitudes. Instances are immutable
    values; all arithmetic returns new elements.
    """

    theta: ThetaMatrix
    coeffs: Mapping[tuple, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        d = self.theta.d
        for n, c in self.coeffs.items():
            key = tuple(int(v) for v in n)
            if len(key) != d:
                raise ValueError(f"mode {key} has wrong length for d={d}")
            c = complex(c)
            if abs(c) > PRUNE_TOL:
                clean[key] = clean.get(key, 0.0) + c
        object.__setattr__(self, "coeffs", clean)

    @property
    def d(self) -> int:
        return self.theta.d

    def support(self) -> list:
        return sorted(self.coeffs)

    def coeff(self, n) -> complex:
        return self.coeffs.get(tuple(int(v) for v in n), 0j)

    def support_radius(self) -> float:
        """Largest Euclidean norm over the support (0 for the zero element)."""
        if not self.coeffs:
            return 0.0
        return max(float(np.linalg.norm(n)) for n in self.coeffs)

    def __add__(self, other: "TorusElement") -> "TorusElement":
        _check_same_theta(self, other)
        out = dict(self.coeffs)
        for n, c in other.coeffs.items():
            out[n] = out.get(n, 0j) + c
        return TorusElement(self.theta, out)

    def __sub__(self, other: "TorusElement") -> "TorusElement":
        return self + (-1) * other

    def __rmul__(self, scalar) -> "TorusElement":
        s = complex(scalar)
        return TorusElement(self.theta, {n: s * c for n, c in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, TorusElement):
            return torus_mul(self, other)
        return complex(other) * self

    def l2_norm(self) -> float:
        return float(np.sqrt(sum(abs(c) ** 2 for c in self.coeffs.values())))


def unitary_generator(theta: ThetaMatrix, n) -> TorusElement:
    """The generator u_n."""
    return TorusElement(theta, {tuple(int(v) for v in n): 1.0 + 0j})


def torus_identity(theta: ThetaMatrix) -> TorusElement:
    return unitary_generator(theta, (0,) * theta.d)


def twist_phase(theta: ThetaMatrix, n, m) -> complex:
    """exp((i/2) <n, theta m>)."""
    val = float(np.dot(np.asarray(n, dtype=float), theta.entries @ np.asarray(m, dtype=float)))
    return complex(np.exp(0.5j * val))


def torus_mul(x: TorusElement, y: TorusElement) -> TorusElement:
    """(x y)_p = sum over n+m=p of x_n y_m exp((i/2)<n, theta m>)."""
    _check_same_theta(x, y)
    out: dict = {}
    th = x.theta
    for n, cn in x.coeffs.items():
        for m, cm in y.coeffs.items():
            p = tuple(a + b for a, b in zip(n, m))
            out[p] = out.get(p, 0j) + cn * cm * twist_phase(th, n, m)
    return TorusElement(th, out)


def torus_adjoint(x: TorusElement) -> TorusElement:
    """(x*)_n = conj(x_{-n}); satisfies (xy)* = y* x*."""
    return TorusElement(x.theta, {tuple(-v for v in n): c.conjugate() for n, c in x.coeffs.items()})


def torus_trace(x: TorusElement) -> complex:
    """The zero-mode coefficient."""
    return x.coeffs.get((0,) * x.d, 0j)


def torus_derivation(j: int, x: TorusElement) -> TorusElement:
    """Coefficientwise derivation: mode n picks up a factor i n_j. j is 1-based."""
    if not 1 <= j <= x.d:
        raise ValueError(f"derivation index {j} out of range 1..{x.d}")
    return TorusElement(x.theta, {n: 1j * n[j - 1] * c for n, c in x.coeffs.items()})


def torus_laplacian_eigenvalue(n) -> float:
    """|n|^2, the nonnegative Laplacian eigenvalue attached to mode n."""
    return float(sum(int(v) ** 2 for v in n))


def torus_translate(x: TorusElement, t) -> TorusElement:
    """Translation automorphism: mode n scaled by exp(i <n, t>)."""
    t = np.asarray(t, dtype=float)
    if t.shape != (x.d,):
        raise ValueError(f"translation vector must have length {x.d}")
    return TorusElement(
        x.theta,
        {n: c * complex(np.exp(1j * float(np.dot(n, t)))) for n, c in x.coeffs.items()},
    )


def torus_translate_average(x: TorusElement) -> complex:
    """Average of translates over the full period box, times its volume.

    Integrating exp(i <n, t>) over [-pi, pi]^d kills every n != 0 exactly, so the
    value is (2 pi)^d times the zero-mode coefficient. No quadrature involved.
    """
    return (2.0 * np.pi) ** x.d * torus_trace(x)


def to_json(x: TorusElement) -> str:
    doc = {
        "d": x.d,
        "theta": x.theta.entries.tolist(),
        "coeffs": [
            {"n": list(n), "re": c.real, "im": c.imag} for n, c in sorted(x.coeffs.items())
        ],
    }
    return json.dumps(doc, sort_keys=True)


def from_json(text: str) -> TorusElement:
    doc = json.loads(text)
    theta = ThetaMatrix(np.asarray(doc["theta"], dtype=float))
    if theta.d != int(doc["d"]):
        raise ValueError("theta shape disagrees with the declared dimension")
    coeffs = {tuple(int(v) for v in rec["n"]): complex(rec["re"], rec["im"]) for rec in doc["coeffs"]}
    return TorusElement(theta, coeffs)
