"""Batch verification CLI.

Runs one named check suite against the library, collects (name, measured,
reference, tolerance, pass) records, prints them, and optionally writes a JSON
or CSV report. A record passes when |measured - reference| <= tolerance.
Given the same config and seed, every measured value reproduces exactly; wall
time is the only field outside the determinism contract.

Exit codes: 0 all checks pass, 1 at least one check failed, 2 config error,
3 report I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

EXIT_PASS = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3

SUITES = ("torus-trace", "su2", "moments", "symplectic", "moyal", "symbol-compactness")


class ConfigError(Exception):
    pass


@dataclass
class VerifyConfig:
    suite: str
    d: int = 2
    theta_upper: tuple | None = None
    nmax: int = 4096
    lmax: int = 200
    max_degree: int = 10
    word: str = "b3b3b3b3"
    seed: int = 0
    out: str | None = None
    format: str = "json"
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")
        if self.d < 2:
            raise ConfigError("d must be >= 2")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        for name, tol in self.tolerances.items():
            if tol <= 0:
                raise ConfigError(f"tolerance for {name} must be positive")

    def echo(self) -> dict:
        return {
            "suite": self.suite,
            "d": self.d,
            "theta": None if self.theta_upper is None else list(self.theta_upper),
            "nmax": self.nmax,
            "lmax": self.lmax,
            "max_degree": self.max_degree,
            "word": self.word,
            "seed": self.seed,
            "tolerances": dict(sorted(self.tolerances.items())),
        }


@dataclass
class VerifyReport:
    suite: str
    records: list
    wall_time_s: float
    config: dict

    @property
    def overall_pass(self) -> bool:
        return all(r["pass"] for r in self.records)


def _theta_of(config: VerifyConfig):
    from .torus import ThetaMatrix

    if config.theta_upper is not None:
        return ThetaMatrix.from_upper(config.d, config.theta_upper)
    count = config.d * (config.d - 1) // 2
    return ThetaMatrix.from_upper(config.d, [np.pi / (2.0 + k) for k in range(count)])


def _record(name: str, measured, reference, tol: float, overrides: dict) -> dict:
    tol = float(overrides.get(name, tol))
    m = float(measured)
    r = float(reference)
    return {"name": name, "measured": m, "reference": r, "tolerance": tol, "pass": bool(abs(m - r) <= tol)}


# ---------------------------------------------------------------------------
# suites


def _suite_torus_trace(cfg: VerifyConfig) -> list:
    from . import dixmier as dx
    from .sphere import SpherePoly, sphere_moment, sphere_volume
    from .torus import torus_identity, unitary_generator

    d = cfg.d
    tols = cfg.tolerances
    records = []
    one = SpherePoly.constant(d, 1.0)
    diag1 = dx.LatticeDiagonal.symbol_weighted(one)
    vol = sphere_volume(d)

    fit = dx.log_fit(diag1, dx.doubling_grid(cfg.nmax))
    records.append(_record("slope_constant", abs(fit.slope), vol, 0.02 * vol, tols))
    est = dx.normalised_trace_estimate(diag1, cfg.nmax)
    records.append(_record("estimate_constant", abs(est), vol / d, 0.03 * vol / d, tols))

    t1sq = SpherePoly.monomial(d, (2,))
    ref = sphere_moment((2,), d) / d
    est2 = dx.normalised_trace_estimate(dx.LatticeDiagonal.symbol_weighted(t1sq), cfg.nmax // 4)
    records.append(_record("estimate_t1_squared", abs(est2), ref, 0.05 * ref, tols))

    odd = dx.log_fit(dx.LatticeDiagonal.symbol_weighted(SpherePoly.coordinate(d, 1)), dx.doubling_grid(cfg.nmax // 4))
    records.append(_record("slope_odd", abs(odd.slope), 0.0, 1e-10, tols))

    drift = abs(dx.radial_integral_check(d, cfg.nmax) - dx.radial_integral_check(d, cfg.nmax // 4))
    records.append(_record("radial_integral_drift", drift, 0.0, 1e-3, tols))

    theta = _theta_of(cfg)
    e = tuple([1, 1] + [0] * (d - 2))
    x = (
        torus_identity(theta)
        + 0.5 * unitary_generator(theta, e)
        + 0.5 * unitary_generator(theta, tuple(-v for v in e))
    )
    y = SpherePoly.monomial(d, (0, 2))
    estimate, reference = dx.connes_trace_torus(x, y, min(cfg.nmax, 1024))
    records.append(
        _record(
            "connes_trace_mixed",
            abs(complex(estimate) - complex(reference)),
            0.0,
            0.05 * max(abs(complex(reference)), 0.01),
            tols,
        )
    )
    return records


def _suite_moments(cfg: VerifyConfig) -> list:
    from .sphere import (
        SpherePoly,
        _multi_indices,
        moment_recursion_check,
        quadrature_integrate,
        quadrature_rule,
        sphere_moment,
    )

    if cfg.d % 2:
        raise ConfigError("moment suite needs even d (the paired reduction identity)")
    tols = cfg.tolerances
    rep = moment_recursion_check(None, cfg.max_degree, d=cfg.d)
    records = [
        _record("odd_vanishing_residual", rep.max_odd_residual, 0.0, 1e-12, tols),
        _record("first_reduction_residual", rep.max_first_reduction_residual, 0.0, 1e-12, tols),
        _record("main_reduction_residual", rep.max_main_reduction_residual, 0.0, 1e-12, tols),
    ]
    kind = None if cfg.d != 4 else "hopf"
    rule = quadrature_rule(cfg.d, kind=kind, seed=cfg.seed)
    worst = 0.0
    for nvec in _multi_indices(cfg.d, min(6, cfg.max_degree)):
        got = quadrature_integrate(SpherePoly.monomial(cfg.d, nvec), rule).value
        worst = max(worst, abs(got - sphere_moment(nvec, cfg.d)))
    tol = 1e-8 if rule.kind in ("trapezoid", "product", "hopf") else 1e-4
    records.append(_record("quadrature_cross_check", worst, 0.0, tol, tols))
    return records


def _suite_su2(cfg: VerifyConfig) -> list:
    from scipy.linalg import expm

    from . import su2

    tols = cfg.tolerances
    records = []
    word = su2.GenPoly.parse(cfg.word)
    est, ref = su2.su2_dixmier_ratio(word, cfg.lmax)
    tol = max(0.02 * abs(complex(ref)), 0.01)
    records.append(_record(f"ratio_{cfg.word}", abs(complex(est) - complex(ref)), 0.0, tol, tols))

    block = su2.build_block(20)
    records.append(
        _record("commutator_norm_l20", su2.block_commutator_norm(block, 1, 2), 1.0 / 21.0, 1e-12, tols)
    )
    b = block.unit_gens
    casimir = np.abs(b[0] @ b[0] + b[1] @ b[1] + b[2] @ b[2] - np.eye(block.dim)).max()
    records.append(_record("casimir_residual_l20", casimir, 0.0, 1e-13, tols))

    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(100):
        g = expm(1j * np.tensordot(rng.normal(size=3), su2.PAULI_TRIPLE, axes=(0, 0)))
        h = expm(1j * np.tensordot(rng.normal(size=3), su2.PAULI_TRIPLE, axes=(0, 0)))
        worst = max(worst, float(np.abs(su2.su2_to_so3(g @ h) - su2.su2_to_so3(h) @ su2.su2_to_so3(g)).max()))
    records.append(_record("so3_product_residual", worst, 0.0, 1e-11, tols))

    cov = max(
        su2.conjugation_covariance_check(su2.build_block(2), 1, 0.3),
        su2.conjugation_covariance_check(su2.build_block(su2.HalfInteger(7)), 3, 1.1),
    )
    records.append(_record("conjugation_covariance", cov, 0.0, 1e-9, tols))

    small = max(2, cfg.lmax // 4)
    r_small = su2.beta_formula_residual(small, 0, 4, 0)
    r_big = su2.beta_formula_residual(cfg.lmax, 0, 4, 0)
    records.append(_record("beta_residual_040", r_big, 0.0, 0.05, tols))
    records.append(_record("beta_decrease_040", r_big / r_small, 0.0, 1.0, tols))
    odd_worst = max(
        su2.beta_formula_residual(cfg.lmax, 0, 1, 1),
        su2.beta_formula_residual(cfg.lmax, 1, 1, 1),
    )
    records.append(_record("beta_odd_zero", odd_worst, 0.0, 1e-12, tols))
    return records


def _suite_symplectic(cfg: VerifyConfig) -> list:
    from scipy.linalg import expm

    from . import moyal
    from .sphere import quadrature_rule

    tols = cfg.tolerances
    rng = np.random.default_rng(cfg.seed)
    records = []

    worst_nf = 0.0
    for d in (2, 4, 6):
        for _ in range(34):
            a = rng.normal(size=(d, d))
            th = a - a.T
            if abs(np.linalg.det(th)) < 1e-8:
                continue
            worst_nf = max(worst_nf, moyal.antisymmetric_normal_form(th).residual)
    records.append(_record("normal_form_residual", worst_nf, 0.0, 1e-10, tols))

    d = cfg.d if cfg.d % 2 == 0 else cfg.d + 1
    omega = moyal.SymplecticForm(d).matrix
    worst_exp = 0.0
    for _ in range(20):
        s = rng.normal(size=(d, d))
        a = omega @ (s + s.T) / 2.0
        g = expm(float(rng.uniform(-2, 2)) * a)
        worst_exp = max(worst_exp, float(np.abs(g.T @ omega @ g - omega).max()))
    records.append(_record("exp_membership", worst_exp, 0.0, 1e-9, tols))

    worst_conj = 0.0
    for _ in range(20):
        a = rng.normal(size=(d, d))
        th = a - a.T
        if abs(np.linalg.det(th)) < 1e-8:
            continue
        h = moyal.random_sp_theta(th, rng)
        worst_conj = max(worst_conj, float(np.abs(h.T @ th @ h - th).max()))
    records.append(_record("conjugate_membership", worst_conj, 0.0, 1e-9, tols))

    theta = _theta_of(cfg) if cfg.d % 2 == 0 else None
    if theta is not None:
        degree = min(4, cfg.max_degree)
        if cfg.d == 2:
            rep = moyal.sp_invariant_functional_check(theta, degree, quadrature_rule(2), 20, cfg.seed)
            records.append(_record("invariance_product", rep.max_residual, 0.0, 1e-8, tols))
        elif cfg.d == 4:
            rep = moyal.sp_invariant_functional_check(theta, degree, quadrature_rule(4, kind="hopf"), 20, cfg.seed)
            records.append(_record("invariance_hopf", rep.max_residual, 0.0, 1e-6, tols))
            # the (64,128) product rule has 2^20 nodes, the million-sample check
            rep2 = moyal.sp_invariant_functional_check(
                theta, degree, quadrature_rule(4, n=(64, 128), kind="hopf"), 3, cfg.seed + 1
            )
            records.append(_record("invariance_samples_1m", rep2.max_residual, 0.0, 1e-5, tols))
        # d >= 6: no quadrature in the library resolves the pullback integrand
        # well enough to certify the identity, so only the algebraic records run
    return records


def _suite_moyal(cfg: VerifyConfig) -> list:
    from . import moyal
    from .sphere import SpherePoly
    from .torus import ThetaMatrix

    tols = cfg.tolerances
    rng = np.random.default_rng(cfg.seed)
    records = []

    theta = ThetaMatrix.from_upper(2, [np.pi])
    grid = moyal.UniformGrid(2, 96, 0.5)
    worst = moyal.ccr_phase_residual((1.0, 0.0), (0.0, 1.0), theta, grid)
    worst = max(worst, moyal.ccr_phase_residual((1.5, -2.0), (1.5, -2.0), theta, grid))
    t = tuple(0.5 * rng.integers(-4, 5, size=2).astype(float))
    s = tuple(0.5 * rng.integers(-4, 5, size=2).astype(float))
    worst = max(worst, moyal.ccr_phase_residual(t, s, theta, grid))
    records.append(_record("ccr_residual", worst, 0.0, 1e-13, tols))
    anti = abs(moyal.ccr_phase(t, s, theta) * moyal.ccr_phase(s, t, theta) - 1.0)
    records.append(_record("ccr_antisymmetry", anti, 0.0, 1e-14, tols))

    worst_mult = moyal.multiplier_identity_residual(np.diag([2.0, 1.0]), SpherePoly.coordinate(2, 1), 2)
    g4 = moyal.random_sp_block(4, rng)
    worst_mult = max(
        worst_mult,
        moyal.multiplier_identity_residual(g4, SpherePoly(4, {(1, 1, 0, 0): 1.0}), 4, seed=cfg.seed),
    )
    records.append(_record("multiplier_identity", worst_mult, 0.0, 1e-13, tols))

    g = np.diag([2.0, 0.5])
    prof = moyal.h_decay_profile(g, 2, [10.0, 50.0, 250.0, 1000.0], seed=cfg.seed, cell_radii=(500, 1000))
    records.append(_record("h_profile_ratio", prof.bounded_ratio(), 0.0, 1.05, tols))
    cs = prof.extra["cell_sums"]
    records.append(_record("h_cell_sum_drift", abs(cs[1] / cs[0] - 1.0), 0.0, 0.01, tols))

    rz = moyal.riesz_difference_decay(1, cfg.d, [10.0, 50.0, 250.0, 1000.0], seed=cfg.seed)
    records.append(_record("riesz_profile_ratio", rz.bounded_ratio(), 0.0, 1.05, tols))
    records.append(_record("riesz_sup_1000", rz.sups[-1], 0.5, 1e-4, tols))
    return records


def _suite_symbol_compactness(cfg: VerifyConfig) -> list:
    from . import symbols as sy
    from .sphere import SpherePoly
    from .torus import twist_phase, unitary_generator

    tols = cfg.tolerances
    theta = _theta_of(cfg)
    d = cfg.d
    rng = np.random.default_rng(cfg.seed)
    records = []

    window = sy.LatticeWindow(d, 6)
    m1 = tuple([1] + [0] * (d - 1))
    m2 = tuple([0, 1] + [0] * (d - 2))
    u1, u2 = unitary_generator(theta, m1), unitary_generator(theta, m2)
    prod = sy.build_pi1_matrix(u1, window).matrix @ sy.build_pi1_matrix(u2, window).matrix
    target = twist_phase(theta, m1, m2) * sy.build_pi1_matrix(
        unitary_generator(theta, tuple(a + b for a, b in zip(m1, m2))), window
    ).matrix
    cols = window.interior(2.5)
    records.append(_record("pi1_cocycle_residual", np.abs((prod - target)[:, cols]).max(), 0.0, 1e-13, tols))

    probe = tuple([3, 4] + [0] * (d - 2))
    small = sy.LatticeWindow(d, 5)
    entry = sy.build_pi2_matrix(SpherePoly.coordinate(d, 1), small)
    idx = small.index()[probe]
    records.append(_record("pi2_direction_entry", entry[idx, idx].real, 0.6, 1e-14, tols))

    vals = [
        sy.commutator_tail_norm(unitary_generator(theta, m1), SpherePoly.coordinate(d, 1), R)
        for R in (50, 100, 200, 400)
    ]
    dev = max(abs(a / b - 2.0) for a, b in zip(vals, vals[1:]))
    records.append(_record("commutator_halving_deviation", dev, 0.0, 0.2, tols))

    worst_ratio = 0.0
    for _ in range(3):
        word = sy.random_word(theta, rng)
        rep = sy.residual_compactness_report(word, (25, 50, 100, 200))
        worst_ratio = max(worst_ratio, max(b / a for a, b in zip(rep.tail_norms, rep.tail_norms[1:])))
    records.append(_record("word_residual_decrease", worst_ratio, 0.0, 0.999, tols))

    gap = 0.0
    for _ in range(5):
        w1, w2 = sy.random_word(theta, rng, 2), sy.random_word(theta, rng, 2)
        gap = max(gap, sy.sym(w1 * w2).gap(sy.sym(w1) * sy.sym(w2), seed=cfg.seed))
    records.append(_record("sym_homomorphism_gap", gap, 0.0, 1e-12, tols))

    word = sy.OperatorWord(theta, (sy.SphereLetter(SpherePoly.coordinate(d, 1)), sy.TorusLetter(u1)))
    R = 8
    win = sy.LatticeWindow(d, 16)
    diff = sy.word_matrix(word, win) - sy.representative_matrix(sy.sym(word), win)
    pts = win.points
    r2 = np.einsum("ij,ij->i", pts, pts)
    cols = np.nonzero((r2 > R * R) & (r2 <= (win.radius - 2) ** 2))[0]
    mat_norm = float(np.linalg.norm(diff[:, cols], 2))
    bound = sy.residual_compactness_report(word, (R,)).tail_norms[0]
    records.append(_record("tail_bound_certificate", max(0.0, mat_norm - bound), 0.0, 1e-12, tols))
    return records


_SUITE_RUNNERS = {
    "torus-trace": _suite_torus_trace,
    "moments": _suite_moments,
    "su2": _suite_su2,
    "symplectic": _suite_symplectic,
    "moyal": _suite_moyal,
    "symbol-compactness": _suite_symbol_compactness,
}


def run_suite(config: VerifyConfig) -> VerifyReport:
    start = time.perf_counter()
    records = _SUITE_RUNNERS[config.suite](config)
    return VerifyReport(config.suite, records, time.perf_counter() - start, config.echo())


# ---------------------------------------------------------------------------
# reporting and entry point


def emit_report(report: VerifyReport, fmt: str, path: str) -> None:
    if fmt == "json":
        payload = {
            "suite": report.suite,
            "config": report.config,
            "records": report.records,
            "overall_pass": report.overall_pass,
            "wall_time_s": report.wall_time_s,
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["name", "measured", "reference", "tolerance", "pass"])
        for r in report.records:
            writer.writerow([r["name"], repr(r["measured"]), repr(r["reference"]), repr(r["tolerance"]), r["pass"]])
        text = buf.getvalue()
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _parse_config_file(path: str) -> dict:
    out = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, val = (part.strip() for part in line.split("=", 1))
                out[key] = val
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    return out


_INT_KEYS = ("d", "nmax", "lmax", "max_degree", "seed")


def _build_config(args, tol_overrides: dict) -> VerifyConfig:
    settings: dict = {}
    if args.config:
        for key, val in _parse_config_file(args.config).items():
            norm = key.replace("-", "_")
            if norm in _INT_KEYS:
                try:
                    settings[norm] = int(val)
                except ValueError as exc:
                    raise ConfigError(f"config key {key} needs an integer, got {val!r}") from exc
            elif norm in ("suite", "word", "out", "format"):
                settings[norm] = val
            elif norm == "theta":
                settings["theta_upper"] = _parse_theta(val)
            elif norm.startswith("tol."):
                try:
                    settings.setdefault("tolerances", {})[norm[4:]] = float(val)
                except ValueError as exc:
                    raise ConfigError(f"config key {key} needs a float") from exc
            else:
                raise ConfigError(f"unknown config key {key!r}")
    flag_map = {
        "suite": args.suite if args.suite else args.suite_positional,
        "d": args.d,
        "nmax": args.nmax,
        "lmax": args.lmax,
        "max_degree": args.max_degree,
        "word": args.word,
        "seed": args.seed,
        "out": args.out,
        "format": args.format,
    }
    for key, val in flag_map.items():
        if val is not None:
            settings[key] = val
    if args.theta is not None:
        settings["theta_upper"] = _parse_theta(args.theta)
    if tol_overrides:
        merged = settings.get("tolerances", {})
        merged.update(tol_overrides)
        settings["tolerances"] = merged
    if "suite" not in settings or settings["suite"] is None:
        raise ConfigError("no suite given (positional argument, --suite, or config file)")
    try:
        return VerifyConfig(**settings)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_theta(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse theta entries {text!r}") from exc


def _extract_tol_flags(argv: list) -> tuple:
    rest = []
    tols = {}
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--tol."):
            body = tok[6:]
            if "=" in body:
                name, val = body.split("=", 1)
                i += 1
            else:
                name = body
                if i + 1 >= len(argv):
                    raise ConfigError(f"flag --tol.{name} needs a value")
                val = argv[i + 1]
                i += 2
            if not name:
                raise ConfigError("empty check name in --tol. flag")
            try:
                tols[name] = float(val)
            except ValueError as exc:
                raise ConfigError(f"tolerance for {name} must be a float, got {val!r}") from exc
        else:
            rest.append(tok)
            i += 1
    return rest, tols


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = argparse.ArgumentParser(
        prog="nct-verify",
        description="Run a verification suite and report pass/fail records.",
    )
    parser.add_argument("suite_positional", nargs="?", choices=SUITES, metavar="suite")
    parser.add_argument("--suite", choices=SUITES)
    parser.add_argument("--d", type=int)
    parser.add_argument("--theta", help="comma list of strict upper-triangle entries")
    parser.add_argument("--nmax", type=int)
    parser.add_argument("--lmax", type=int)
    parser.add_argument("--max-degree", type=int, dest="max_degree")
    parser.add_argument("--word", help="generator word for the su2 suite, e.g. b1b1")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="report file path")
    parser.add_argument("--format", choices=("json", "csv"))
    parser.add_argument("--config", help="flat key=value config file; flags win")

    try:
        argv, tol_overrides = _extract_tol_flags(argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            # argparse exits 2 on bad flags, which matches the config-error code,
            # but normalize help (exit 0) through untouched
            return EXIT_PASS if exc.code == 0 else EXIT_CONFIG_ERROR
        config = _build_config(args, tol_overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    try:
        report = run_suite(config)
    except (ConfigError, ValueError) as exc:
        # the library validates parameter ranges (grid sizes, degrees, ...)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    for r in report.records:
        status = "PASS" if r["pass"] else "FAIL"
        print(
            f"[{status}] {r['name']}: measured={r['measured']:.6g} "
            f"reference={r['reference']:.6g} tolerance={r['tolerance']:.3g}"
        )
    n_pass = sum(1 for r in report.records if r["pass"])
    print(
        f"suite {report.suite}: {'PASS' if report.overall_pass else 'FAIL'} "
        f"({n_pass}/{len(report.records)} checks, {report.wall_time_s:.2f}s)"
    )

    if config.out:
        try:
            emit_report(report, config.format, config.out)
        except OSError as exc:
            print(f"i/o error writing report: {exc}", file=sys.stderr)
            return EXIT_IO_ERROR

    return EXIT_PASS if report.overall_pass else EXIT_CHECK_FAILURE


if __name__ == "__main__":
    sys.exit(main())
