"""Command-line driver: reproducible experiments with CSV/JSON reports.

Commands:
    besicovitch --k K --out DIR       build a rectangle family, emit JSON,
                                      SVG and a stats CSV
    ratio --config FILE               run the square-function ratio
                                      experiment over a (k, p) grid
    validate --suite NAME [--fast]    run the property suites, TAP output
    szego --config FILE               kernel samples and consistency reports

Exit codes: 0 ok, 1 check failure, 2 usage error, 3 internal error.

All numeric output is written with 17 significant digits, newline-separated,
locale independent.  Runs are deterministic for a fixed config: stochastic
steps use counter-based Philox streams derived from the mandatory seed, and
the wall-clock timings live in the run manifest, not in the data files.
"""

from __future__ import annotations

import os

if "CONEKIT_THREADS" in os.environ:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["CONEKIT_THREADS"])

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import besicovitch as bs
from . import jordan as jd
from . import multiplier as mp
from . import szego as sz


def _fmt(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, fieldnames, rows, header=None):
    lines = [",".join(header if header is not None else fieldnames)]
    for row in rows:
        lines.append(",".join(_fmt(row[name]) for name in fieldnames))
    Path(path).write_text("\n".join(lines) + "\n")


def sha256_path(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, config, timings, outputs):
    manifest = {
        "tool_version": __version__,
        "config_sha256": hashlib.sha256(
            json.dumps(config, sort_keys=True).encode()
        ).hexdigest(),
        "timings_ms": {k: round(v, 3) for k, v in timings.items()},
        "outputs": {name: sha256_path(out_dir / name) for name in outputs},
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True) + "\n"
    )


def load_config(path, required, optional):
    """Schema-checked JSON config: unknown keys are rejected."""
    doc = json.loads(Path(path).read_text())
    unknown = set(doc) - set(required) - set(optional)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    missing = set(required) - set(doc)
    if missing:
        raise ValueError(f"missing config keys: {sorted(missing)}")
    merged = dict(optional)
    merged.update(doc)
    return merged


# --- besicovitch -----------------------------------------------------------------

def cmd_besicovitch(args):
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    timings = {}
    t0 = time.perf_counter()
    family = bs.build_perron_rectangles(args.k)
    timings["build"] = 1e3 * (time.perf_counter() - t0)

    t0 = time.perf_counter()
    measure, err = bs.union_measure(family, args.resolution)
    timings["union_measure"] = 1e3 * (time.perf_counter() - t0)

    (out_dir / "family.json").write_text(bs.family_to_json(family) + "\n")
    (out_dir / "family.svg").write_text(bs.family_to_svg(family) + "\n")
    row = {
        "k": family.k,
        "N": family.n_rects,
        "eps_hat": measure + err,
        "union_measure": measure,
        "union_error_bound": err,
        "total_area": family.total_area(),
        "translates_disjoint": bs.translates_disjoint(family),
        "resolution": args.resolution,
    }
    write_csv(out_dir / "stats.csv", list(row), [row])
    config = {"command": "besicovitch", "k": args.k,
              "resolution": args.resolution}
    write_manifest(out_dir, config, timings,
                   ["family.json", "family.svg", "stats.csv"])
    return 0


# --- ratio experiment --------------------------------------------------------------

RATIO_REQUIRED = ("k_list", "p_list", "mc_samples", "seed", "out_dir")
RATIO_OPTIONAL = {
    "c_p": mp.DEFAULT_KHINTCHINE_CP,
    "eps_resolution": 2.0**-14,
}


def cmd_ratio(args):
    config = load_config(args.config, RATIO_REQUIRED, RATIO_OPTIONAL)
    for p in config["p_list"]:
        if not (1.0 <= p < 2.0 or p == 2.0):
            raise ValueError("p_list entries must lie in [1, 2) or be the "
                             "p = 2 control")
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    timings = {}
    reports = []
    rows = []
    try:
        for k in config["k_list"]:
            boxes = bs.build_boxes(bs.build_perron_rectangles(k))
            for p in config["p_list"]:
                report = mp.ratio_experiment_cell(
                    boxes,
                    p,
                    config["mc_samples"],
                    seed=config["seed"],
                    c_p=config["c_p"],
                    eps_resolution=config["eps_resolution"],
                )
                reports.append(report)
                timings[f"k{report.k}_p{report.p:g}"] = report.wall_ms
                row = {
                    name: getattr(report, name)
                    for name in mp.ExperimentReport.CSV_FIELDS
                }
                # timings live in the manifest; the CSV stays byte-reproducible
                row["wall_ms"] = 0.0
                rows.append(row)
                write_csv(out_dir / "report.csv",
                          list(mp.ExperimentReport.CSV_FIELDS), rows,
                          header=list(mp.ExperimentReport.CSV_HEADER))
    except Exception:
        if rows:                      # partial rows stay flushed on disk
            write_csv(out_dir / "report.csv",
                      list(mp.ExperimentReport.CSV_FIELDS), rows,
                      header=list(mp.ExperimentReport.CSV_HEADER))
        raise

    outputs = ["report.csv"]
    for pi, p in enumerate(config["p_list"]):
        name = f"ratio_holder_p{pi}.dat"
        lines = [
            f"{_fmt(r.k)} {_fmt(r.ratio_holder)}"
            for r in reports
            if r.p == p
        ]
        (out_dir / name).write_text("\n".join(lines) + "\n")
        outputs.append(name)
    write_manifest(out_dir, config, timings, outputs)
    return 0


# --- szego -------------------------------------------------------------------------

SZEGO_REQUIRED = ("seed", "out_dir")
SZEGO_OPTIONAL = {
    "n_kernel_samples": 20,
    "n_consistency_samples": 10_000,
    "n_relation_samples": 10,
    "tol": 1e-6,
    "dimension": 3,
}


def cmd_szego(args):
    config = load_config(args.config, SZEGO_REQUIRED, SZEGO_OPTIONAL)
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    timings = {}
    n = config["dimension"]
    rng = np.random.default_rng(config["seed"])

    t0 = time.perf_counter()
    rows = []
    for _ in range(config["n_kernel_samples"]):
        yprime = rng.normal(size=n - 1) * 0.3
        y1 = np.linalg.norm(yprime) + 0.3 + abs(rng.normal()) * 0.5
        x = rng.uniform(-1.5, 1.5, size=n)
        z = jd.Element(jd.spin_factor(n),
                       x + 1j * np.concatenate(([y1], yprime)))
        u = rng.uniform(-1.5, 1.5, size=n)
        sample = sz.szego_kernel_quadrature(sz.TubePoint(z), u,
                                            tol=config["tol"])
        row = {}
        for i in range(n):
            row[f"z{i}_re"] = z.coords[i].real
            row[f"z{i}_im"] = z.coords[i].imag
        for i in range(n):
            row[f"u{i}"] = u[i]
        row["value_re"] = sample.value.real
        row["value_im"] = sample.value.imag
        row["error_estimate"] = sample.error_estimate
        row["method"] = sample.method
        rows.append(row)
    write_csv(out_dir / "kernel_samples.csv", list(rows[0]), rows)
    timings["kernel_samples"] = 1e3 * (time.perf_counter() - t0)

    t0 = time.perf_counter()
    consistency = sz.conformal_consistency_check(
        n, config["n_consistency_samples"], seed=config["seed"]
    )
    timings["consistency"] = 1e3 * (time.perf_counter() - t0)

    t0 = time.perf_counter()
    interior = sz.sample_lie_ball(n, config["n_relation_samples"] + 1, rng,
                                  margin=0.05)
    boundary = sz.sample_shilov_boundary(n, config["n_relation_samples"] + 1,
                                         rng, margin=0.15)
    c0 = sz.fit_kernel_relation_constant(interior[0], boundary[0],
                                         tol=config["tol"])
    residuals = [
        sz.szego_kernel_relation_residual(z, zp, c0, tol=config["tol"])
        for z, zp in zip(interior[1:], boundary[1:])
    ]
    timings["kernel_relation"] = 1e3 * (time.perf_counter() - t0)

    summary = {
        "conformal_consistency": consistency,
        "kernel_relation": {
            "fitted_c0_modulus": c0,
            "held_out_residuals": residuals,
            "max_residual": max(residuals),
        },
    }
    (out_dir / "szego_report.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True, default=float) + "\n"
    )
    write_manifest(out_dir, config, timings,
                   ["kernel_samples.csv", "szego_report.json"])
    return 0 if consistency["failures"] == 0 and max(residuals) < 5e-2 else 1


# --- validation suites ----------------------------------------------------------------

def _jordan_checks(fast):
    n_samples = 5_000 if fast else 10_000
    n_prop = 500 if fast else 1_000
    rng = np.random.default_rng(2024)
    checks = []

    def spin_agreement():
        frame = jd.standard_frame(jd.spin_factor(3))
        for _ in range(n_samples):
            x = jd.Element(jd.spin_factor(3), rng.normal(size=3))
            direct = x.coords[0] > np.hypot(x.coords[1], x.coords[2])
            if jd.cone_contains(x, frame) != direct:
                return False
        return True

    checks.append(("spin cone matches light-cone test", spin_agreement))

    def peirce_invariants():
        c = jd.from_matrix(np.diag([1.0, 0.0, 0.0]))
        for _ in range(n_prop):
            x = jd.Element(jd.sym_matrix(3), rng.normal(size=6))
            split = jd.peirce_decompose(x, c)
            if jd.norm(split.reassembled() - x) > 1e-9:
                return False
            if jd.norm(jd.jordan_product(c, split.xhalf)
                       - 0.5 * split.xhalf) > 1e-9:
                return False
        return True

    checks.append(("peirce split reassembles and is eigen", peirce_invariants))

    def filling_forward():
        c1 = jd.from_matrix(np.diag([1.0, 0.0, 0.0]))
        for _ in range(n_prop):
            xi = jd.Element(jd.sym_matrix(3), rng.normal(size=6))
            if jd.inner(xi, c1) <= 0:
                xi = -1.0 * xi
            if jd.inner(xi, c1) == 0:
                continue
            if not jd.filling_radius(xi, c1).found:
                return False
        return True

    checks.append(("filling radius exists when <xi,c1> > 0", filling_forward))

    def filling_converse():
        c1 = jd.Element(jd.spin_factor(3), np.array([0.5, 0.5, 0.0]))
        n_vec = jd.identity(c1.algebra) - c1
        for _ in range(n_prop):
            xi = jd.Element(jd.spin_factor(3), rng.normal(size=3))
            if jd.inner(xi, c1) > 0:
                xi = -1.0 * xi
            res = jd.filling_radius(xi, c1)
            if res.status == "found" and jd.inner(xi, c1) <= 0:
                return False
            for r in (1.0, 1e2, 1e4, 1e6):
                if jd.inner(xi, c1) <= 0 and jd.in_cone(xi + r * n_vec):
                    return False
        return True

    checks.append(("no filling when <xi,c1> <= 0", filling_converse))

    def det_identity():
        cases = [
            (jd.sym_matrix(2), jd.from_matrix(np.diag([1.0, 0.0]))),
            (jd.sym_matrix(3), jd.from_matrix(np.diag([1.0, 0.0, 0.0]))),
            (jd.sym_matrix(4), jd.from_matrix(np.diag([1.0, 0, 0, 0]))),
            (jd.spin_factor(4), jd.Element(jd.spin_factor(4),
                                           np.array([0.5, 0.5, 0, 0]))),
        ]
        per_case = max(1, n_prop // len(cases))
        for algebra, c1 in cases:
            for _ in range(per_case):
                xi = jd.Element(algebra, rng.normal(size=algebra.dim))
                if abs(jd.peirce_coefficient(xi, c1)) < 1e-3:
                    continue
                r_shift = rng.uniform(0.5, 5.0)
                lhs = jd.determinant(
                    xi + r_shift * (jd.identity(algebra) - c1)
                )
                if jd.det_identity_residual(xi, r_shift, c1) > 1e-8 * (
                    1 + abs(lhs)
                ):
                    return False
        return True

    checks.append(("determinant reduction identity", det_identity))

    def slice_agreement():
        frame = jd.standard_frame(jd.sym_matrix(4))
        for _ in range(n_prop):
            s = rng.normal(size=(2, 2))
            m = np.zeros((4, 4))
            m[:2, :2] = (s + s.T) / 2
            ambient, rank2 = jd.slice_test(jd.from_matrix(m), frame)
            if ambient != rank2:
                return False
        return True

    checks.append(("rank-2 slice agreement", slice_agreement))
    return checks


def _engine_checks(fast):
    mc = 10_000 if fast else 20_000
    rng = np.random.default_rng(4048)
    checks = []

    def identity_symbol():
        g = mp.indicator_interval(32.0, 2**13, -0.5, 0.5)
        plus = mp.fft_multiplier_apply(g, mp.HalfSpace((-1.0,)))
        minus = mp.fft_multiplier_apply(g, mp.HalfSpace((1.0,)))
        return bool(np.max(np.abs(plus.values + minus.values - g.values))
                    < 1e-12)

    checks.append(("halfspace + complement is the identity", identity_symbol))

    def parseval():
        g = mp.GridFunction(np.zeros(2**12), 16.0)
        f = g.with_values(rng.normal(size=2**12) + 1j * rng.normal(size=2**12))
        out = mp.fft_multiplier_apply(f, mp.HalfLine1D(1))
        return bool(out.norm_l2() <= f.norm_l2() * (1 + 1e-12))

    checks.append(("projection contracts the L2 norm", parseval))

    def halfline_oracle():
        g = mp.indicator_interval(32.0, 2**15, -0.5, 0.5)
        h = mp.fft_multiplier_apply(g, mp.HalfLine1D(1))
        x = g.axis()
        mask = (np.abs(x) >= 0.6) & (np.abs(x) <= 3.0)
        oracle = mp.halfline_projection_periodic(-0.5, 0.5, x[mask], 64.0)
        err = np.linalg.norm(h.values[mask] - oracle) / np.linalg.norm(oracle)
        return bool(err < 1e-3)

    checks.append(("FFT matches the closed-form half-line image",
                   halfline_oracle))

    def dilation():
        return bool(
            mp.cone_dilation_symbol_defect(2, samples=64) < 1e-6
            and mp.cone_dilation_symbol_defect(4, samples=64) < 1e-6
        )

    checks.append(("cone symbol is dilation invariant on the lattice",
                   dilation))

    def square_function():
        boxes = bs.build_boxes(bs.build_perron_rectangles(3))
        res = mp.square_function_v2(boxes, 1.0, mc, seed=77,
                                    eps_resolution=2.0**-12)
        lhs_expected = 0.05 / (2.0 * np.pi)
        return bool(
            res.lhs >= lhs_expected
            and res.rhs_exact <= res.rhs_holder + res.rhs_stderr
        )

    checks.append(("square-function sides and Holder chain", square_function))

    def tensor():
        grid = mp.GridFunction(np.zeros(32), 4.0)
        x = grid.axis()
        phi = grid.with_values(np.exp(-4.0 * x**2).astype(complex),
                               support_radius=2.0)
        good = mp.tensor_extension_check(phi, 1, samples_3d=64)
        broken = mp.tensor_extension_check(phi, 1, samples_3d=64,
                                           normal_last=0.5)
        return bool(good < 1e-6 and broken > 1e-3)

    checks.append(("tensor extension separability", tensor))
    return checks


def _szego_checks(fast):
    n_round = 500 if fast else 1_000
    n_consistency = 2_000 if fast else 10_000
    n_products = 8 if fast else 20
    rng = np.random.default_rng(9090)
    checks = []

    def round_trip():
        for z in sz.sample_lie_ball(3, n_round, rng):
            w = sz.lie_to_spin(z)
            back = sz.cayley_inverse(sz.cayley(w))
            if np.max(np.abs(back.coords - w.coords)) > 1e-10:
                return False
        return True

    checks.append(("Cayley round trip", round_trip))

    def consistency():
        for n in (3, 4, 5):
            report = sz.conformal_consistency_check(n, n_consistency, seed=n)
            if report["failures"]:
                return False
        return True

    checks.append(("conformal membership consistency", consistency))

    def density():
        x = jd.Element(jd.spin_factor(3), np.array([1.0, 0.0, 0.0]))
        return bool(
            sz.jacobian_density(jd.zero(jd.spin_factor(3))) == 1.0
            and abs(sz.jacobian_density(x) - 0.125) < 1e-14
        )

    checks.append(("boundary density closed-form values", density))

    def power_law():
        samples = []
        for _ in range(n_products):
            yp = rng.normal(size=2) * 0.3
            y1 = np.linalg.norm(yp) + 0.3 + abs(rng.normal()) * 0.5
            x = rng.uniform(-1.5, 1.5, size=3)
            z = jd.Element(jd.spin_factor(3),
                           x + 1j * np.concatenate(([y1], yp)))
            samples.append((z, rng.uniform(-1.5, 1.5, size=3)))
        products = sz.kernel_power_law_products(samples, tol=1e-6)
        return bool(products.std() / products.mean() < 1e-3)

    checks.append(("kernel power-law constancy", power_law))

    def relation():
        interior = sz.sample_lie_ball(3, 4, rng, margin=0.05)
        boundary = sz.sample_shilov_boundary(3, 4, rng, margin=0.15)
        c0 = sz.fit_kernel_relation_constant(interior[0], boundary[0])
        return all(
            sz.szego_kernel_relation_residual(z, zp, c0) < 5e-2
            for z, zp in zip(interior[1:], boundary[1:])
        )

    checks.append(("ball/tube kernel relation residual", relation))
    return checks


SUITES = {
    "jordan": _jordan_checks,
    "engine": _engine_checks,
    "szego": _szego_checks,
}


def cmd_validate(args):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    checks = []
    for name in names:
        checks.extend(
            (f"{name}: {label}", func)
            for label, func in SUITES[name](args.fast)
        )
    print(f"1..{len(checks)}")
    failures = 0
    for idx, (label, func) in enumerate(checks, start=1):
        ok = False
        try:
            ok = func()
        except Exception as exc:              # a crashing check is a failure
            print(f"# {label}: {exc!r}")
        if ok:
            print(f"ok {idx} - {label}")
        else:
            failures += 1
            print(f"not ok {idx} - {label}")
    return 1 if failures else 0


# --- entry point ---------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="conekit",
        description="cone-multiplier counterexample toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_bes = sub.add_parser("besicovitch", help="build a rectangle family")
    p_bes.add_argument("--k", type=int, required=True)
    p_bes.add_argument("--out", required=True)
    p_bes.add_argument("--resolution", type=float, default=2.0**-14)
    p_bes.set_defaults(func=cmd_besicovitch)

    p_ratio = sub.add_parser("ratio", help="run the ratio experiment")
    p_ratio.add_argument("--config", required=True)
    p_ratio.set_defaults(func=cmd_ratio)

    p_val = sub.add_parser("validate", help="run property suites")
    p_val.add_argument("--suite", choices=[*SUITES, "all"], required=True)
    p_val.add_argument("--fast", action="store_true")
    p_val.set_defaults(func=cmd_validate)

    p_sz = sub.add_parser("szego", help="kernel samples and checks")
    p_sz.add_argument("--config", required=True)
    p_sz.set_defaults(func=cmd_szego)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:                   # internal failure
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
