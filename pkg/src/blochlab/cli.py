"""Command-line entry point.

``blochlab <command> --config FILE --out DIR``; ``verify`` needs neither flag.
Exit status is 0 on success, 2 for configuration errors and 3 when a numerical
certificate (or an invariant in ``verify``) fails.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import TASK_SCHEMAS, RunConfig, load_config
from .errors import CertificationError, ConfigError
from .evolve import amplitude_field, auto_times, default_lr_samples, light_cone_scan, lr_bound_check
from .fitting import loglog_fit
from .floquet import torus_hamiltonians
from .io import RunManifest
from .perturb import eta2_oracle, eta3_oracle, loop_expansion, rs_expand, verify_low_order
from .velocity import ThetaGrid, sweep_and_fit, velocity_report

COMMANDS = ("bands", "perturb", "velocity", "sweep", "evolve", "lightcone", "lrcheck", "verify")

EXIT_OK, EXIT_CONFIG, EXIT_CERT = 0, 2, 3


def cmd_bands(cfg: RunConfig, man: RunManifest):
    model, mu = cfg.model, cfg.task["mu"]
    grid = ThetaGrid(cfg.task["grid"])
    theta = grid.nodes()
    lam = np.linalg.eigvalsh(torus_hamiltonians(model, mu, theta))
    header = [f"theta_{i + 1}" for i in range(model.d)] + [f"lambda_{n + 1}" for n in range(model.P)]
    man.csv("bands.csv", header, [list(t) + list(l) for t, l in zip(theta, lam)])
    man.diagnostics["grid"] = list(grid.counts)


def cmd_perturb(cfg: RunConfig, man: RunManifest):
    model, R = cfg.model, cfg.task["order"]
    exp = rs_expand(model, R)
    man.json("expansion.json", exp.to_dict())
    rep = verify_low_order(exp, strict=False)
    oracle = {}
    if R >= 3:
        oracle["order2"] = all(exp.eta[n][2] == eta2_oracle(model, n) for n in range(model.P))
        oracle["order3"] = all(exp.eta[n][3] == eta3_oracle(model, n) for n in range(model.P))
    if model.P <= 6:
        oracle["loops"] = all(
            loop_expansion(model, n, r) == exp.eta[n][r]
            for n in range(model.P)
            for r in range(2, min(R, 4) + 1)
        )
    man.json("checks.json", {
        "low_order": rep.checks,
        "passed": rep.passed,
        "oracles": oracle,
    })
    if cfg.task["z"] is not None:
        z = np.asarray(cfg.task["z"], dtype=complex)
        man.csv("coefficients.csv", ["n"] + [f"r{r}" for r in range(R + 1)],
                [[n] + [float(complex(exp.full_eta(n, r).evaluate(z)).real) for r in range(R + 1)]
                 for n in range(model.P)])
    if not rep.passed or not all(oracle.values()):
        raise CertificationError("symbolic identity check failed; see checks.json")


def cmd_velocity(cfg: RunConfig, man: RunManifest):
    rep = velocity_report(cfg.model, cfg.task["mu"], ThetaGrid(cfg.task["grid"]))
    man.json("velocity.json", {**rep.to_row(), "argmax_band": rep.argmax[0],
                               "argmax_theta": list(rep.argmax[1])})
    man.diagnostics["grid"] = list(rep.grid)


def cmd_sweep(cfg: RunConfig, man: RunManifest):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = sweep_and_fit(cfg.model, cfg.task["mu"], ThetaGrid(cfg.task["grid"]),
                            rho0=cfg.task["rho0"])
    rows = [r.to_row() for r in res.reports]
    header = list(rows[0])
    man.csv("sweep.csv", header, [[row[k] for k in header] for row in rows])
    man.json("fit.json", res.summary())
    man.diagnostics["warnings"] = [str(w.message) for w in caught]
    man.diagnostics["grids"] = [list(r.grid) for r in res.reports]


def cmd_evolve(cfg: RunConfig, man: RunManifest):
    t = cfg.task
    fld = amplitude_field(cfg.model, t["mu"], t["t"], t["source"], t["window"], t["method"])
    rows = [list(n) + [a.real, a.imag, abs(a)] for n, a in fld.items()]
    header = [f"n_{i + 1}" for i in range(cfg.model.d)] + ["re", "im", "abs"]
    man.csv("amplitudes.csv", header, rows)
    man.json("evolve.json", {"t": fld.t, "method": fld.method, "mass": fld.mass(),
                             "certified_error": fld.certified_error})


def cmd_lightcone(cfg: RunConfig, man: RunManifest):
    t = cfg.task
    rows, scans = [], []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for mu in t["mu"]:
            times = t["times"] if t["times"] is not None else auto_times(cfg.model, mu, t["distance"])
            scan = light_cone_scan(cfg.model, mu, times, t["eta"])
            scans.append(scan)
            rows += [[float(mu), tt, r] for tt, r in scan.trace.rows()]
    man.csv("fronts.csv", ["mu", "t", "r"], rows)
    out = {"eta": t["eta"], "scans": [
        {"mu": s.mu, "velocity": s.velocity, "r2": s.fit.r2, "counts": list(s.counts)} for s in scans
    ]}
    if len(scans) >= 4:
        fit = loglog_fit([s.mu for s in scans], [s.velocity for s in scans])
        out["exponent"] = fit.slope
        out["predicted_exponent"] = float(1 - cfg.model.p0)
        out["fit"] = fit.to_dict()
    man.json("lightcone.json", out)
    man.diagnostics["warnings"] = [str(w.message) for w in caught]


def cmd_lrcheck(cfg: RunConfig, man: RunManifest):
    t = cfg.task
    reps = []
    for mu in t["mu"]:
        samples = default_lr_samples(cfg.model, mu, t["max_distance"], t["tau_max"], t["ntimes"])
        reps.append(lr_bound_check(cfg.model, mu, t["rho0"], samples))
    c1 = np.array([r.C1 for r in reps])
    ratio = float(c1.max() / c1.min()) if c1.min() > 0 else float("inf")
    man.json("lrcheck.json", {"reports": [r.to_dict() for r in reps], "C1_ratio": ratio})


def cmd_verify(out_dir=None):
    from .verify import run_suite

    results = run_suite()
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} invariants passed")
    if out_dir is not None:
        man = RunManifest(out_dir, "verify", {}, __version__)
        man.json("verify.json", [{"check": r.name, "fixture": r.fixture, "passed": r.passed,
                                  "detail": r.detail} for r in results])
        man.write("ok" if not failed else "failed")
    return EXIT_OK if not failed else EXIT_CERT


HANDLERS = {
    "bands": cmd_bands,
    "perturb": cmd_perturb,
    "velocity": cmd_velocity,
    "sweep": cmd_sweep,
    "evolve": cmd_evolve,
    "lightcone": cmd_lightcone,
    "lrcheck": cmd_lrcheck,
}
assert set(HANDLERS) == set(TASK_SCHEMAS)


def build_parser():
    ap = argparse.ArgumentParser(prog="blochlab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path)
    ap.add_argument("--out", type=Path)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        return cmd_verify(args.out)
    if args.config is None or args.out is None:
        print(f"blochlab {args.command}: --config and --out are required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    man = RunManifest(args.out, args.command, cfg.echo(), __version__)
    try:
        HANDLERS[args.command](cfg, man)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        man.diagnostics["error"] = str(exc)
        man.write("failed")
        return EXIT_CERT
    man.write()
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
