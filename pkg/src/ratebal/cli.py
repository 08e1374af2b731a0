"""Command-line front end.

Every command writes its data (CSV for grids and curves, JSON for single
designs and reports) to ``--out`` or stdout, and a run manifest next to it
(``<out>.manifest.json``, or stderr when writing to stdout).

Exit codes: 0 success, 1 a check failed, 2 invalid arguments, 3 size cap
exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from ratebal import __version__
from ratebal.cache import DesignCache
from ratebal.conditions import (
    ETA_RULES,
    check_split,
    concavity_check,
    laplacian_certificate,
    lemma3_check,
    scan_conjecture,
)
from ratebal.models import KINDS, REAL_LINE, ObservationModel, b_infinity
from ratebal.montecarlo import SimConfig, simulate_pe
from ratebal.network import (
    EQUAL_PRIORS,
    NetworkDesign,
    RateAllocation,
    analytic_pe,
    balanced_allocation,
    joint_pmf,
    network_bhattacharyya,
    pe_upper_bound,
    snr_to_m,
)
from ratebal.quantizer import (
    DesignConfig,
    MonotoneQuantizer,
    SizeCapError,
    beta_asymptotic,
    bhattacharyya,
    cell_pmf,
    chernoff,
    design_compander,
)

log = logging.getLogger("ratebal")

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_SIZE = 0, 1, 2, 3
CHECK_TOL = 1e-12
SWEEP_TOL = 1e-6

# allocations compared in the rate-allocation experiments
REFERENCE_SETS = {
    (6, 12): {"a": (2, 2, 2, 2, 2, 2), "b": (3, 3, 2, 2, 1, 1), "c": (5, 3, 1, 1, 1, 1),
              "d": (3, 3, 3, 3, 0, 0), "e": (4, 4, 4, 0, 0, 0)},
    (5, 12): {"1": (3, 3, 2, 2, 2), "2": (3, 3, 3, 2, 1), "3": (4, 3, 2, 2, 1),
              "4": (3, 3, 3, 3, 0), "5": (4, 4, 4, 0, 0)},
}
DECAY_SCHEMES = {"2-2": (2, 2), "3-1": (3, 1), "4-0": (4, 0)}


class UsageError(Exception):
    pass


# -- parsing helpers -------------------------------------------------------

def parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def parse_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc


def parse_snr(text: str, default_steps: int = 21) -> list[float]:
    """``lo:hi[:steps]`` (linear in dB) or a single value."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        lo, hi = float(parts[0]), float(parts[1])
        steps = int(parts[2]) if len(parts) > 2 else default_steps
    except ValueError as exc:
        raise UsageError(f"bad SNR range {text!r}") from exc
    if len(parts) > 3 or steps < 1 or (steps == 1 and lo != hi):
        raise UsageError(f"bad SNR range {text!r}")
    return [float(x) for x in np.linspace(lo, hi, steps)]


def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def render_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def design_config(args) -> DesignConfig:
    return DesignConfig(pass_tolerance=args.tol, restarts=args.restarts, seed=args.seed)


# -- commands --------------------------------------------------------------
# Each returns (payload text, metadata dict, passed flag).

def cmd_design(args, cache: DesignCache):
    if args.rate is None:
        raise UsageError("design needs --rate")
    model = ObservationModel(args.model, args.m)
    cfg = design_config(args)
    d = cache.get(model, args.rate, cfg)
    pmf = cell_pmf(model, d.quantizer)
    out = {
        "model": model.kind, "m": model.m, "rate": args.rate,
        "thresholds": list(d.quantizer.thresholds),
        "bhattacharyya": d.distance,
        "chernoff": chernoff(pmf),
        "b_infinity": b_infinity(model),
        "beta_r": beta_asymptotic(model, args.rate),
    }
    if args.rate >= 1:
        comp = design_compander(model, args.rate)
        out["compander"] = {"thresholds": list(comp.thresholds),
                            "bhattacharyya": bhattacharyya(cell_pmf(model, comp))}
    else:
        out["compander"] = None
    return out, {}, True


def _rate_sweep(model: ObservationModel, r_max: int, cfg: DesignConfig, cache: DesignCache):
    designed, compander = [], []
    for r in range(r_max + 1):
        designed.append(cache.get(model, r, cfg).distance)
        compander.append(bhattacharyya(cell_pmf(model, design_compander(model, r))) if r else 0.0)
    return designed, compander


def cmd_rate_sweep(args, cache: DesignCache):
    r_max = 5 if args.rate is None else args.rate
    model = ObservationModel(args.model, args.m)
    cfg = design_config(args)
    cache.prefetch([(model, r) for r in range(r_max + 1)], cfg, args.workers)
    designed, compander = _rate_sweep(model, r_max, cfg, cache)
    b_inf = b_infinity(model)
    rows = [[r, designed[r], compander[r], beta_asymptotic(model, r), b_inf] for r in range(r_max + 1)]
    meta = {}
    ok = True
    if len(designed) >= 3:
        conc = concavity_check(designed, SWEEP_TOL)
        meta["concave"] = conc.concave
        meta["concavity_violation"] = conc.violation
        meta["lemma2"] = conc.lemma2
        ok = bool(conc)
    if len(designed) >= 2:
        meta["lemma3"] = lemma3_check(designed, b_inf, SWEEP_TOL)
    header = ["rate", "B_designed", "B_compander", "beta_r", "B_inf"]
    return render_csv(header, rows), meta, ok


def cmd_conjecture_scan(args, cache: DesignCache):
    m_list = parse_floats(args.m_list or "0.5,1,2")
    grid = args.grid or 200
    report = scan_conjecture(args.model, m_list, grid, args.eta_rule, keep_cells=True)
    meta = {"min_margin": report.min_margin,
            "argmin": {"a_tilde": report.argmin[0], "c_tilde": report.argmin[1], "m": report.argmin[2]},
            "grid": grid, "eta_rule": args.eta_rule}
    rows = []
    if report.cells is not None:
        cells = report.cells
        rows = [[float(m), float(a), float(c), float(g)] for m, a, c, g in
                zip(cells["m"], cells["a_tilde"], cells["c_tilde"], cells["margin"])]
    text = render_csv(["m", "a_tilde", "c_tilde", "margin"], rows)
    return text, meta, (not m_list) or report.min_margin >= -CHECK_TOL


def _allocations(args) -> dict[str, RateAllocation]:
    n, total = args.sensors, args.sum_rate
    if n is None or total is None:
        raise UsageError("--sensors and --sum-rate are required")
    if args.rates:
        out = {}
        for text in args.rates:
            rates = parse_ints(text)
            if len(rates) != n:
                raise UsageError(f"allocation {text} does not have {n} sensors")
            if sum(rates) > total:
                raise UsageError(f"allocation {text} exceeds sum rate {total}")
            alloc = RateAllocation(tuple(rates), total)
            out[alloc.label()] = alloc
        return out
    preset = REFERENCE_SETS.get((n, total))
    if preset:
        return {k: RateAllocation(v, total) for k, v in preset.items()}
    alloc = balanced_allocation(n, total)
    return {alloc.label(): alloc}


def _network(model: ObservationModel, alloc: RateAllocation, cfg: DesignConfig, cache: DesignCache):
    qs = tuple(cache.get(model, r, cfg).quantizer for r in alloc.rates)
    return NetworkDesign(model, alloc, qs)


def cmd_pe_curve(args, cache: DesignCache):
    allocs = _allocations(args)
    snrs = parse_snr(args.snr_db or "-4:10:8")
    cfg = design_config(args)
    models = [ObservationModel(args.model, snr_to_m(args.model, s)) for s in snrs]
    for alloc in allocs.values():
        if 2 ** alloc.total > args.lattice_cap:
            raise SizeCapError(f"message lattice 2**{alloc.total} exceeds cap")
    cache.prefetch([(mo, r) for mo in models for a in allocs.values() for r in set(a.rates)],
                   cfg, args.workers)
    rows = []
    for snr, model in zip(snrs, models):
        for label, alloc in allocs.items():
            net = _network(model, alloc, cfg, cache)
            rows.append([snr, label, analytic_pe(net, cap=args.lattice_cap),
                         network_bhattacharyya(net), pe_upper_bound(net)])
    return render_csv(["snr_db", "allocation", "P_E", "B", "bound"], rows), {}, True


def cmd_pe_decay(args, cache: DesignCache):
    sensors = parse_ints(args.sensors_list or "2,4,6")
    if any(n < 2 or n % 2 for n in sensors):
        raise UsageError("paired schemes need even N >= 2")
    snr = parse_snr(args.snr_db or "0")
    if len(snr) != 1:
        raise UsageError("pe-decay takes a single SNR value")
    cfg = design_config(args)
    model = ObservationModel(args.model, snr_to_m(args.model, snr[0]))
    cache.prefetch([(model, r) for r in range(5)], cfg, args.workers)
    rows = []
    for n in sensors:
        for name, pair in DECAY_SCHEMES.items():
            alloc = RateAllocation(pair * (n // 2), 2 * n)
            net = _network(model, alloc, cfg, cache)
            rows.append([n, name, analytic_pe(net, cap=args.lattice_cap)])
    return render_csv(["N", "scheme", "P_E"], rows), {"snr_db": snr[0]}, True


def _additivity_spot_checks(count: int, seed: int) -> float:
    """Largest gap between the summed and the joint distance over random designs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        kind = KINDS[int(rng.integers(2))]
        model = ObservationModel(kind, float(rng.uniform(0.2, 3.0)))
        n = int(rng.integers(1, 5))
        rates = rng.integers(0, 4, size=n)
        qs = tuple(MonotoneQuantizer(int(r), tuple(np.sort(rng.normal(0, 2, 2 ** int(r) - 1))))
                   for r in rates)
        net = NetworkDesign(model, RateAllocation(tuple(int(r) for r in rates), int(rates.sum())), qs)
        worst = max(worst, abs(network_bhattacharyya(net) - bhattacharyya(joint_pmf(net))))
    return worst


def cmd_check(args, cache: DesignCache):
    m_list = parse_floats(args.m_list if args.m_list is not None else "0.5,1,2")
    r_max = 5 if args.rate is None else args.rate
    grid = args.grid or 10_000
    cfg = design_config(args)
    checks = []

    def record(name, passed, **detail):
        checks.append({"check": name, "passed": bool(passed), **detail})

    if not m_list:
        log.warning("empty m list: nothing to check")
    for m in m_list:
        model = ObservationModel(args.model, m)
        if args.model == "laplacian":
            cert = laplacian_certificate(m, grid)
            record("laplacian_certificate", cert.passed(CHECK_TOL), m=m,
                   max_violation=cert.max_violation, direct_min_margin=cert.direct_min_margin)
        for kind in KINDS:
            split = check_split(ObservationModel(kind, m), REAL_LINE, 0.0)
            record(f"one_bit_half_distance_{kind}", split.margin >= -CHECK_TOL, m=m, margin=split.margin)
        if r_max >= 1:
            cache.prefetch([(model, r) for r in range(r_max + 1)], cfg, args.workers)
            designed, _ = _rate_sweep(model, r_max, cfg, cache)
            if len(designed) >= 3:
                conc = concavity_check(designed, SWEEP_TOL)
                record("designed_concavity", bool(conc), m=m, violation=conc.violation)
            record("designed_lemma3", lemma3_check(designed, b_infinity(model), SWEEP_TOL), m=m)
    if m_list and args.model == "gaussian":
        for rule in ("likelihood", "compander"):
            rep = scan_conjecture("gaussian", m_list, args.scan_grid, rule)
            record(f"conjecture_scan_{rule}", rep.min_margin >= -CHECK_TOL,
                   min_margin=rep.min_margin, argmin=list(rep.argmin))
    gap = _additivity_spot_checks(20, args.seed)
    record("additivity", gap <= CHECK_TOL, max_gap=gap)
    passed = all(c["passed"] for c in checks)
    return {"model": args.model, "m": m_list, "passed": passed, "checks": checks}, {}, passed


def cmd_mc_validate(args, cache: DesignCache):
    n, total = args.sensors, args.sum_rate
    if n is None or total is None:
        raise UsageError("--sensors and --sum-rate are required")
    if args.rates:
        if len(args.rates) != 1:
            raise UsageError("mc-validate takes one allocation")
        rates = parse_ints(args.rates[0])
        if len(rates) != n or sum(rates) > total:
            raise UsageError("allocation inconsistent with --sensors/--sum-rate")
        alloc = RateAllocation(tuple(rates), total)
    else:
        alloc = balanced_allocation(n, total)
    snr = parse_snr(args.snr_db or "0")
    if len(snr) != 1:
        raise UsageError("mc-validate takes a single SNR value")
    cfg = design_config(args)
    model = ObservationModel(args.model, snr_to_m(args.model, snr[0]))
    net = _network(model, alloc, cfg, cache)
    exact = analytic_pe(net, cap=args.lattice_cap)
    sim = simulate_pe(net, EQUAL_PRIORS, SimConfig(args.trials, args.seed))
    agree = sim.agrees_with(exact, 4.0)
    out = {"model": model.kind, "snr_db": snr[0], "m": model.m, "rates": list(alloc.rates),
           "analytic_pe": exact, "pe_hat": sim.pe_hat, "std_err": sim.std_err,
           "trials": sim.trials, "seed": args.seed, "agree_4se": agree}
    return out, {}, agree


COMMANDS = {
    "design": cmd_design,
    "rate-sweep": cmd_rate_sweep,
    "conjecture-scan": cmd_conjecture_scan,
    "pe-curve": cmd_pe_curve,
    "pe-decay": cmd_pe_decay,
    "check": cmd_check,
    "mc-validate": cmd_mc_validate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ratebal", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=KINDS, default="gaussian")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=8)
    common.add_argument("--tol", type=float, default=1e-9, help="per-pass improvement tolerance")
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    common.add_argument("--lattice-cap", type=int, default=2 ** 20)
    common.add_argument("-v", "--verbose", action="store_true")

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    s = add("design", "design one quantizer")
    s.add_argument("--m", type=float, default=1.0)
    s.add_argument("--rate", type=int)

    s = add("rate-sweep", "designed vs compander vs asymptotic distance, rates 0..r_max")
    s.add_argument("--m", type=float, default=1.0)
    s.add_argument("--rate", type=int, help="largest rate (default 5)")

    s = add("conjecture-scan", "split margins over a logit grid of intervals")
    s.add_argument("--m", dest="m_list", default=None, help="comma-separated m values")
    s.add_argument("--grid", type=int, default=None)
    s.add_argument("--eta-rule", choices=ETA_RULES, default="likelihood")

    for name, help_ in (("pe-curve", "error probability vs SNR per allocation"),
                        ("mc-validate", "Monte Carlo check of the exact error probability")):
        s = add(name, help_)
        s.add_argument("--sensors", type=int)
        s.add_argument("--sum-rate", type=int)
        s.add_argument("--rates", action="append", help="comma-separated rates; repeatable")
        s.add_argument("--snr-db", default=None, help="lo:hi[:steps] or a single value")
        if name == "mc-validate":
            s.add_argument("--trials", type=int, default=1_000_000)

    s = add("pe-decay", "error probability vs number of sensors, R = 2N")
    s.add_argument("--sensors", dest="sensors_list", default=None, help="comma-separated even N")
    s.add_argument("--snr-db", default=None)

    s = add("check", "run the certification suite")
    s.add_argument("--m", dest="m_list", default=None, help="comma-separated m values")
    s.add_argument("--rate", type=int, help="largest rate in the designed sweeps (default 5)")
    s.add_argument("--grid", type=int, default=None, help="certificate grid size")
    s.add_argument("--scan-grid", type=int, default=200)
    return p


def _emit(text: str, manifest: dict, out: str | None):
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        sys.stderr.write(json.dumps(manifest, sort_keys=True) + "\n")
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    Path(f"{out}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv[:1] == ["replay"]:
        if len(argv) != 2:
            print("usage: ratebal replay MANIFEST", file=sys.stderr)
            return EXIT_USAGE
        return main(json.loads(Path(argv[1]).read_text())["argv"])

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")

    try:
        with DesignCache() as cache:
            payload, meta, passed = COMMANDS[args.command](args, cache)
    except UsageError as exc:
        print(f"ratebal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SizeCapError as exc:
        print(f"ratebal: size cap exceeded: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except ValueError as exc:
        print(f"ratebal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    fmt_ = args.format or ("json" if isinstance(payload, dict) else "csv")
    if isinstance(payload, dict):
        if fmt_ == "csv":
            text = render_csv(["key", "value"], [[k, json.dumps(v)] for k, v in payload.items()])
        else:
            text = json.dumps({**payload, "metadata": meta} if meta else payload, indent=2) + "\n"
    else:
        if fmt_ == "json":
            rows = list(csv.DictReader(io.StringIO(payload)))
            text = json.dumps({"rows": rows, "metadata": meta}, indent=2) + "\n"
        else:
            text = payload

    manifest = {
        "command": args.command,
        "argv": argv,
        "parameters": {k: v for k, v in vars(args).items() if k not in ("workers", "verbose")},
        "seed": args.seed,
        "version": __version__,
        "outputs": [args.out] if args.out else ["<stdout>"],
        "metadata": meta,
        "passed": passed,
    }
    _emit(text, manifest, args.out)
    if not passed:
        log.error("%s: internal checks failed", args.command)
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
