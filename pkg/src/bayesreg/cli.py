"""Command-line front end.

Three subcommands:

* ``region-props``  -- closed-form region properties for a given Fisher
  matrix, box volume, and one optional constraint (lambda, credibility,
  or size); JSON on stdout.
* ``simulate``      -- run adaptive/nonadaptive campaigns from a JSON
  config (CLI flags override config fields) and emit CSV + JSON records.
* ``validate``      -- run a named brute-force validation suite; exit 1
  if any check fails.

Exit codes: 0 success, 1 numerical/statistical failure, 2 usage or
config error.  The replica pool size is capped by the BAYESREG_THREADS
environment variable.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from bayesreg import adaptive as ad
from bayesreg import mc_oracle as mc
from bayesreg import region as rg
from bayesreg.inference import Batch, Dataset, ml_estimate
from bayesreg.models import HomodynePhaseModel, SqueezedPairModel, ThreePathModel
from bayesreg.streams import substream

SCHEMA_VERSION = "1"

_CSV_COLUMNS_DOC = (
    "CSV columns: run (replica index), k (step), one column per setting "
    "component (model setting names), one column per ML-estimate component "
    "(model parameter names), mrse_pred (MRSE objective at the accumulated "
    "ML information), mrse_true (same objective at the true-parameter "
    "information), s, c, lambda (region triple implied by the constraint), "
    "lambda_crit_flag (1 when no meaningful plausible region exists)."
)


def _build_model(name: str, model_args: dict):
    if name == "homodyne":
        if "zeta" not in model_args:
            raise ValueError("homodyne model requires model_args.zeta")
        return HomodynePhaseModel(zeta=float(model_args["zeta"]))
    if name == "three-path":
        return ThreePathModel()
    if name == "squeezed":
        return SqueezedPairModel()
    raise ValueError(f"unknown model {name!r} (expected homodyne, three-path, squeezed)")


def _region_spec(kind: str, s0, c0) -> rg.RegionSpec:
    if kind == "fixed-s":
        if s0 is None:
            raise ValueError("region fixed-s requires s0")
        return rg.RegionSpec.fixed_size(float(s0))
    if kind == "fixed-c":
        if c0 is None:
            raise ValueError("region fixed-c requires c0")
        return rg.RegionSpec.fixed_credibility(float(c0))
    if kind == "plausible":
        return rg.RegionSpec.plausible()
    raise ValueError(f"unknown region kind {kind!r}")


def _vector_from(value, names: tuple, what: str) -> list:
    """Accept either a list of floats or a dict keyed by component names."""
    if isinstance(value, dict):
        missing = [n for n in names if n not in value]
        if missing:
            raise ValueError(f"{what} missing fields {missing}")
        return [float(value[n]) for n in names]
    vec = [float(v) for v in np.atleast_1d(value)]
    if len(vec) != len(names):
        raise ValueError(f"{what} needs {len(names)} components")
    return vec


# ---------------------------------------------------------------------------
# region-props
# ---------------------------------------------------------------------------


def _cmd_region_props(args) -> int:
    try:
        entries = [float(v) for v in args.fisher.split(",")]
        d = args.d
        if len(entries) != d * d:
            raise ValueError(f"--fisher needs d*d={d*d} comma-separated entries, got {len(entries)}")
        fisher = rg.FisherMatrix(np.array(entries).reshape(d, d))
        space = rg.ParamSpace.from_volume(d, args.volume)
        lam_crit = rg.lambda_crit(d, fisher, space)
        out = {
            "schema_version": SCHEMA_VERSION,
            "d": d,
            "volume": args.volume,
            "det_fisher": fisher.det,
            "trace_inv_fisher": fisher.inv_trace,
            "lambda_crit": lam_crit,
            "lambda_crit_degenerate": lam_crit >= 1.0,
        }
        props = None
        if args.lam is not None:
            props = rg.size_of_lambda(d, args.lam, fisher, space)
        elif args.c is not None:
            props = rg.props_for_spec(rg.RegionSpec.fixed_credibility(args.c), fisher, space)
        elif args.s is not None:
            props = rg.props_for_spec(rg.RegionSpec.fixed_size(args.s), fisher, space)
        if props is not None:
            out.update(
                {
                    "lambda": props.lam,
                    "size": props.size,
                    "credibility": props.credibility,
                    "asymptotic_valid": props.asymptotic_valid,
                }
            )
    except (ValueError, rg.SingularFisherError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(out, indent=2))
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

_CONFIG_FIELDS = ("model", "scheme", "region", "s0", "c0", "N", "K", "L", "nm", "runs", "seed", "out")


def _load_experiment(args) -> dict:
    cfg = {}
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
    for field in _CONFIG_FIELDS:
        value = getattr(args, field, None)
        if value is not None:
            cfg[field] = value
    cfg.setdefault("model_args", {})
    cfg.setdefault("L", 20)
    cfg.setdefault("nm", 32)
    cfg.setdefault("runs", 1)
    cfg.setdefault("seed", 0)
    cfg.setdefault("scheme", "adaptive")
    for required in ("model", "region", "N", "K", "true_params", "initial_setting"):
        if required not in cfg:
            raise ValueError(f"config is missing required field {required!r}")
    return cfg


def _simulate_one(cfg: dict, replica: int) -> ad.RunRecord:
    model = _build_model(cfg["model"], cfg.get("model_args", {}))
    spec = _region_spec(cfg["region"], cfg.get("s0"), cfg.get("c0"))
    truth = _vector_from(cfg["true_params"], model.param_names, "true_params")
    initial = _vector_from(cfg["initial_setting"], model.setting_names, "initial_setting")
    seed = int(
        np.random.SeedSequence(entropy=int(cfg["seed"]), spawn_key=(replica,)).generate_state(1)[0]
    )
    if cfg["scheme"] == "nonadaptive":
        return ad.run_nonadaptive(
            model, truth, int(cfg["N"]), int(cfg["K"]), initial, spec, seed=seed
        )
    config = ad.AdaptiveConfig(
        steps=int(cfg["K"]),
        total_copies=int(cfg["N"]),
        spec=spec,
        initial_setting=tuple(initial),
        replicates=int(cfg["L"]),
        grid_count=int(cfg["nm"]),
        seed=seed,
    )
    return ad.run_adaptive(model, truth, config)


def _worker_count(runs: int) -> int:
    env = os.environ.get("BAYESREG_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(runs, cap))


def _write_outputs(cfg: dict, records: list, out_dir: Path) -> tuple:
    model = _build_model(cfg["model"], cfg.get("model_args", {}))
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "runs.csv"
    json_path = out_dir / "runs.json"
    header = (
        ["run", "k"]
        + [f"m_{n}" for n in model.setting_names]
        + [f"ml_{n}" for n in model.param_names]
        + ["mrse_pred", "mrse_true", "s", "c", "lambda", "lambda_crit_flag"]
    )
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for run_idx, record in enumerate(records):
            for step in record.steps:
                writer.writerow(
                    [run_idx, step.k]
                    + [repr(v) for v in step.setting]
                    + [repr(v) for v in step.ml_estimate]
                    + [
                        repr(step.mrse_pred),
                        repr(step.mrse_true),
                        repr(step.size),
                        repr(step.credibility),
                        repr(step.lam),
                        int(step.lambda_crit_degenerate),
                    ]
                )
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": {k: v for k, v in cfg.items() if k != "out"},
        "runs": [r.to_jsonable() for r in records],
    }
    json_path.write_text(json.dumps(doc, indent=2))
    return csv_path, json_path


def _cmd_simulate(args) -> int:
    try:
        cfg = _load_experiment(args)
        _build_model(cfg["model"], cfg.get("model_args", {}))  # validate early
        _region_spec(cfg["region"], cfg.get("s0"), cfg.get("c0"))
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    runs = int(cfg["runs"])
    try:
        workers = _worker_count(runs)
        if workers > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {pool.submit(_simulate_one, cfg, r): r for r in range(runs)}
                results = {}
                for fut in concurrent.futures.as_completed(futures):
                    results[futures[fut]] = fut.result()
            records = [results[r] for r in range(runs)]
        else:
            records = [_simulate_one(cfg, r) for r in range(runs)]
    except (ValueError, RuntimeError) as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return 1
    out_dir = Path(cfg.get("out") or "bayesreg-out")
    csv_path, json_path = _write_outputs(cfg, records, out_dir)
    print(f"wrote {csv_path} and {json_path} ({runs} runs x {cfg['K']} steps)")
    return 0


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _report(lines: list, name: str, ok: bool, detail: str) -> bool:
    lines.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return ok


def _suite_mc_region(args) -> tuple:
    lines, all_ok = [], True
    model = HomodynePhaseModel(zeta=0.7)
    truth, theta = [1.179], [1.837]
    rng = substream(int(args.seed), "validate", "mc-region")
    dataset = Dataset.make([Batch.make(theta, model.sample(np.array(truth), theta, 2000, rng))])
    ml = ml_estimate(model, dataset)
    config = mc.MCConfig(samples=int(args.samples), proposal="importance", seed=int(args.seed))
    space = model.param_space
    for lam in (0.5, 0.1):
        est = mc.mc_region_props(model, dataset, lam, config, ml)
        props = rg.size_of_lambda(model.d, lam, ml.fisher_at_ml, space)
        ok_s = abs(est.size - props.size) <= 3.0 * est.size_se
        ok_c = abs(est.credibility - props.credibility) <= 3.0 * est.credibility_se
        all_ok &= _report(
            lines, f"mc size lambda={lam}", ok_s,
            f"mc={est.size:.5g} formula={props.size:.5g} se={est.size_se:.2g}")
        all_ok &= _report(
            lines, f"mc credibility lambda={lam}", ok_c,
            f"mc={est.credibility:.5g} formula={props.credibility:.5g} se={est.credibility_se:.2g}")
        rse = mc.mc_rse(model, dataset, lam, truth, config, ml)
        pred = rg.rse_asymptotic(model.d, lam, ml.estimate, truth, ml.fisher_at_ml)
        ok_r = abs(rse.value - pred) <= 0.10 * pred
        all_ok &= _report(lines, f"mc rse lambda={lam}", ok_r,
                          f"mc={rse.value:.5g} formula={pred:.5g}")
    return lines, all_ok


def _suite_lemma(args) -> tuple:
    lines, all_ok = [], True
    rng = substream(int(args.seed), "validate", "lemma")
    cases = int(args.cases)
    failures = 0
    for _ in range(cases):
        a, b = mc.make_compliant_lemma_instance(rng, int(rng.integers(2, 30)))
        if not mc.lemma_check(a, b).holds:
            failures += 1
    all_ok &= _report(lines, "partial-sum lemma fuzz", failures == 0,
                      f"{cases} constructed instances, {failures} failures")
    return lines, all_ok


def _suite_conservativeness(args) -> tuple:
    lines, all_ok = [], True
    for d in (1, 2, 3):
        bound = d / (d + 2.0)
        grid = np.linspace(0.0, 1.0, 101)
        rses = np.array([mc.cap_integrals(mc.CapGeometry(1.0, h, d)).rse for h in grid])
        ok = np.all(rses <= bound + 1e-9) and abs(rses[0] - bound) < 1e-9 and abs(rses[-1] - bound) < 1e-9
        all_ok &= _report(lines, f"truncated-ball rse d={d}", bool(ok),
                          f"max={rses.max():.9f} bound={bound:.9f}")
    rng = substream(int(args.seed), "validate", "conservativeness")
    cases = int(args.cases)
    bad = 0
    for _ in range(cases):
        r_ml = rng.uniform(-1.0, 1.0)
        a = r_ml - rng.uniform(0.05, 2.0)
        b = rng.uniform(r_ml, 2.0 * r_ml - a)
        if mc.rse_interval_categorical(r_ml, a, r_ml) < mc.rse_interval_actual(r_ml, a, b) - 1e-12:
            bad += 1
    all_ok &= _report(lines, "categorical >= actual at r=r_ml", bad == 0,
                      f"{cases} truncations, {bad} violations")
    return lines, all_ok


_SUITES = {
    "mc-region": _suite_mc_region,
    "lemma": _suite_lemma,
    "conservativeness": _suite_conservativeness,
}


def _cmd_validate(args) -> int:
    lines, ok = _SUITES[args.suite](args)
    print("\n".join(lines))
    print(f"suite {args.suite}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesreg", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_region = sub.add_parser("region-props", help="closed-form region properties")
    p_region.add_argument("--d", type=int, required=True, help="parameter dimension")
    p_region.add_argument("--fisher", required=True,
                          help="row-major comma-separated d*d Fisher matrix entries")
    p_region.add_argument("--volume", type=float, required=True, help="parameter-box volume")
    group = p_region.add_mutually_exclusive_group()
    group.add_argument("--lambda", dest="lam", type=float, help="likelihood-ratio parameter")
    group.add_argument("--c", type=float, help="fixed credibility")
    group.add_argument("--s", type=float, help="fixed size")
    p_region.set_defaults(func=_cmd_region_props)

    p_sim = sub.add_parser("simulate", help="run adaptive/nonadaptive campaigns",
                           epilog=_CSV_COLUMNS_DOC)
    p_sim.add_argument("--config", help="JSON experiment config")
    p_sim.add_argument("--model", choices=["homodyne", "three-path", "squeezed"])
    p_sim.add_argument("--scheme", choices=["adaptive", "nonadaptive"])
    p_sim.add_argument("--region", choices=["fixed-s", "fixed-c", "plausible"])
    p_sim.add_argument("--s0", type=float, help="fixed region size")
    p_sim.add_argument("--c0", type=float, help="fixed region credibility")
    p_sim.add_argument("--N", type=int, help="total copies")
    p_sim.add_argument("--K", type=int, help="adaptive steps")
    p_sim.add_argument("--L", type=int, help="simulated datasets per candidate setting")
    p_sim.add_argument("--nm", type=int, help="settings-grid count")
    p_sim.add_argument("--runs", type=int, help="replica count")
    p_sim.add_argument("--seed", type=int, help="root seed")
    p_sim.add_argument("--out", help="output directory")
    p_sim.set_defaults(func=_cmd_simulate)

    p_val = sub.add_parser("validate", help="run a brute-force validation suite")
    p_val.add_argument("suite", choices=sorted(_SUITES))
    p_val.add_argument("--cases", type=int, default=10_000, help="fuzz case count")
    p_val.add_argument("--samples", type=int, default=20_000, help="Monte Carlo sample count")
    p_val.add_argument("--seed", type=int, default=0)
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
