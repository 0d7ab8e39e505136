"""Command-line entry point: run ensembles, decompose operators, re-report.

Configs are strict JSON (unknown keys rejected); tabular outputs are CSV
with a stable column schema so the plotting layer can consume them without
importing this package. Reruns with the same config produce byte-identical
CSV bodies; only the manifest timestamp differs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NonHermitianInput, VmeError
from .estimator import DEFAULT_SEED, EstimatorConfig
from .experiments import (
    BallInit,
    RunConfig,
    RunRecord,
    UniformInit,
    classify_records,
    default_targets,
    default_value_range,
    error_traces,
    heatmap,
    median_band,
    run_ensemble,
)
from .models import custom_model, resolve_model
from .pauli import (
    decompose_hermitian,
    dense_from_json,
    dense_to_json,
    hermitian_split,
    PauliSum,
)

RUNS_SCHEMA = "vme.runs/1"


class ConfigError(VmeError):
    pass


def _check_keys(obj: dict, allowed: set[str], where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}")


def _parse_model(spec):
    if isinstance(spec, str):
        return resolve_model(spec)
    if isinstance(spec, dict):
        _check_keys(spec, {"h_pauli", "h_dense", "w_dense", "name"}, "model")
        if "w_dense" not in spec or ("h_pauli" not in spec) == ("h_dense" not in spec):
            raise ConfigError("custom model needs w_dense and exactly one of h_pauli/h_dense")
        if "h_pauli" in spec:
            h = PauliSum.from_json(spec["h_pauli"])
        else:
            h = decompose_hermitian(dense_from_json(spec["h_dense"]))
        return custom_model(h, dense_from_json(spec["w_dense"]), name=spec.get("name", "custom"))
    raise ConfigError(f"bad model spec {spec!r}")


def _parse_init(spec):
    if spec is None:
        return UniformInit()
    _check_keys(spec, {"kind", "lo", "hi", "radius", "centers"}, "init")
    kind = spec.get("kind", "uniform")
    if kind == "uniform":
        return UniformInit(lo=float(spec.get("lo", 0.0)), hi=float(spec.get("hi", 2 * np.pi)))
    if kind == "ball":
        centers = spec.get("centers", "optimal")
        if centers != "optimal":
            centers = tuple((tuple(ci), tuple(cj)) for ci, cj in centers)
        return BallInit(radius=float(spec.get("radius", 0.15)), centers=centers)
    raise ConfigError(f"unknown init kind {kind!r}")


def _parse_estimator(spec):
    if spec is None:
        return EstimatorConfig()
    _check_keys(
        spec, {"mode", "shots", "repeats", "readout_flip_prob", "mitigation", "seed"}, "estimator"
    )
    try:
        return EstimatorConfig(**spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad estimator config: {exc}") from exc


def parse_config(doc: dict):
    """Strictly validated CLI document -> (RunConfig, analysis options)."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(
        doc,
        {
            "model",
            "part",
            "multiplier_method",
            "iterations",
            "n_runs",
            "init",
            "step_size",
            "estimator",
            "seed",
            "classify",
            "outputs",
        },
        "config",
    )
    classify = doc.get("classify", {})
    _check_keys(classify, {"tolerance", "targets"}, "classify")
    outputs = doc.get("outputs", {})
    _check_keys(outputs, {"heatmap", "percentiles"}, "outputs")
    hm = outputs.get("heatmap")
    if hm is not None:
        _check_keys(hm, {"bin_width", "lo", "hi"}, "outputs.heatmap")
    try:
        cfg = RunConfig(
            model=_parse_model(doc.get("model", "one_qubit")),
            part=doc.get("part", "real"),
            multiplier_method=doc.get("multiplier_method", "exact"),
            iterations=int(doc.get("iterations", 20)),
            n_runs=int(doc.get("n_runs", 1)),
            init=_parse_init(doc.get("init")),
            step_size=float(doc.get("step_size", 0.5)),
            estimator=_parse_estimator(doc.get("estimator")),
            seed=int(doc.get("seed", DEFAULT_SEED)),
        )
    except (TypeError, ValueError, VmeError) as exc:
        raise ConfigError(str(exc)) from exc
    options = {
        "tolerance": float(classify.get("tolerance", 0.5)),
        "targets": classify.get("targets", "default"),
        "heatmap": hm,
        "percentiles": tuple(outputs.get("percentiles", (4.0, 96.0))),
    }
    return cfg, options


def _resolve_targets(cfg: RunConfig, options) -> list[float]:
    targets = options["targets"]
    if targets == "default":
        return default_targets(cfg.model, cfg.part)
    return [float(t) for t in targets]


def _fmt(x) -> str:
    return "%.17g" % float(x)


def _record_to_json(r: RunRecord) -> dict:
    return {
        "run_index": r.run_index,
        "f_values": list(r.f_values),
        "angles_i": [list(a) for a in r.angles_i],
        "angles_j": [list(a) for a in r.angles_j],
        "final_value": r.final_value,
        "status": r.status,
        "failure_reason": r.failure_reason,
        "assigned_target": r.assigned_target,
    }


def _record_from_json(d: dict) -> RunRecord:
    return RunRecord(
        run_index=int(d["run_index"]),
        f_values=tuple(d["f_values"]),
        angles_i=tuple(tuple(a) for a in d["angles_i"]),
        angles_j=tuple(tuple(a) for a in d["angles_j"]),
        final_value=d["final_value"],
        status=d["status"],
        failure_reason=d.get("failure_reason"),
        assigned_target=d.get("assigned_target"),
    )


def write_summary_csv(path: Path, summary):
    lines = ["iteration,group,median,p04,p96,count"]
    for target, band in summary.groups.items():
        for t in range(band.f_median.size):
            lines.append(
                f"{t},{_fmt(target)},{_fmt(band.f_median[t])},"
                f"{_fmt(band.f_low[t])},{_fmt(band.f_high[t])},{band.count}"
            )
    path.write_text("\n".join(lines) + "\n")


def write_errors_csv(path: Path, traces):
    lines = ["iteration,group,median,p25,p75,count"]
    for target, band in traces.items():
        for t in range(band.median.size):
            lines.append(
                f"{t},{_fmt(target)},{_fmt(band.median[t])},"
                f"{_fmt(band.p25[t])},{_fmt(band.p75[t])},{band.count}"
            )
    path.write_text("\n".join(lines) + "\n")


def write_heatmap_csv(path: Path, grid):
    header = "iteration,dropped," + ",".join(_fmt(c) for c in grid.centers)
    lines = [header]
    for t in range(grid.counts.shape[0]):
        lines.append(f"{t},{grid.dropped[t]}," + ",".join(str(c) for c in grid.counts[t]))
    path.write_text("\n".join(lines) + "\n")


def _analysis_outputs(records, cfg_echo, targets, options, out_dir: Path):
    tolerance = options["tolerance"]
    classified = classify_records(records, targets, tolerance) if tolerance > 0 else [
        replace(r, assigned_target=None) for r in records
    ]
    summary = median_band(classified, percentiles=options["percentiles"])
    write_summary_csv(out_dir / "summary.csv", summary)
    write_errors_csv(out_dir / "errors.csv", error_traces(classified, targets))
    hm = options.get("heatmap")
    if hm is not None:
        bin_width = float(hm.get("bin_width", 0.2))
        lo, hi = hm.get("lo"), hm.get("hi")
        if lo is None or hi is None:
            d_lo, d_hi = default_value_range(targets, bin_width)
            lo = d_lo if lo is None else float(lo)
            hi = d_hi if hi is None else float(hi)
        write_heatmap_csv(out_dir / "heatmap.csv", heatmap(classified, bin_width, (lo, hi)))
    runs_doc = {
        "schema": RUNS_SCHEMA,
        "config": cfg_echo,
        "targets": targets,
        "tolerance": tolerance,
        "records": [_record_to_json(r) for r in classified],
    }
    (out_dir / "runs.json").write_text(json.dumps(runs_doc, indent=1) + "\n")


def cmd_run(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text())
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    try:
        if args.seed is not None:
            doc["seed"] = args.seed
        if args.tolerance is not None:
            doc.setdefault("classify", {})["tolerance"] = args.tolerance
        if args.bin_width is not None:
            doc.setdefault("outputs", {}).setdefault("heatmap", {})["bin_width"] = args.bin_width
        cfg, options = parse_config(doc)
        targets = _resolve_targets(cfg, options)
    except (ConfigError, VmeError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        records = run_ensemble(cfg)
        _analysis_outputs(records, doc, targets, options, out_dir)
        manifest = {
            "tool": "vme",
            "version": __version__,
            "created": datetime.now(timezone.utc).isoformat(),
            "seed": cfg.seed,
            "config": doc,
        }
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 3
    n_failed = sum(r.failed for r in records)
    print(f"{cfg.n_runs} runs complete ({n_failed} failed); outputs in {out_dir}")
    return 0


def cmd_decompose(args) -> int:
    try:
        doc = json.loads(Path(args.matrix).read_text())
        m = dense_from_json(doc)
    except OSError as exc:
        print(f"error: cannot read matrix: {exc}", file=sys.stderr)
        return 2
    except (json.JSONDecodeError, KeyError, VmeError) as exc:
        print(f"error: bad matrix file: {exc}", file=sys.stderr)
        return 2
    try:
        pauli = decompose_hermitian(m)
        w_real, w_imag = hermitian_split(m)
    except NonHermitianInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        json.dumps(
            {
                "pauli": pauli.to_json(),
                "w_real": dense_to_json(w_real),
                "w_imag": dense_to_json(w_imag),
            },
            indent=1,
        )
    )
    return 0


def cmd_report(args) -> int:
    try:
        doc = json.loads(Path(args.runs).read_text())
    except OSError as exc:
        print(f"error: cannot read runs file: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: runs file is not valid JSON: {exc}", file=sys.stderr)
        return 2
    if not isinstance(doc, dict) or doc.get("schema") != RUNS_SCHEMA:
        print(f"error: expected schema {RUNS_SCHEMA}", file=sys.stderr)
        return 2
    try:
        records = [_record_from_json(d) for d in doc["records"]]
        targets = [float(t) for t in doc["targets"]]
        tolerance = args.tolerance if args.tolerance is not None else float(doc["tolerance"])
        options = {
            "tolerance": tolerance,
            "targets": targets,
            "heatmap": {"bin_width": args.bin_width} if args.bin_width is not None else None,
            "percentiles": (4.0, 96.0),
        }
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: malformed runs file: {exc}", file=sys.stderr)
        return 2
    try:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _analysis_outputs(records, doc.get("config", {}), targets, options, out_dir)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 3
    print(f"re-analyzed {len(records)} runs; outputs in {out_dir}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vme", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an ensemble from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--tolerance", type=float, default=None)
    p_run.add_argument("--bin-width", dest="bin_width", type=float, default=None)
    p_run.set_defaults(func=cmd_run)

    p_dec = sub.add_parser("decompose", help="Pauli-decompose and split a Hermitian matrix")
    p_dec.add_argument("matrix", help="path to a dense-matrix JSON file")
    p_dec.set_defaults(func=cmd_decompose)

    p_rep = sub.add_parser("report", help="re-analyze an existing runs.json")
    p_rep.add_argument("--runs", required=True)
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--tolerance", type=float, default=None)
    p_rep.add_argument("--bin-width", dest="bin_width", type=float, default=None)
    p_rep.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
