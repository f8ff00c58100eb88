"""Command-line entry point: ``synth``, ``weights`` and ``run`` subcommands.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np
import yaml

from . import __version__
from .core import DataError, Domain, Hyperparams, Schema, apply_standardizer, file_digest, fit_standardizer, load_dataset, write_dataset
from .density_ratio import domain_weights, fit_domain_discriminator, fit_gaussian_model, gaussian_weights
from .eval_bench import BenchConfig, ConfigError, EvalReport, run_benchmark
from .pipeline import CombineScale, HybridConfig, NegativePolicy, hybrid_weights
from .synth import ShiftKind, ShiftScenario, synth_shift
from .task_relevance import fit_union_model, task_weights_for_source
from .weighted_learner import LearnerKind

log = logging.getLogger("hybridtransfer")

CONFIG_SCHEMA_VERSION = 1
MANIFEST_VERSION = 1
EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad arguments or configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# argument types
# ---------------------------------------------------------------------------


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("must be a 64-bit unsigned integer")
    return v


def _rate(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {v}")
    return v


def _nonneg(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v >= 0.0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be a finite number >= 0, got {v}")
    return v


def _positive(text):
    v = _nonneg(text)
    if v == 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _at_least_one(text):
    v = _nonneg(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _summary(values, **extra):
    v = np.asarray(values, dtype=np.float64)
    out = {"n": int(v.size), "min": float(v.min()), "mean": float(v.mean()), "max": float(v.max())}
    out.update(extra)
    return out


def _print_summary(doc, stream=None):
    stream = stream or sys.stdout
    for k, v in doc.items():
        stream.write(f"{k}: {v}\n")


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    rate_s = args.positive_rate_source if args.positive_rate_source is not None else args.positive_rate
    rate_t = args.positive_rate_target if args.positive_rate_target is not None else args.positive_rate
    try:
        scn = ShiftScenario(
            kind=args.kind,
            d=args.d,
            n_source=args.n_source,
            n_target_train=args.n_target_train,
            n_target_test=args.n_target_test,
            shift_magnitude=args.shift_magnitude,
            positive_rate_source=rate_s,
            positive_rate_target=rate_t,
            class_sep=args.class_sep,
            source_label_noise=args.source_label_noise,
            flip_source_labels=args.flip_source_labels,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    os.makedirs(args.out, exist_ok=True)
    source, target_train, target_test = synth_shift(scn)
    files = {}
    for name, ds in (("source", source), ("target_train", target_train), ("target_test", target_test)):
        path = os.path.join(args.out, f"{name}.csv")
        write_dataset(ds, path)
        files[name] = {"path": f"{name}.csv", "sha256": file_digest(path), "rows": ds.n, "positives": int(ds.y.sum())}
    _write_json(
        os.path.join(args.out, "manifest.json"),
        {
            "manifest_version": MANIFEST_VERSION,
            "command": "synth",
            "tool_version": __version__,
            "scenario": scn.to_dict(),
            "seeds": [scn.seed],
            "outputs": files,
        },
    )
    for name, f in files.items():
        print(f"{name}: {f['rows']} rows, {f['positives']} positive -> {os.path.join(args.out, f['path'])}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------


def _load(path, label, domain):
    try:
        return load_dataset(path, Schema(label=label), domain)
    except DataError as exc:
        raise UsageError(str(exc)) from None


def cmd_weights(args) -> int:
    source = _load(args.source, args.label, Domain.SOURCE)
    target = _load(args.target, args.label, Domain.TARGET)
    if source.d != target.d:
        raise UsageError(f"dimension mismatch: source has {source.d} features, target has {target.d}")
    if args.standardize:
        st = fit_standardizer([source, target])
        source, target = apply_standardizer(st, source), apply_standardizer(st, target)
    cfg = HybridConfig(
        clip_max=args.clip_max,
        negative_policy=args.negative_policy,
        combine_scale=args.combine_scale,
        discriminator_l2=args.l2_reg,
        ridge_eps=args.ridge_eps,
    )
    if args.method == "discriminative":
        disc = fit_domain_discriminator(source, target, cfg.discriminator_l2, cfg.balance)
        rw = domain_weights(disc, source.X)
        cols = {"weight": rw.values}
        stats = _summary(rw.values, fraction_saturated=float(np.mean(rw.saturated)), converged=disc.converged)
    elif args.method == "gaussian":
        gm = fit_gaussian_model(source, target, cfg.ridge_eps)
        rw = gaussian_weights(gm, source.X)
        clipped = np.clip(rw.values, 0.0, cfg.clip_max)
        cols = {"weight": clipped}
        stats = _summary(clipped, fraction_clipped=float(np.mean(rw.values > cfg.clip_max)))
    else:
        hp = Hyperparams(seed=args.seed, boosting_rounds=args.boosting_rounds, class_prior=args.class_prior)
        disc = fit_domain_discriminator(source, target, cfg.discriminator_l2, cfg.balance)
        dw = domain_weights(disc, source.X)
        rep = task_weights_for_source(fit_union_model(source, target, hp, args.learner), source)
        wv = hybrid_weights(dw.values, rep.weights, cfg)
        cols = {"w_domain": dw.values, "w_task": rep.weights, "w_final": wv.values}
        stats = _summary(
            wv.values,
            fraction_clipped=wv.meta["fraction_clipped"],
            fraction_clamped=wv.meta["fraction_clamped"],
            task_fraction_negative=rep.fraction_negative,
        )
    names = list(cols)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*(cols[c] for c in names)):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    _print_summary({"method": args.method, **stats, "output": args.out})
    return EXIT_OK


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def read_config(path):
    """Load a YAML or JSON config, or the ``config`` block of a run manifest.

    Returns (config_doc, expected_input_digests); digests are only known
    when reading a manifest.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"config {path}: top level must be a mapping")
    if "manifest_version" in doc:
        if doc.get("command") != "run" or "config" not in doc:
            raise UsageError(f"{path} is not a run manifest")
        return dict(doc["config"]), dict(doc.get("input_digests") or {})
    return doc, {}


def resolve_config(doc: dict, base_dir=".", seed=None):
    """Validate a config document and fill in every default.

    Returns (resolved_doc, scenario_or_None, data_paths_or_None, BenchConfig).
    """
    doc = dict(doc)
    version = doc.pop("schema_version", None)
    if version != CONFIG_SCHEMA_VERSION:
        raise UsageError(f"schema_version: expected {CONFIG_SCHEMA_VERSION}, got {version!r}")
    scn_doc = doc.pop("scenario", None)
    data_doc = doc.pop("data", None)
    master = doc.pop("seed", 0)
    n_seeds = doc.pop("n_seeds", None)
    if seed is not None:
        # flag wins: replicate seeds restart from the flag value
        explicit = doc.pop("seeds", None)
        if n_seeds is None:
            n_seeds = len(explicit) if explicit else 1
        master = seed
    if "seeds" not in doc:
        try:
            n = int(n_seeds if n_seeds is not None else 1)
            m = int(master)
        except (TypeError, ValueError):
            raise UsageError("seed and n_seeds must be integers") from None
        if n < 1:
            raise UsageError("n_seeds: must be >= 1")
        doc["seeds"] = [m + i for i in range(n)]
    if scn_doc is not None and data_doc is not None:
        raise UsageError("config: give either 'scenario' or 'data', not both")
    scn = None
    data_paths = None
    if data_doc is not None:
        if not isinstance(data_doc, dict) or set(data_doc) - {"source", "target_train", "target_test", "label"}:
            raise UsageError("data: expected keys source, target_train, target_test and optional label")
        missing = {"source", "target_train", "target_test"} - set(data_doc)
        if missing:
            raise UsageError(f"data: missing keys {sorted(missing)}")
        data_paths = dict(data_doc)
        # absolute paths keep a manifest usable from any directory
        for role in ("source", "target_train", "target_test"):
            data_paths[role] = os.path.abspath(os.path.join(base_dir, str(data_paths[role])))
    else:
        try:
            scn = ShiftScenario(**(scn_doc or {}))
        except (TypeError, ValueError) as exc:
            raise UsageError(f"scenario: {exc}") from None
    try:
        cfg = BenchConfig.from_dict(doc)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    resolved = {"schema_version": CONFIG_SCHEMA_VERSION}
    if scn is not None:
        resolved["scenario"] = scn.to_dict()
    else:
        resolved["data"] = data_paths
    resolved.update(cfg.to_dict())
    return resolved, scn, data_paths, cfg


def _load_data(paths):
    label = paths.get("label", "label")
    out = []
    digests = {}
    for role, dom in (("source", Domain.SOURCE), ("target_train", Domain.TARGET), ("target_test", Domain.TARGET)):
        out.append(_load(paths[role], label, dom))
        digests[role] = file_digest(paths[role])
    return tuple(out), digests


def _outputs(cfg: BenchConfig):
    out = {"report": "report.json", "manifest": "manifest.json"}
    for k in cfg.sweep_kinds:
        out[f"sweep_{k.value}"] = f"sweep_{k.value}.csv"
    return out


def cmd_run(args) -> int:
    doc, expected_digests = read_config(args.config)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    resolved, scn, data_paths, cfg = resolve_config(doc, base_dir, args.seed)
    outputs = _outputs(cfg)
    if args.dry_run:
        plan = {"config": resolved, "seeds": list(cfg.seeds), "outputs": outputs, "trained": False}
        json.dump(plan, sys.stdout, indent=1, sort_keys=True)
        sys.stdout.write("\n")
        return EXIT_OK
    data = None
    digests = {}
    if data_paths is not None:
        data, digests = _load_data(data_paths)
        for role, d in expected_digests.items():
            if digests.get(role) != d:
                raise UsageError(f"input {role} does not match the manifest digest")
    os.makedirs(args.out, exist_ok=True)
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "command": "run",
        "tool_version": __version__,
        "config": resolved,
        "input_digests": digests,
        "seeds": list(cfg.seeds),
        "outputs": outputs,
    }
    _write_json(os.path.join(args.out, outputs["manifest"]), manifest)
    t0 = time.perf_counter()
    try:
        report = run_benchmark(scn, cfg, data=data, jobs=args.jobs)
    except Exception as exc:  # noqa: BLE001
        log.error("run failed: %s", exc)
        _write_json(os.path.join(args.out, outputs["report"]), {"status": "failed", "error": str(exc), "manifest": manifest})
        return EXIT_RUNTIME
    report.manifest = manifest
    report.write_json(os.path.join(args.out, outputs["report"]))
    for k in cfg.sweep_kinds:
        if report.sweeps[k.value]["n_ok"]:
            report.write_sweep_csv(k, os.path.join(args.out, outputs[f"sweep_{k.value}"]))
    _print_table(report)
    log.info("finished in %.1f s", time.perf_counter() - t0)
    if not report.complete:
        sys.stderr.write("some baselines failed on some seeds; see report.json\n")
        return EXIT_RUNTIME
    return EXIT_OK


def _print_table(report: EvalReport):
    print(f"{'baseline':<12} {'macro_f1':>18} {'precision':>10} {'recall':>8} {'accuracy':>9}  ok/failed")
    for kind, s in report.summary.items():
        if s["n_ok"]:
            f1 = f"{s['macro_f1']['mean']:.4f} ± {s['macro_f1']['sd']:.4f}"
            print(
                f"{kind:<12} {f1:>18} {s['precision']['mean']:>10.4f} {s['recall']['mean']:>8.4f} "
                f"{s['accuracy']['mean']:>9.4f}  {s['n_ok']}/{s['n_failed']}"
            )
        else:
            print(f"{kind:<12} {'failed':>18}  0/{s['n_failed']}")
    for name, c in report.comparisons.items():
        print(f"{name}: wins {c['wins']} losses {c['losses']} ties {c['ties']} sign-test p = {c['p_one_sided']:.4g}")
    for kind, s in report.sweeps.items():
        print(f"sweep {kind}: interior peak in {s['interior_peak_seeds']} of {s['n_ok']} seeds")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridtransfer", description="Instance-weighted transfer learning toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic source/target shift scenario")
    s.add_argument("--kind", choices=[k.value for k in ShiftKind], default=ShiftKind.MEAN_SHIFT.value)
    s.add_argument("--d", type=_positive_int, default=10, help="feature dimension")
    s.add_argument("--n-source", type=_positive_int, default=5000)
    s.add_argument("--n-target-train", type=_positive_int, default=200)
    s.add_argument("--n-target-test", type=_positive_int, default=2000)
    s.add_argument("--shift-magnitude", type=_nonneg, default=1.5)
    s.add_argument("--positive-rate", type=_rate, default=0.05, help="positive rate for both domains")
    s.add_argument("--positive-rate-source", type=_rate, default=None)
    s.add_argument("--positive-rate-target", type=_rate, default=None)
    s.add_argument("--class-sep", type=_nonneg, default=ShiftScenario.class_sep)
    s.add_argument("--source-label-noise", type=_nonneg, default=0.0)
    s.add_argument("--flip-source-labels", action="store_true")
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_synth)

    w = sub.add_parser("weights", help="estimate source sample weights")
    w.add_argument("--source", required=True, help="source CSV")
    w.add_argument("--target", required=True, help="target CSV")
    w.add_argument("--method", choices=["discriminative", "gaussian", "hybrid"], required=True)
    w.add_argument("--out", required=True, help="output CSV")
    w.add_argument("--label", default="label", help="label column name")
    w.add_argument("--learner", choices=[k.value for k in LearnerKind], default=LearnerKind.STUMPS.value)
    w.add_argument("--boosting-rounds", type=_positive_int, default=Hyperparams.boosting_rounds)
    w.add_argument("--clip-max", type=_at_least_one, default=10.0)
    w.add_argument("--negative-policy", choices=[k.value for k in NegativePolicy], default=NegativePolicy.CLAMP_ZERO.value)
    w.add_argument("--combine-scale", choices=[k.value for k in CombineScale], default=CombineScale.RAW_SUM.value)
    w.add_argument("--l2-reg", type=_positive, default=1e-2, help="discriminator L2 penalty")
    w.add_argument("--ridge-eps", type=_positive, default=1e-3, help="Gaussian covariance ridge")
    w.add_argument("--class-prior", action="store_true", help="balance classes in the union model's loss")
    w.add_argument("--seed", type=_seed, default=0)
    w.add_argument("--no-standardize", dest="standardize", action="store_false")
    w.set_defaults(func=cmd_weights)

    r = sub.add_parser("run", help="run a benchmark from a config file or manifest")
    r.add_argument("--config", required=True, help="YAML/JSON config, or a manifest.json from an earlier run")
    r.add_argument("--out", default="results", help="output directory")
    r.add_argument("--seed", type=_seed, default=None, help="override the config's base seed")
    r.add_argument("--jobs", type=_positive_int, default=1, help="worker processes (results do not depend on it)")
    r.add_argument("--dry-run", action="store_true", help="validate and print the resolved plan only")
    r.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"hybridtransfer {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except (DataError, ValueError, FloatingPointError) as exc:
        sys.stderr.write(f"hybridtransfer {args.command}: error: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
