"""Command-line front end.

Subcommands cover the full pipeline: ``metrics`` turns a pair of recordings
into one similarity-feature row, ``prep`` cleans or rebalances a labeled
feature table, ``train``/``eval`` fit and score a blending ensemble, and
``sweep`` runs the whole baseline-versus-ensemble comparison. ``synth``
generates a labeled table for experiments.

Exit codes: 0 on success, 1 for usage errors, 2 when the pipeline or the
filesystem rejects the inputs. Tunable options resolve as command-line flag,
then ``--config`` JSON file, then built-in default.
"""

from __future__ import annotations

import argparse
import json
import pathlib
import sys

from .blend import (
    ensemble_from_dict,
    fit_ensemble,
    make_blend_config,
    predict_ensemble,
    save_ensemble,
)
from .dataprep import Dataset, SmoteParams, iqr_clean, kmeans_smote
from .errors import BadParam, FormatError, PipelineError, UnsupportedFormat
from .harness import (
    DEFAULT_POOL,
    DEFAULT_SUBSET_SIZES,
    accuracy,
    load_dataset_csv,
    save_dataset_csv,
    sweep,
    synth_dataset,
    write_report_csv,
    write_report_markdown,
)
from .learners import model_from_dict, predict
from .metrics import FEATURE_NAMES, MetricParams, feature_vector
from .signal import (
    DEFAULT_ENVELOPE_HOP,
    DEFAULT_ENVELOPE_WINDOW,
    preprocess,
    read_sequence_csv,
    read_wav,
)


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; keep 2 for pipeline failures
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_json(path, what: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise FormatError(f"bad {what} JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise FormatError(f"{what} must hold a JSON object")
    return doc


def _resolve(args, defaults: dict) -> dict:
    """Merge option sources: flags beat the config file, which beats defaults."""
    merged = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path is not None:
        doc = _load_json(config_path, "config")
        unknown = sorted(set(doc) - set(defaults))
        if unknown:
            raise BadParam(f"unknown config keys: {', '.join(unknown)}")
        merged.update(doc)
    for key in defaults:
        if hasattr(args, key):
            merged[key] = getattr(args, key)
    return merged


def _csv_names(text: str) -> tuple[str, ...]:
    parts = tuple(p.strip() for p in text.split(",") if p.strip())
    if not parts:
        raise BadParam("expected a comma-separated list of names")
    return parts


def _csv_ints(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    try:
        return tuple(int(p) for p in str(text).split(",") if p.strip())
    except ValueError:
        raise BadParam(f"expected comma-separated integers, got {text!r}") from None


def _read_recording(path, fmt: str):
    if fmt == "auto":
        suffix = pathlib.PurePath(path).suffix.lower()
        if suffix == ".wav":
            fmt = "wav"
        elif suffix in (".csv", ".txt"):
            fmt = "csv"
        else:
            raise UnsupportedFormat(f"cannot infer format from suffix {suffix!r}")
    if fmt == "wav":
        return read_wav(path), True
    return read_sequence_csv(path), False


_METRICS_DEFAULTS = {
    "format": "auto",
    "params": None,
    "normalize": True,
    "envelope": None,  # None: on for wav input, off for csv
    "window": DEFAULT_ENVELOPE_WINDOW,
    "hop": DEFAULT_ENVELOPE_HOP,
}


def _cmd_metrics(args) -> int:
    opt = _resolve(args, _METRICS_DEFAULTS)
    if opt["params"] is None:
        params = MetricParams()
    else:
        doc = opt["params"]
        if isinstance(doc, str):
            try:
                doc = json.loads(doc)
            except ValueError as exc:
                raise FormatError(f"bad --params JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise FormatError("--params must hold a JSON object")
        try:
            params = MetricParams(**doc)
        except TypeError:
            known = ", ".join(sorted(MetricParams.__dataclass_fields__))
            raise BadParam(f"unknown metric parameter; known: {known}") from None

    rows = []
    for path in (args.control, args.assessed):
        seq, is_wav = _read_recording(path, opt["format"])
        apply_env = opt["envelope"] if opt["envelope"] is not None else is_wav
        rows.append(
            preprocess(
                seq,
                normalize=opt["normalize"],
                window=opt["window"],
                hop=opt["hop"],
                apply_envelope=apply_env,
            )
        )
    row = feature_vector(rows[0], rows[1], params=params)
    print(",".join(FEATURE_NAMES))
    print(",".join(repr(v) for v in row.values()))
    return 0


_CLEAN_DEFAULTS = {"fence_k": 1.5}


def _cmd_prep_clean(args) -> int:
    opt = _resolve(args, _CLEAN_DEFAULTS)
    d = load_dataset_csv(args.in_path)
    save_dataset_csv(iqr_clean(d, fence_k=opt["fence_k"]), args.out_path)
    return 0


_REBALANCE_DEFAULTS = {
    "seed": 0,
    "clusters": 8,
    "balance_threshold": 0.5,
    "neighbors": 5,
    "density_exponent": None,
}


def _cmd_prep_rebalance(args) -> int:
    opt = _resolve(args, _REBALANCE_DEFAULTS)
    d = load_dataset_csv(args.in_path)
    params = SmoteParams(
        n_clusters=opt["clusters"],
        cluster_balance_threshold=opt["balance_threshold"],
        k_neighbors=opt["neighbors"],
        density_exponent=opt["density_exponent"],
        seed=opt["seed"],
    )
    save_dataset_csv(kmeans_smote(d, params=params), args.out_path)
    return 0


_TRAIN_DEFAULTS = {
    "seed": 0,
    "val_fraction": 0.3,
    "meta_features": "labels",
    "scale": True,
}


def _cmd_train(args) -> int:
    opt = _resolve(args, _TRAIN_DEFAULTS)
    d = load_dataset_csv(args.in_path)
    config = make_blend_config(
        args.meta,
        _csv_names(args.bases),
        seed=opt["seed"],
        val_fraction=opt["val_fraction"],
        meta_feature_mode=opt["meta_features"],
        standardize=opt["scale"],
    )
    ensemble = fit_ensemble(config, d.features(), d.labels())
    save_ensemble(ensemble, args.out_path)
    return 0


def _cmd_eval(args) -> int:
    doc = _load_json(args.model, "model")
    d = load_dataset_csv(args.in_path)
    x = d.features()
    if "base_models" in doc:
        preds = predict_ensemble(ensemble_from_dict(doc), x)
    else:
        preds = predict(model_from_dict(doc), x)
    print(f"accuracy {accuracy(preds, d.labels()):.3f}")
    return 0


_SWEEP_DEFAULTS = {
    "seed": 0,
    "pool": ",".join(DEFAULT_POOL),
    "base_pool": None,
    "subset_sizes": ",".join(str(s) for s in DEFAULT_SUBSET_SIZES),
    "test_fraction": 0.25,
    "val_fraction": 0.3,
    "meta_features": "labels",
    "fence_k": 1.5,
    "scale": True,
}


def _cmd_sweep(args) -> int:
    opt = _resolve(args, _SWEEP_DEFAULTS)
    d = load_dataset_csv(args.in_path)
    report = sweep(
        d,
        master_seed=opt["seed"],
        pool=_csv_names(opt["pool"]),
        subset_sizes=_csv_ints(opt["subset_sizes"]),
        base_pool=None if opt["base_pool"] is None else _csv_names(opt["base_pool"]),
        test_fraction=opt["test_fraction"],
        val_fraction=opt["val_fraction"],
        meta_feature_mode=opt["meta_features"],
        fence_k=opt["fence_k"],
        scale_features=opt["scale"],
    )
    csv_path = pathlib.Path(args.report)
    write_report_csv(report, csv_path)
    write_report_markdown(report, csv_path.with_suffix(".md"))
    return 0


_SYNTH_DEFAULTS = {"seed": 0, "region_noise": 0.0}


def _cmd_synth(args) -> int:
    opt = _resolve(args, _SYNTH_DEFAULTS)
    d = synth_dataset(
        args.rows,
        args.minority,
        args.separation,
        seed=opt["seed"],
        region_noise=opt["region_noise"],
    )
    save_dataset_csv(d, args.out_path)
    return 0


def _add_config(parser) -> None:
    parser.add_argument("--config", metavar="FILE", help="JSON file of option defaults")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="speechblend", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("metrics", help="similarity features for one recording pair")
    p.add_argument("--control", required=True, metavar="FILE")
    p.add_argument("--assessed", required=True, metavar="FILE")
    p.add_argument("--format", choices=("auto", "wav", "csv"), default=S)
    p.add_argument("--params", metavar="JSON", default=S, help="metric parameter overrides")
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=S)
    p.add_argument("--envelope", action=argparse.BooleanOptionalAction, default=S)
    p.add_argument("--window", type=int, default=S)
    p.add_argument("--hop", type=int, default=S)
    _add_config(p)
    p.set_defaults(handler=_cmd_metrics)

    prep = sub.add_parser("prep", help="dataset cleaning and rebalancing")
    prep_sub = prep.add_subparsers(dest="prep_command", required=True, parser_class=_Parser)

    p = prep_sub.add_parser("clean", help="drop feature-outlier rows")
    p.add_argument("--in", dest="in_path", required=True, metavar="FILE")
    p.add_argument("--out", dest="out_path", required=True, metavar="FILE")
    p.add_argument("--fence-k", dest="fence_k", type=float, default=S)
    _add_config(p)
    p.set_defaults(handler=_cmd_prep_clean)

    p = prep_sub.add_parser("rebalance", help="oversample the minority class")
    p.add_argument("--in", dest="in_path", required=True, metavar="FILE")
    p.add_argument("--out", dest="out_path", required=True, metavar="FILE")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--clusters", type=int, default=S)
    p.add_argument("--balance-threshold", dest="balance_threshold", type=float, default=S)
    p.add_argument("--neighbors", type=int, default=S)
    p.add_argument("--density-exponent", dest="density_exponent", type=float, default=S)
    _add_config(p)
    p.set_defaults(handler=_cmd_prep_rebalance)

    p = sub.add_parser("train", help="fit a blending ensemble on a feature table")
    p.add_argument("--in", dest="in_path", required=True, metavar="FILE")
    p.add_argument("--meta", required=True, help="meta-classifier kind")
    p.add_argument("--bases", required=True, help="comma-separated base kinds")
    p.add_argument("--out", dest="out_path", required=True, metavar="FILE")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--val-fraction", dest="val_fraction", type=float, default=S)
    p.add_argument("--meta-features", dest="meta_features", choices=("labels", "scores"), default=S)
    p.add_argument("--scale", action=argparse.BooleanOptionalAction, default=S)
    _add_config(p)
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("eval", help="accuracy of a saved model on a feature table")
    p.add_argument("--model", required=True, metavar="FILE")
    p.add_argument("--in", dest="in_path", required=True, metavar="FILE")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("sweep", help="score baselines and ensembles over all variants")
    p.add_argument("--in", dest="in_path", required=True, metavar="FILE")
    p.add_argument("--report", required=True, metavar="FILE", help="output CSV path")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--pool", default=S, help="comma-separated classifier kinds")
    p.add_argument("--base-pool", dest="base_pool", default=S)
    p.add_argument("--subset-sizes", dest="subset_sizes", default=S)
    p.add_argument("--test-fraction", dest="test_fraction", type=float, default=S)
    p.add_argument("--val-fraction", dest="val_fraction", type=float, default=S)
    p.add_argument("--meta-features", dest="meta_features", choices=("labels", "scores"), default=S)
    p.add_argument("--fence-k", dest="fence_k", type=float, default=S)
    p.add_argument("--scale", action=argparse.BooleanOptionalAction, default=S)
    _add_config(p)
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("synth", help="generate a labeled synthetic feature table")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--minority", type=float, required=True, help="minority class fraction")
    p.add_argument("--separation", type=float, required=True, help="class mean gap in sd units")
    p.add_argument("--out", dest="out_path", required=True, metavar="FILE")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--region-noise", dest="region_noise", type=float, default=S)
    _add_config(p)
    p.set_defaults(handler=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.handler(args)
    except (PipelineError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
