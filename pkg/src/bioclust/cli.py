"""Command-line entry point: ``bioclust <subcommand> [flags]``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from contextlib import contextmanager
from dataclasses import asdict, fields

import numpy as np

from . import clustering, evaluation, plots, serialize
from .features import FEATURE_NAMES, apply_standardizer, fit_standardizer
from .ingest import LABEL_NAMES, EmptyRecordError, ParseError, load_recording, write_recording
from .pca import pca_fit, pca_transform
from .pipeline import PipelineConfig, WindowTable, build_windows, cluster_matrix, synth_records
from .synthgen import ProtocolConfig, generate_protocol_recording, slot_manifest

log = logging.getLogger("bioclust")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4
SEED_ENV = "BIOCLUST_SEED"

# core files every `pipeline` run writes; per-cluster waveform SVGs come on top
EXPECTED_ARTIFACTS = (
    "report.json",
    "features.csv",
    "model.json",
    "silhouette.csv",
    "silhouette.svg",
    "pca_scatter.svg",
    "confusion_multiclass.svg",
    "confusion_binary.svg",
)


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage, exc, code):
        super().__init__(f"stage '{stage}' failed: {exc}")
        self.code = code


DATA_ERRORS = (ParseError, EmptyRecordError, serialize.SchemaError, OSError, ValueError, IndexError)


@contextmanager
def stage(name):
    try:
        yield
    except StageError:
        raise
    except ConfigError as exc:
        raise StageError(name, exc, EXIT_CONFIG) from exc
    except DATA_ERRORS as exc:
        raise StageError(name, exc, EXIT_DATA) from exc
    except Exception as exc:  # noqa: BLE001 - anything else is a bug
        raise StageError(name, exc, EXIT_INTERNAL) from exc


# ---------------------------------------------------------------- arguments

def _k_value(text):
    if text == "best":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--k expects an integer or 'best', got {text!r}") from None


def _k_range(text):
    try:
        lo, hi = (int(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--k-sweep expects A:B, got {text!r}") from None
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("pipeline settings (override --config)")
    g.add_argument("--config", help="JSON file with pipeline settings; flags override it")
    g.add_argument("--input", nargs="+", help="recording CSV(s); pooled into one window set")
    g.add_argument("--synth-config", help="ProtocolConfig JSON used when no --input is given")
    g.add_argument("--sessions", type=int, help="synthetic sessions to pool (seeds seed, seed+1, ...)")
    g.add_argument("--modality", choices=("ecg", "ppg"))
    g.add_argument("--fs", type=float, help="sampling rate in Hz (default 1000)")
    g.add_argument("--window-s", type=float, help="window length in seconds (default 120)")
    g.add_argument("--stride-s", type=float, help="window stride in seconds (default 30)")
    g.add_argument("--k", type=_k_value, help="cluster count, or 'best' for the silhouette optimum (default 4)")
    g.add_argument("--k-sweep", type=_k_range, help="silhouette sweep range A:B (default 2:10)")
    g.add_argument("--method", choices=("kmeans", "agglo", "agglomerative"))
    g.add_argument("--mapping", choices=evaluation.MAPPING_METHODS)
    g.add_argument("--no-standardize", action="store_true", default=None)
    g.add_argument("--seed", type=int, help=f"random seed (fallback: ${SEED_ENV}, then 0)")
    g.add_argument("--restarts", type=int, help="k-means restarts (default 10)")
    g.add_argument("--out", default=".", help="output directory (default: current directory)")
    g.add_argument("--features", help="features CSV to use instead of recomputing from recordings")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="bioclust", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="write synthetic protocol recordings")
    sub.add_parser("features", parents=[common], help="window recordings and write features.csv")
    sub.add_parser("cluster", parents=[common], help="fit a clustering and write model.json")
    sub.add_parser("sweep", parents=[common], help="silhouette score over a range of k")
    p = sub.add_parser("pca", parents=[common], help="2-D PCA scores and scatter plot")
    p.add_argument("--model", help="model.json whose clusters label the scatter")
    p = sub.add_parser("evaluate", parents=[common], help="score a model against features.csv")
    p.add_argument("--model", required=True, help="model.json written by `cluster` or `pipeline`")
    sub.add_parser("pipeline", parents=[common], help="run every stage and write all artifacts")
    return parser


def resolve_config(args) -> tuple[PipelineConfig, bool]:
    """Merge defaults, the --config file and explicit flags. Returns (config, use_best_k)."""
    settings = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as handle:
                settings = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read --config {args.config}: {exc}") from None
        if not isinstance(settings, dict):
            raise ConfigError("--config must hold a JSON object")
        settings = {k.replace("-", "_"): v for k, v in settings.items()}

    flag_map = {"input": "inputs", "modality": "modality", "fs": "fs", "window_s": "window_s",
                "stride_s": "stride_s", "k": "k", "k_sweep": "k_sweep", "method": "method",
                "mapping": "mapping", "seed": "seed", "restarts": "restarts", "sessions": "sessions"}
    for flag, key in flag_map.items():
        value = getattr(args, flag)
        if value is not None:
            settings[key] = value
    if args.no_standardize:
        settings["standardize"] = False
    if args.synth_config:
        settings["synth"] = args.synth_config
    if "inputs" in settings and isinstance(settings["inputs"], str):
        settings["inputs"] = [settings["inputs"]]
    if "seed" not in settings:
        env = os.environ.get(SEED_ENV)
        if env is not None:
            try:
                settings["seed"] = int(env)
            except ValueError:
                raise ConfigError(f"${SEED_ENV} must be an integer, got {env!r}") from None
    if settings.get("method") == "agglo":
        settings["method"] = "agglomerative"
    if isinstance(settings.get("k_sweep"), str):
        settings["k_sweep"] = _k_range(settings["k_sweep"])

    use_best = settings.get("k") == "best"
    if use_best:
        settings["k"] = 2  # placeholder until the sweep has run

    synth = settings.pop("synth", None)
    if settings.get("inputs") and synth is not None:
        raise ConfigError("give either --input or --synth-config, not both")
    if not settings.get("inputs"):
        settings.pop("inputs", None)
        synth = _load_protocol(synth, settings.get("seed"))
        if "fs" in settings:
            synth.sampling_rate = float(settings["fs"])
        else:
            settings["fs"] = synth.sampling_rate
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(settings) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    if "k_sweep" in settings:
        settings["k_sweep"] = tuple(settings["k_sweep"])
    try:
        config = PipelineConfig(synth=synth, **settings)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return config, use_best


def _load_protocol(source, seed) -> ProtocolConfig:
    try:
        if source is None:
            protocol = ProtocolConfig()
        elif isinstance(source, dict):
            protocol = ProtocolConfig(**source)
        else:
            with open(source, encoding="utf-8") as handle:
                protocol = ProtocolConfig.from_json(handle.read())
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid synth config: {exc}") from None
    if seed is not None:
        protocol.seed = int(seed)
    return protocol


# ---------------------------------------------------------------- stages

def _records(config: PipelineConfig):
    if config.synth is not None:
        return synth_records(config.synth, config.modality, config.sessions)
    return [load_recording(path, config.fs, config.modality, permissive=True) for path in config.inputs]


def _feature_rows(args, config):
    """(start_s, labels, X, table-or-None) from --features or from recordings."""
    if args.features:
        with stage("features"):
            start, labels, X = serialize.read_features(args.features)
        return start, labels, X, None
    with stage("ingest"):
        records = _records(config)
    with stage("features"):
        table = build_windows(records, config.window_s, config.stride_s)
    return table.start_s, table.labels, table.features, table


def _design_matrix(X, config):
    scaler = fit_standardizer(X) if config.standardize else None
    return (apply_standardizer(scaler, X) if scaler is not None else X), scaler


def _sweep(Xs, config):
    lo, hi = config.k_sweep
    hi_allowed = Xs.shape[0] - 1
    if hi > hi_allowed:
        log.warning("k sweep upper bound %d exceeds n - 1 = %d; clipping", hi, hi_allowed)
        hi = hi_allowed
    if hi < lo:
        raise ValueError(f"only {Xs.shape[0]} windows; cannot sweep k from {lo}")
    return clustering.silhouette_sweep(Xs, lo, hi, seed=config.seed, restarts=config.restarts)


def _sweep_svg(sweep):
    return plots.line_plot([(sweep.k_values, sweep.scores, "silhouette")],
                           f"Silhouette score vs k (best k = {sweep.best_k})",
                           "k", "mean silhouette", markers=True)


def _confusion_svgs(result):
    out = {}
    for key, title in (("multiclass", "Noise-type confusion matrix"),
                       ("binary", "Clean vs noisy confusion matrix")):
        rep = result[key]
        out[key] = plots.heatmap(rep["confusion_counts"], rep["class_names"], rep["class_names"],
                                 f"{title} (accuracy {rep['accuracy']:.3f})")
    return out


def _waveform_svgs(table: WindowTable, Xs, assignment, k):
    """Mean waveform and the most central member window for each cluster."""
    out = {}
    seconds = min(5.0, table.windows[0].length / table.fs)
    for c in range(k):
        members = np.flatnonzero(assignment == c)
        if members.size == 0:
            continue
        stack = np.vstack([table.samples(i) for i in members])
        mean = plots.downsample(stack.mean(axis=0))
        t = np.linspace(0, table.windows[0].length / table.fs, mean.size, endpoint=False)
        out[f"cluster_{c}_mean.svg"] = plots.line_plot(
            [(t, mean, "mean")], f"Cluster {c}: mean of {members.size} windows", "time in window (s)", "amplitude")
        centre = Xs[members].mean(axis=0)
        pick = members[np.argmin(((Xs[members] - centre) ** 2).sum(axis=1))]
        n = int(seconds * table.fs)
        sample = plots.downsample(table.samples(pick)[:n])
        ts = np.linspace(0, seconds, sample.size, endpoint=False)
        w = table.windows[pick]
        out[f"cluster_{c}_sample.svg"] = plots.line_plot(
            [(ts, sample, "window")],
            f"Cluster {c}: sample window ({w.parent} @ {w.start / table.fs:g} s, label {w.label})",
            "time (s)", "amplitude")
    return out


# ---------------------------------------------------------------- commands

def cmd_synth(args, config, use_best):
    out = args.out
    with stage("synth"):
        os.makedirs(out, exist_ok=True)
        protocol = config.synth
        if protocol is None:
            raise ConfigError("synth needs a protocol config, not --input")
        modalities = [args.modality] if args.modality else ["ecg", "ppg"]
        manifest = slot_manifest(protocol)
        manifest["files"] = []
        for i in range(config.sessions):
            seed = protocol.seed + i
            session = ProtocolConfig(**{**asdict(protocol), "seed": seed})
            for modality in modalities:
                record = generate_protocol_recording(session, modality)
                name = f"synth_{modality}.csv" if config.sessions == 1 else f"synth_{modality}_seed{seed}.csv"
                write_recording(record, os.path.join(out, name))
                manifest["files"].append({"path": name, "modality": modality, "seed": seed,
                                          "samples": len(record), "fs": record.fs})
        serialize.write_json(os.path.join(out, "manifest.json"), manifest)
    print(f"wrote {len(manifest['files'])} recording(s) and manifest.json to {out}")


def cmd_features(args, config, use_best):
    start, labels, X, _ = _feature_rows(args, config)
    with stage("write"):
        os.makedirs(args.out, exist_ok=True)
        serialize.write_features(os.path.join(args.out, "features.csv"), start, labels, X)
    print(f"wrote {len(labels)} windows to {os.path.join(args.out, 'features.csv')}")


def cmd_cluster(args, config, use_best):
    start, labels, X, _ = _feature_rows(args, config)
    with stage("cluster"):
        Xs, scaler = _design_matrix(X, config)
        k = _sweep(Xs, config).best_k if use_best else config.k
        model, assignment = cluster_matrix(Xs, config, k)
    with stage("write"):
        os.makedirs(args.out, exist_ok=True)
        serialize.write_json(os.path.join(args.out, "model.json"), serialize.model_document(model, scaler))
    print(f"k={k} cluster sizes {np.bincount(assignment, minlength=k).tolist()}")


def cmd_sweep(args, config, use_best):
    _, _, X, _ = _feature_rows(args, config)
    with stage("sweep"):
        Xs, _ = _design_matrix(X, config)
        sweep = _sweep(Xs, config)
    with stage("write"):
        os.makedirs(args.out, exist_ok=True)
        serialize.write_silhouette(os.path.join(args.out, "silhouette.csv"), sweep.k_values, sweep.scores)
        serialize.write_text(os.path.join(args.out, "silhouette.svg"), _sweep_svg(sweep))
    for k, s in zip(sweep.k_values, sweep.scores):
        print(f"k={k:2d}  silhouette={s:.4f}")
    print(f"best k = {sweep.best_k}")


def cmd_pca(args, config, use_best):
    _, labels, X, _ = _feature_rows(args, config)
    with stage("pca"):
        Xs, scaler = _design_matrix(X, config)
        if args.model:
            model, scaler_m = serialize.load_model(args.model)
            Xm = apply_standardizer(scaler_m, X) if scaler_m is not None else X
            clusters = _assign(model, Xm)
        else:
            clusters = cluster_matrix(Xs, config)[1]
        pca = pca_fit(Xs, 2)
        scores = pca_transform(pca, Xs)
    with stage("write"):
        _write_pca(args.out, pca, scores, labels, clusters)
    print("explained variance ratio:", [round(r, 4) for r in pca.explained_variance_ratio.tolist()])


def _write_pca(out, pca, scores, labels, clusters):
    os.makedirs(out, exist_ok=True)
    serialize.write_pca_scores(os.path.join(out, "pca_scores.csv"), scores, labels, clusters)
    serialize.write_json(os.path.join(out, "pca_model.json"), pca.to_dict())
    r = pca.explained_variance_ratio
    svg = plots.scatter_plot(scores[:, 0], scores[:, 1], clusters,
                             f"PCA of window features, ratios [{r[0]:.2f}, {r[1]:.2f}]",
                             f"PC1 ({100 * r[0]:.1f}%)", f"PC2 ({100 * r[1]:.1f}%)")
    serialize.write_text(os.path.join(out, "pca_scatter.svg"), svg)


def _assign(model, X):
    if isinstance(model, clustering.KMeansModel):
        return clustering.kmeans_assign(model, X)
    if model.labels.size != X.shape[0]:
        raise serialize.SchemaError(
            f"field 'assignment' has {model.labels.size} entries but the features have {X.shape[0]} rows")
    return model.labels


def evaluate_files(features_path, model_path, mapping="majority") -> dict:
    _, labels, X = serialize.read_features(features_path)
    model, scaler = serialize.load_model(model_path)
    if X.shape[1] != len(FEATURE_NAMES):
        raise serialize.SchemaError("features file has the wrong number of feature columns")
    Xm = apply_standardizer(scaler, X) if scaler is not None else X
    return evaluation.evaluate_assignment(labels, _assign(model, Xm), mapping)


def cmd_evaluate(args, config, use_best):
    if not args.features:
        raise StageError("evaluate", ConfigError("evaluate needs --features"), EXIT_CONFIG)
    with stage("evaluate"):
        result = evaluate_files(args.features, args.model, config.mapping)
    with stage("write"):
        os.makedirs(args.out, exist_ok=True)
        serialize.write_json(os.path.join(args.out, "evaluation.json"), result)
    _print_summary(result)


def _print_summary(result):
    for key in ("multiclass", "binary"):
        rep = result[key]
        print(f"{key}: accuracy {rep['accuracy']:.3f}  macro-F1 {rep['macro_f1']:.3f}  "
              f"weighted-F1 {rep['weighted_f1']:.3f}")
        for row in rep["per_class"]:
            print(f"  class {row['label']}: precision {row['precision']:.3f} recall {row['recall']:.3f} "
                  f"f1 {row['f1']:.3f} support {row['support']}")


def run_pipeline(config: PipelineConfig, out: str, use_best: bool = False) -> dict:
    """Every stage in order; writes all artifacts into ``out`` and returns the report."""
    with stage("ingest"):
        records = _records(config)
    with stage("windowing"):
        table = build_windows(records, config.window_s, config.stride_s)
    with stage("standardize"):
        Xs, scaler = _design_matrix(table.features, config)
    with stage("sweep"):
        sweep = _sweep(Xs, config)
    with stage("cluster"):
        k = sweep.best_k if use_best else config.k
        if k > Xs.shape[0]:
            raise ValueError(f"k={k} exceeds the {Xs.shape[0]} available windows")
        model, assignment = cluster_matrix(Xs, config, k)
    with stage("pca"):
        pca = pca_fit(Xs, 2)
        scores = pca_transform(pca, Xs)
    with stage("evaluate"):
        result = evaluation.evaluate_assignment(table.labels, assignment, config.mapping)

    labels = table.labels
    report = {
        "config": {**config.describe(), "k": k, "k_from_sweep": use_best},
        "n_windows": int(labels.size),
        "window_label_counts": {LABEL_NAMES[c]: int(np.sum(labels == c)) for c in LABEL_NAMES},
        "silhouette": {"k_values": sweep.k_values, "scores": sweep.scores, "best_k": sweep.best_k},
        "clustering": {"method": config.method, "k": k,
                       "cluster_sizes": np.bincount(assignment, minlength=k).tolist(),
                       "inertia": getattr(model, "inertia", None)},
        "pca": {"explained_variance_ratio": pca.explained_variance_ratio.tolist(),
                "components": pca.components.tolist(), "feature_names": list(FEATURE_NAMES)},
        "evaluation": result,
    }
    with stage("write"):
        os.makedirs(out, exist_ok=True)
        path = lambda name: os.path.join(out, name)  # noqa: E731
        serialize.write_features(path("features.csv"), table.start_s, labels, table.features)
        serialize.write_json(path("model.json"), serialize.model_document(model, scaler))
        serialize.write_silhouette(path("silhouette.csv"), sweep.k_values, sweep.scores)
        serialize.write_text(path("silhouette.svg"), _sweep_svg(sweep))
        _write_pca(out, pca, scores, labels, assignment)
        for key, svg in _confusion_svgs(result).items():
            serialize.write_text(path(f"confusion_{key}.svg"), svg)
            serialize.write_confusion(path(f"confusion_{key}.csv"), result[key]["confusion_counts"],
                                      result[key]["classes"])
        for name, svg in _waveform_svgs(table, Xs, assignment, k).items():
            serialize.write_text(path(name), svg)
        serialize.write_json(path("report.json"), report)
    return report


def cmd_pipeline(args, config, use_best):
    report = run_pipeline(config, args.out, use_best)
    print(f"{report['n_windows']} windows, k={report['clustering']['k']}, "
          f"silhouette-best k={report['silhouette']['best_k']}")
    _print_summary(report["evaluation"])
    print(f"artifacts written to {args.out}")


COMMANDS = {"synth": cmd_synth, "features": cmd_features, "cluster": cmd_cluster,
            "sweep": cmd_sweep, "pca": cmd_pca, "evaluate": cmd_evaluate, "pipeline": cmd_pipeline}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config, use_best = resolve_config(args)
    except ConfigError as exc:
        print(f"bioclust: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        COMMANDS[args.command](args, config, use_best)
    except StageError as exc:
        print(f"bioclust: {exc}", file=sys.stderr)
        return exc.code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
