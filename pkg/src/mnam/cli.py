"""Batch command line: ``mnam {train,certify,simulate,audit,export-shapes}``.

Every run reads one JSON config (``--config``); a few flags override its
top-level fields. Each output directory gets a ``manifest.json`` holding
the resolved config, seed, package version and checksums of inputs and
outputs. Exit codes: 0 success, 1 usage/config error, 2 data error,
3 training or certification failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import data as D
from . import evaluation as E
from . import monotonicity as mono
from . import nam_model as nm
from . import simulation as sim
from . import trainer as T
from .svg import line_chart

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_FAILURE = 0, 1, 2, 3
DEFAULT_SEED = 20220927

log = logging.getLogger("mnam")


class ConfigError(ValueError):
    pass


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_config(ref: str | None) -> dict:
    """Read a JSON config from a path or a bundled name such as ``table1``."""
    if ref is None:
        return {}
    path = Path(ref)
    if path.is_file():
        text = path.read_text()
    else:
        bundled = resources.files("mnam") / "configs" / f"{ref}.json"
        if not bundled.is_file():
            raise ConfigError(f"config not found: {ref}")
        text = bundled.read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{ref}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{ref}: top level must be an object")
    return cfg


def _resolve(args, fields: tuple[str, ...]) -> dict:
    cfg = load_config(args.config)
    for name in fields:
        value = getattr(args, name, None)
        if value is not None:
            cfg[name] = value
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg.setdefault("seed", DEFAULT_SEED)
    return cfg


class Outputs:
    """Collects files written into the run directory and writes the manifest."""

    def __init__(self, out: Path, command: str, config: dict, quiet: bool):
        self.out, self.command, self.config, self.quiet = out, command, config, quiet
        self.inputs: dict[str, str] = {}
        self.files: list[Path] = []
        out.mkdir(parents=True, exist_ok=True)

    def echo(self, text: str) -> None:
        if not self.quiet:
            print(text)

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        path.write_text(text)
        self.files.append(path)
        return path

    def write_json(self, name: str, obj) -> Path:
        return self.write(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def write_csv(self, name: str, header, rows) -> Path:
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_cell(v) for v in row))
        return self.write(name, "\n".join(lines) + "\n")

    def finish(self, status: int) -> int:
        manifest = {
            "command": self.command,
            "version": __version__,
            "seed": self.config.get("seed"),
            "config": self.config,
            "inputs": self.inputs,
            "outputs": {p.name: _sha256(p) for p in sorted(self.files)},
            "exit_status": status,
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return status


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


# --- data helpers -----------------------------------------------------------


def _load_dataset(cfg: dict, outputs: Outputs | None = None):
    """Return (prepared dataset, spec) for the config's data block."""
    if "synthetic" in cfg:
        syn = cfg["synthetic"]
        recipe = syn.get("recipe", cfg.get("recipe"))
        raw = D.synthetic_raw(recipe, int(syn.get("n", 1000)), int(syn.get("seed", cfg["seed"])))
        return D.prepare(recipe, raw)
    recipe = cfg.get("recipe")
    path = Path(cfg["data"])
    if recipe == "prepared":
        if outputs is not None:
            outputs.inputs[str(path.with_suffix(".csv"))] = _sha256(path.with_suffix(".csv"))
        return D.load_prepared(path)
    raw = D.load_raw(recipe, path)
    if outputs is not None:
        outputs.inputs[str(path)] = raw.sha256
    return D.prepare(recipe, raw)


def _check_data_config(cfg: dict) -> None:
    if "synthetic" in cfg:
        recipe = cfg["synthetic"].get("recipe", cfg.get("recipe"))
        if recipe not in D.RECIPES:
            raise ConfigError(f"unknown recipe {recipe!r}")
        return
    if "data" not in cfg:
        raise ConfigError("config needs a 'data' path (or a 'synthetic' block)")
    recipe = cfg.get("recipe")
    if recipe != "prepared" and recipe not in D.RECIPES:
        raise ConfigError(f"unknown recipe {recipe!r}; choose from {sorted(D.RECIPES)} or 'prepared'")
    path = Path(cfg["data"])
    if recipe == "prepared":
        path = path.with_suffix(".csv")
    if not path.is_file():
        raise D.DataError(f"data file not found: {path}")


# --- subcommands -------------------------------------------------------------


def cmd_train(args) -> int:
    cfg = _resolve(args, ("data", "recipe", "model"))
    cfg.setdefault("model", "mnam")
    cfg.setdefault("split_ratio", 0.8)
    cfg.setdefault("threshold", E.DEFAULT_THRESHOLD)
    if cfg["model"] not in ("fcnn", "nam", "mnam"):
        raise ConfigError(f"unknown model kind {cfg['model']!r}")
    tcfg = T.TrainConfig.from_dict({"seed": cfg["seed"], **cfg.get("train", {})})
    _check_data_config(cfg)
    out = Outputs(Path(args.out), "train", cfg, args.quiet)
    data, spec = _load_dataset(cfg, out)
    if cfg.get("unconstrained"):
        spec = spec.without_constraints()
    train, test = D.split(data, cfg["split_ratio"], cfg["seed"])
    kind = cfg["model"]
    status = EXIT_OK
    if kind == "fcnn":
        model = T.train_fcnn(train, spec, tcfg)
        predict = nm.fcnn_predict
    else:
        predict = nm.predict
        if kind == "nam":
            model = T.train_nam(train, spec, tcfg)
        else:
            try:
                model, esc = T.train_mnam(train, spec, tcfg)
            except T.MonotonicityNotAchieved as exc:
                model, esc = exc.model, exc.log
                status = EXIT_FAILURE
                out.echo(f"error: {exc}")
            out.write("escalation_log.csv", esc.to_csv())
            out.echo(esc.to_csv().rstrip())
    nm.save_model(model, out.out / "model.json")
    out.files.append(out.out / "model.json")
    report = {
        "model": kind,
        "n_params": model.n_params,
        "n_train": train.n,
        "n_test": test.n,
        "train": E.metrics(predict(model, train.X), train.y, cfg["threshold"]).to_dict(),
        "test": E.metrics(predict(model, test.X), test.y, cfg["threshold"]).to_dict(),
    }
    out.write_json("metrics.json", report)
    out.echo(E.metrics(predict(model, test.X), test.y, cfg["threshold"]).to_table(f"{kind} test: "))
    if kind != "fcnn" and model.spec.has_constraints:
        cert = mono.certify(model, tcfg.cert_resolution, train)
        out.write_json("certification.json", cert.to_dict())
        out.echo(cert.to_table())
        if kind == "mnam" and not cert.passed:
            status = EXIT_FAILURE
    return out.finish(status)


def cmd_certify(args) -> int:
    cfg = _resolve(args, ("model",))
    if "model" not in cfg:
        raise ConfigError("certify needs --model PATH")
    path = Path(cfg["model"])
    if not path.is_file():
        raise D.DataError(f"model file not found: {path}")
    model = nm.load_model(path)
    if not isinstance(model, nm.NamModel):
        raise ConfigError("only additive models can be certified")
    resolution = int(cfg.get("resolution", mono.DEFAULT_RESOLUTION))
    report = mono.certify(model, resolution)
    out = Outputs(Path(args.out), "certify", cfg, args.quiet)
    out.inputs[str(path)] = _sha256(path)
    out.write_json("certification.json", report.to_dict())
    out.echo(report.to_table())
    return out.finish(EXIT_OK if report.passed else EXIT_FAILURE)


def cmd_simulate(args) -> int:
    cfg = _resolve(args, ())
    if not ({"table1", "pairwise", "individual"} & cfg.keys()):
        cfg = {**load_config("table1"), **cfg}
    n_reps = int(cfg.get("n_reps", 1000))
    n_samples = int(cfg.get("n_samples", 10_000))
    seed = int(cfg["seed"])
    out = Outputs(Path(args.out), "simulate", cfg, args.quiet)
    results, summary = [], []
    if cfg.get("table1"):
        for param, value, sc in sim.table1_configs(n_reps, n_samples, seed):
            res = sim.simulate_individual(sc)
            results.append(("table1", param, res))
            published = sim.TABLE1[(param, value)]
            summary.append({"study": "table1", "swept": param, "value": value, "target": "x",
                            "ratio": res.ratio(), "stderr": res.stderr(), "published": published})  # fmt: skip
            out.echo(f"{param:>12} = {value:<5g} ratio {100 * res.ratio():5.1f}%  (published {100 * published:.1f}%)")
    for k, block in enumerate(cfg.get("individual", [])):
        sc = sim.SimConfigIndividual(**{"n_reps": n_reps, "n_samples": n_samples, "seed": seed, **block})
        res = sim.simulate_individual(sc)
        results.append((f"individual_{k}", "", res))
        summary.append({"study": f"individual_{k}", "target": "x", "ratio": res.ratio(), "stderr": res.stderr()})
    pair_blocks = cfg.get("pairwise", [])
    if pair_blocks is True:
        pair_blocks = [{}]
    for k, block in enumerate(pair_blocks):
        sc = sim.SimConfigPairwise(**{"n_reps": n_reps, "n_samples": n_samples, "seed": seed, **block})
        res = sim.simulate_pairwise(sc)
        results.append((f"pairwise_{k}", "", res))
        for target in ("x1", "x2", "pairwise"):
            entry = {"study": f"pairwise_{k}", "target": target,
                     "ratio": res.ratio(target), "stderr": res.stderr(target)}  # fmt: skip
            if not block:
                entry["published"] = sim.PAIRWISE_PUBLISHED[target]
            summary.append(entry)
            out.echo(f"pairwise {target:>8}: ratio {100 * res.ratio(target):5.1f}%")
    out.write("sweep.csv", sim.sweep_csv(results))
    out.write_json("summary.json", summary)
    return out.finish(EXIT_OK)


def cmd_audit(args) -> int:
    cfg = _resolve(args, ("data", "recipe"))
    _check_data_config(cfg)
    out = Outputs(Path(args.out), "audit", cfg, args.quiet)
    data, spec = _load_dataset(cfg, out)
    features = cfg.get("features")
    pairs = [tuple(p) for p in cfg.get("pairs", [])]
    if features is None:
        names = spec.names
        features = [names[i] for i in spec.monotone_indices if _integer_valued(data, names[i])]
        if "pairs" not in cfg:
            pairs = [(names[u], names[v]) for u, v in spec.pairwise_constraints
                     if names[u] in features and names[v] in features]  # fmt: skip
    report = E.audit_monotonicity(data, features, pairs, cfg.get("x_max"))
    for name, fa in report.features.items():
        out.write_csv(f"curve_{name}.csv", ["x", "mean_y", "count"],
                      [(pt.x, pt.mean if pt.present else None, pt.count) for pt in fa.curve])  # fmt: skip
        out.write_csv(f"hist_{name}.csv", ["x", "count"], fa.histogram)
        out.echo(f"{name}: " + ("drops at " + ", ".join(f"{a}->{b}" for a, b in fa.step_violations)
                                if fa.violated else "monotone"))  # fmt: skip
    for pa in report.pairs:
        out.write_csv(f"pair_{pa.dominant}__{pa.dominated}.csv", ["x", "rise_dominant", "rise_dominated"], pa.increments)
        out.echo(f"{pa.dominant} over {pa.dominated}: " +
                 (f"violated at x = {pa.violations}" if pa.violated else "holds"))  # fmt: skip
    out.write_json("audit_summary.json", report.summary())
    return out.finish(EXIT_OK)


def _integer_valued(data, name: str) -> bool:
    col = data.to_raw_space()[:, data.names.index(name)]
    return bool(np.allclose(col, np.round(col), atol=1e-9))


def cmd_export_shapes(args) -> int:
    cfg = _resolve(args, ("model", "compare"))
    if "model" not in cfg:
        raise ConfigError("export-shapes needs --model PATH")
    paths = [Path(cfg["model"])] + ([Path(cfg["compare"])] if cfg.get("compare") else [])
    for p in paths:
        if not p.is_file():
            raise D.DataError(f"model file not found: {p}")
    models = [nm.load_model(p) for p in paths]
    if not all(isinstance(m, nm.NamModel) for m in models):
        raise ConfigError("shape functions exist only for additive models")
    base = models[0]
    if any(m.spec.names != base.spec.names for m in models):
        raise ConfigError("models to overlay must share feature names")
    labels = cfg.get("labels") or [p.stem for p in paths]
    n_points = int(cfg.get("points", 101))
    features = cfg.get("features") or base.spec.names
    out = Outputs(Path(args.out), "export-shapes", cfg, args.quiet)
    for p in paths:
        out.inputs[str(p)] = _sha256(p)
    for name in features:
        i = base.spec.index(name)
        lo = min(m.spec.features[i].min for m in models)
        hi = max(m.spec.features[i].max for m in models)
        grid = np.linspace(lo, hi, n_points) if hi > lo else np.array([lo])
        if base.spec.features[i].kind == "binary":
            grid = np.unique([lo, hi])
        curves = [nm.shape_function(m, i, grid)[:, 1] for m in models]
        x_raw = base.spec.features[i].to_raw(grid)
        header = ["x", "x_raw"] + [f"f_{lab}" for lab in labels]
        out.write_csv(f"shape_{name}.csv", header, zip(grid, x_raw, *curves))
        order = np.argsort(x_raw)
        svg = line_chart(
            [(lab, x_raw[order], c[order]) for lab, c in zip(labels, curves)],
            title=f"shape function: {name}", xlabel=name, ylabel="centered contribution",
        )
        out.write(f"shape_{name}.svg", svg)
    out.echo(f"wrote {len(features)} shape function(s) to {out.out}")
    return out.finish(EXIT_OK)


COMMANDS = {
    "train": cmd_train,
    "certify": cmd_certify,
    "simulate": cmd_simulate,
    "audit": cmd_audit,
    "export-shapes": cmd_export_shapes,
}


def build_parser() -> argparse.ArgumentParser:
    def flags(suppress: bool) -> argparse.ArgumentParser:
        # subcommand copies suppress their defaults so flags given before the subcommand survive
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p = argparse.ArgumentParser(add_help=False)
        p.add_argument("--config", default=d(None), help="JSON config file or bundled config name")
        p.add_argument("--out", default=d("mnam_out"), help="output directory")
        p.add_argument("--seed", type=int, default=d(None), help="random seed (overrides the config)")
        p.add_argument("--quiet", action="store_true", default=d(False), help="suppress console output")
        return p

    common = flags(suppress=True)
    parser = argparse.ArgumentParser(prog="mnam", description=__doc__.splitlines()[0], parents=[flags(False)])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("train", parents=[common], help="train an fcnn, nam or mnam on a dataset")
    p.add_argument("--data", help="raw data file, or the .csv of a prepared dataset")
    p.add_argument("--recipe", choices=sorted(D.RECIPES) + ["prepared"], help="how to read --data")
    p.add_argument("--model", choices=["fcnn", "nam", "mnam"], help="model family to train")
    p = sub.add_parser("certify", parents=[common], help="grid-certify a saved additive model")
    p.add_argument("--model", help="model.json written by train")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo violation rates (default: the bundled table1 sweep)")
    p = sub.add_parser("audit", parents=[common], help="empirical marginal curves and histograms")
    p.add_argument("--data", help="raw data file, or the .csv of a prepared dataset")
    p.add_argument("--recipe", choices=sorted(D.RECIPES) + ["prepared"], help="how to read --data")
    p = sub.add_parser("export-shapes", parents=[common], help="shape-function CSVs and SVG charts")
    p.add_argument("--model", help="model.json written by train")
    p.add_argument("--compare", help="second model to overlay")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except D.DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, ValueError, TypeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except T.TrainingDivergedError as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
