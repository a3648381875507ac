"""Loading, per-dataset preprocessing recipes and seeded train/test splits.

Raw files are never bundled. Each recipe accepts a table whose columns are
named ``x1 .. xk, y`` in the order the datasets are usually described, and
the loaders also recognise the column headers of the public releases:

* COMPAS (Broward County, two-year recidivism; the Dressel & Farid cleaned
  file or ProPublica's ``compas-scores-two-years.csv``)
* Law school admissions / bar passage (LSAC, e.g. ``law_dataset.csv``)
* Thoracic surgery (UCI ``ThoraricSurgery.arff``)
* FICO HELOC explainable-ML challenge (``heloc_dataset_v1.csv``)
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .schema import Dataset, FeatureMeta, ModelSpec

TRUE_TOKENS = {"t", "true", "1", "1.0", "yes", "y"}
FALSE_TOKENS = {"f", "false", "0", "0.0", "no", "n"}


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class RawTable:
    columns: dict  # name -> np.ndarray (float64 for numeric/binary, object for text)
    source: str | None = None
    sha256: str | None = None

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def require(self, names) -> None:
        missing = [c for c in names if c not in self.columns]
        if missing:
            raise DataError(f"missing expected column(s): {', '.join(missing)}")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_cell(token: str, kind: str, row: int, col: str):
    tok = token.strip()
    if kind == "text":
        return tok
    if kind == "binary":
        low = tok.lower()
        if low in TRUE_TOKENS:
            return 1.0
        if low in FALSE_TOKENS:
            return 0.0
        raise DataError(f"row {row}, column {col!r}: cannot read {token!r} as a boolean")
    try:
        return float(tok)
    except ValueError:
        raise DataError(f"row {row}, column {col!r}: cannot read {token!r} as a number") from None


def load_csv(path, schema: dict, aliases: dict | None = None) -> RawTable:
    """Read a comma-separated UTF-8 file with a header row.

    ``schema`` maps output column names to a kind: ``numeric``, ``binary``
    (T/F, true/false, yes/no, 0/1) or ``text``. ``aliases`` optionally maps an
    output name to alternative header names. Columns not in the schema are
    ignored. Row numbers in errors count the header as row 1.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        lookup = {h.lower(): k for k, h in enumerate(header)}
        positions = {}
        for name in schema:
            candidates = [name, *(aliases or {}).get(name, ())]
            for cand in candidates:
                if cand.lower() in lookup:
                    positions[name] = lookup[cand.lower()]
                    break
        missing = [name for name in schema if name not in positions]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
        values = {name: [] for name in schema}
        for r, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) < len(header):
                raise DataError(f"{path}: row {r} has {len(record)} cells, expected {len(header)}")
            for name, kind in schema.items():
                values[name].append(_parse_cell(record[positions[name]], kind, r, name))
    if not values or not next(iter(values.values())):
        raise DataError(f"{path}: no data rows")
    columns = {
        name: np.array(v, dtype=object if schema[name] == "text" else np.float64)
        for name, v in values.items()
    }
    return RawTable(columns, str(path), sha256_file(path))


def load_arff(path, schema: dict, aliases: dict | None = None) -> RawTable:
    """Read an ARFF file (nominal attributes come back as text unless typed otherwise)."""
    from scipy.io import arff

    path = Path(path)
    data, meta = arff.loadarff(str(path))
    header = {n.lower(): n for n in meta.names()}
    columns = {}
    for name, kind in schema.items():
        src = next(
            (header[c.lower()] for c in [name, *(aliases or {}).get(name, ())] if c.lower() in header),
            None,
        )
        if src is None:
            raise DataError(f"{path}: missing column {name}")
        col = data[src]
        if col.dtype.kind == "S":
            col = np.array([c.decode() for c in col], dtype=object)
        if kind == "text":
            columns[name] = np.array([str(c) for c in col], dtype=object)
        else:
            columns[name] = np.array(
                [_parse_cell(str(c), kind, r, name) for r, c in enumerate(col, start=1)], dtype=np.float64
            )
    if not columns or len(next(iter(columns.values()))) == 0:
        raise DataError(f"{path}: no data rows")
    return RawTable(columns, str(path), sha256_file(path))


# --- recipes ---------------------------------------------------------------


def _meta(name, kind="numeric", standardize=None, **kw) -> FeatureMeta:
    if standardize is None:
        standardize = kind != "binary"
    return FeatureMeta(name, kind=kind, standardize=standardize, **kw)


def _finish(raw: RawTable, columns: dict, metas: list[FeatureMeta], y, recipe: str,
            monotone, pairs, meta_extra=None) -> tuple[Dataset, ModelSpec]:
    X = np.column_stack([columns[f.name] for f in metas]).astype(np.float64)
    lo, hi = X.min(axis=0), X.max(axis=0)
    metas = [dataclasses.replace(f, min=float(a), max=float(b)) for f, a, b in zip(metas, lo, hi)]
    meta = {"recipe": recipe, "prepared": True, "standardized": False,
            "source": raw.source, "sha256": raw.sha256, **(meta_extra or {})}  # fmt: skip
    data = Dataset(X, y, metas, "classification", meta)
    names = [f.name for f in metas]
    spec = ModelSpec(
        metas,
        "classification",
        [(names.index(a), d) for a, d in monotone],
        [(names.index(u), names.index(v)) for u, v in pairs],
    )
    return normalize_directions(data, spec)


def _reject_prepared(raw) -> RawTable:
    if isinstance(raw, Dataset):
        raise DataError("recipe applied to an already prepared dataset")
    if not isinstance(raw, RawTable):
        raise TypeError("recipes take a RawTable")
    return raw


def _label(col) -> np.ndarray:
    col = np.asarray(col)
    if col.dtype == object:
        col = np.array([_parse_cell(str(c), "binary", r, "y") for r, c in enumerate(col, start=2)])
    if not np.isin(col, (0.0, 1.0)).all():
        raise DataError("labels must be binary")
    return col.astype(np.float64)


def _codes(col, order=None, name="column") -> np.ndarray:
    """Map text categories to integers, by ``order`` when given, else sorted."""
    col = np.asarray(col, dtype=object)
    levels = list(order) if order is not None else sorted(set(col))
    index = {lvl: k for k, lvl in enumerate(levels)}
    unknown = sorted(set(col) - set(index))
    if unknown:
        raise DataError(f"{name}: unknown categorical code(s) {unknown}")
    return np.array([index[c] for c in col], dtype=np.float64)


COMPAS_SCHEMA = {"x1": "text", "x2": "text", "x3": "numeric", "x4": "numeric", "x5": "numeric",
                 "x6": "numeric", "x7": "text", "x8": "text", "x9": "numeric", "y": "binary"}  # fmt: skip
COMPAS_ALIASES = {
    "x1": ["race"], "x2": ["sex"], "x3": ["age"], "x4": ["juv_fel_count"],
    "x5": ["juv_misd_count"], "x6": ["priors_count"], "x7": ["charge_id", "c_charge_desc"],
    "x8": ["charge_degree", "c_charge_degree"], "x9": ["compas_decile_score", "decile_score"],
    "y": ["two_year_recid"],
}  # fmt: skip
COMPAS_JUVENILE_CAP = 3
FELONY_TOKENS = {"f", "fel", "felony", "1", "1.0", "(f1)", "(f2)", "(f3)", "(f6)", "(f7)"}
MISDEMEANOR_TOKENS = {"m", "misd", "misdemeanor", "0", "0.0", "(m1)", "(m2)", "(mo3)"}


def prepare_compas(raw: RawTable) -> tuple[Dataset, ModelSpec]:
    """Drop race, sex and the COMPAS score; cap juvenile counts at 3.

    Individually increasing: juvenile felonies, juvenile misdemeanors, prior
    charges, felony-degree indicator. Pairwise: juvenile felonies over
    juvenile misdemeanors. The two juvenile counts share one scale so their
    slopes stay comparable.
    """
    raw = _reject_prepared(raw)
    raw.require(["x3", "x4", "x5", "x6", "x7", "x8", "y"])
    cap = COMPAS_JUVENILE_CAP
    degree = []
    for r, tok in enumerate(raw["x8"], start=2):
        low = str(tok).strip().lower()
        if low in FELONY_TOKENS or low.startswith("f"):
            degree.append(1.0)
        elif low in MISDEMEANOR_TOKENS or low.startswith("m"):
            degree.append(0.0)
        else:
            raise DataError(f"row {r}, column 'x8': unknown charge degree {tok!r}")
    charge = raw["x7"]
    try:
        charge = np.array([float(c) for c in charge])
    except ValueError:
        charge = _codes(charge, name="x7")
    columns = {
        "age": raw["x3"].astype(float),
        "juv_felony": np.minimum(raw["x4"].astype(float), cap),
        "juv_misdemeanor": np.minimum(raw["x5"].astype(float), cap),
        "priors": raw["x6"].astype(float),
        "charge_id": charge,
        "felony_degree": np.array(degree),
    }
    metas = [
        _meta("age"),
        _meta("juv_felony", "ordinal", cap=cap, scale_group="juvenile"),
        _meta("juv_misdemeanor", "ordinal", cap=cap, scale_group="juvenile"),
        _meta("priors"),
        _meta("charge_id"),
        _meta("felony_degree", "binary"),
    ]
    truncated = {
        "juv_felony": int((raw["x4"] > cap).sum()),
        "juv_misdemeanor": int((raw["x5"] > cap).sum()),
    }
    inc = "increasing"
    return _finish(
        raw, columns, metas, _label(raw["y"]), "compas",
        [("juv_felony", inc), ("juv_misdemeanor", inc), ("priors", inc), ("felony_degree", inc)],
        [("juv_felony", "juv_misdemeanor")],
        {"truncated_cells": truncated, "dropped_columns": ["race", "sex", "compas_score"]},
    )  # fmt: skip


LAW_SCHEMA = {f"x{k}": "numeric" for k in range(1, 12)} | {"x9": "text", "x11": "text", "y": "binary"}
LAW_ALIASES = {
    "x1": ["decile1b", "decile1"], "x2": ["decile3"], "x3": ["lsat"], "x4": ["ugpa"],
    "x5": ["zfygpa", "fygpa"], "x6": ["zgpa", "cumgpa"], "x7": ["fulltime"], "x8": ["fam_inc"],
    "x9": ["male", "sex", "gender"], "x10": ["tier"], "x11": ["racetxt", "race"],
    "y": ["pass_bar", "bar_passed", "bar"],
}  # fmt: skip


def prepare_law(raw: RawTable) -> tuple[Dataset, ModelSpec]:
    """Drop race and sex; every grade feature increasing; recent over earlier.

    Year-1 and cumulative law-school GPA are put on a common scale by
    standardizing each on the training split; the two deciles already share
    one scale and are standardized jointly.
    """
    raw = _reject_prepared(raw)
    raw.require(["x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x10", "y"])
    names = ["decile_y1", "decile_y3", "lsat", "ugpa", "lgpa_y1", "lgpa_cum", "fulltime", "fam_inc", "tier"]
    src = ["x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x10"]
    columns = {n: raw[s].astype(float) for n, s in zip(names, src)}
    metas = [
        _meta("decile_y1", "ordinal", scale_group="decile"),
        _meta("decile_y3", "ordinal", scale_group="decile"),
        _meta("lsat"),
        _meta("ugpa"),
        _meta("lgpa_y1"),
        _meta("lgpa_cum"),
        _meta("fulltime"),
        _meta("fam_inc", "ordinal"),
        _meta("tier", "ordinal"),
    ]
    inc = "increasing"
    return _finish(
        raw, columns, metas, _label(raw["y"]), "law",
        [(n, inc) for n in names[:6]],
        [("decile_y3", "decile_y1"), ("lgpa_cum", "lgpa_y1")],
        {"dropped_columns": ["sex", "race"], "lgpa_scaling": "train-split standardization"},
    )  # fmt: skip


THORACIC_SCHEMA = {f"x{k}": "binary" for k in range(1, 17)} | {
    "x1": "text", "x2": "numeric", "x3": "numeric", "x4": "text", "x10": "text",
    "x16": "numeric", "y": "binary",
}  # fmt: skip
THORACIC_ALIASES = {
    "x1": ["DGN"], "x2": ["PRE4"], "x3": ["PRE5"], "x4": ["PRE6"], "x5": ["PRE7"], "x6": ["PRE8"],
    "x7": ["PRE9"], "x8": ["PRE10"], "x9": ["PRE11"], "x10": ["PRE14"], "x11": ["PRE17"],
    "x12": ["PRE19"], "x13": ["PRE25"], "x14": ["PRE30"], "x15": ["PRE32"], "x16": ["AGE"],
    "y": ["Risk1Yr"],
}  # fmt: skip
ZUBROD_ORDER = ("PRZ0", "PRZ1", "PRZ2")
TUMOR_ORDER = ("OC11", "OC12", "OC13", "OC14")
THORACIC_NAMES = ["diagnosis", "fvc", "fev1", "zubrod", "pain", "hemoptysis", "dyspnea", "cough",
                  "weakness", "tumor_size", "diabetes", "mi_6mo", "pad", "smoker", "asthma", "age"]  # fmt: skip


def prepare_thoracic(raw: RawTable) -> tuple[Dataset, ModelSpec]:
    """Booleans to {0,1}, Zubrod and tumor-size codes to ordered integers.

    Hemoptysis, dyspnea and cough are increasing; hemoptysis and dyspnea each
    dominate cough.
    """
    raw = _reject_prepared(raw)
    raw.require([f"x{k}" for k in range(1, 17)] + ["y"])
    columns = {}
    metas = []
    for k, name in enumerate(THORACIC_NAMES, start=1):
        col = raw[f"x{k}"]
        if k == 1:
            columns[name] = _codes(col, name="x1 (diagnosis)")
            metas.append(_meta(name))
        elif k == 4:
            columns[name] = _codes(col, ZUBROD_ORDER, name="x4 (Zubrod)")
            metas.append(_meta(name, "ordinal"))
        elif k == 10:
            columns[name] = _codes(col, TUMOR_ORDER, name="x10 (tumor size)") + 1.0
            metas.append(_meta(name, "ordinal"))
        elif k in (2, 3, 16):
            columns[name] = col.astype(float)
            metas.append(_meta(name))
        else:
            columns[name] = _label(col)
            metas.append(_meta(name, "binary"))
    inc = "increasing"
    return _finish(
        raw, columns, metas, _label(raw["y"]), "thoracic",
        [("hemoptysis", inc), ("dyspnea", inc), ("cough", inc)],
        [("hemoptysis", "cough"), ("dyspnea", "cough")],
    )  # fmt: skip


FICO_COLUMNS = [
    "ExternalRiskEstimate", "MSinceOldestTradeOpen", "MSinceMostRecentTradeOpen", "AverageMInFile",
    "NumSatisfactoryTrades", "NumTrades60Ever2DerogPubRec", "NumTrades90Ever2DerogPubRec",
    "PercentTradesNeverDelq", "MSinceMostRecentDelq", "MaxDelq2PublicRecLast12M", "MaxDelqEver",
    "NumTotalTrades", "NumTradesOpeninLast12M", "PercentInstallTrades", "MSinceMostRecentInqexcl7days",
    "NumInqLast6M", "NumInqLast6Mexcl7days", "NetFractionRevolvingBurden", "NetFractionInstallBurden",
    "NumRevolvingTradesWBalance", "NumInstallTradesWBalance", "NumBank2NatlTradesWHighUtilization",
    "PercentTradesWBalance",
]  # fmt: skip
FICO_SCHEMA = {f"x{k}": "numeric" for k in range(1, 24)} | {"y": "binary"}
FICO_ALIASES = {f"x{k}": [c] for k, c in enumerate(FICO_COLUMNS, start=1)} | {"y": ["RiskPerformance"]}
FICO_SENTINELS = (-9.0, -8.0, -7.0)

# Delinquency codes on a shared severity scale: -4 = 30 days, -3 = 60, -2 = 90,
# -1 = 120+ days delinquent, 0 = derogatory comment, -5 = never delinquent.
# Codes meaning unknown / other are treated as missing.
DELINQUENCY_LEVELS = (-4.0, -3.0, -2.0, -1.0, 0.0)
NEVER_DELINQUENT = -5.0
FICO_DELQ_12M = {0: 0.0, 1: -1.0, 2: -2.0, 3: -3.0, 4: -4.0, 7: NEVER_DELINQUENT}
FICO_DELQ_EVER = {2: 0.0, 3: -1.0, 4: -2.0, 5: -3.0, 6: -4.0, 8: NEVER_DELINQUENT}


def _recode(col: np.ndarray, table: dict) -> np.ndarray:
    out = np.full(col.shape, np.nan)
    for code, value in table.items():
        out[col == code] = value
    return out


def prepare_fico(raw: RawTable, missing: str = "impute") -> tuple[Dataset, ModelSpec]:
    """Recent and ever max-delinquency on one severity scale, recent dominating.

    Rows whose every feature is a sentinel (no credit record) are dropped.
    Remaining sentinel codes and unknown delinquency codes are median-imputed
    per column (``missing="impute"``) or their rows dropped (``"drop"``); the
    counts are recorded in ``Dataset.meta``.
    """
    raw = _reject_prepared(raw)
    raw.require([f"x{k}" for k in range(1, 24)] + ["y"])
    if missing not in ("impute", "drop"):
        raise ValueError("missing must be 'impute' or 'drop'")
    X = np.column_stack([raw[f"x{k}"].astype(float) for k in range(1, 24)])
    y = raw["y"]
    sentinel = np.isin(X, FICO_SENTINELS)
    no_record = sentinel.all(axis=1)
    X, y, sentinel = X[~no_record], np.asarray(y)[~no_record], sentinel[~no_record]
    X[sentinel] = np.nan
    X[:, 9] = _recode(X[:, 9], FICO_DELQ_12M)
    X[:, 10] = _recode(X[:, 10], FICO_DELQ_EVER)
    nan = np.isnan(X)
    imputed = {FICO_COLUMNS[j]: int(nan[:, j].sum()) for j in range(23) if nan[:, j].any()}
    if missing == "drop":
        keep = ~nan.any(axis=1)
        X, y = X[keep], y[keep]
    else:
        med = np.nanmedian(X, axis=0)
        X = np.where(nan, med, X)
    names = [f"x{k}_{c}" for k, c in enumerate(FICO_COLUMNS, start=1)]
    columns = {n: X[:, j] for j, n in enumerate(names)}
    metas = [_meta(n) for n in names]
    metas[9] = _meta(names[9], "ordinal", scale_group="delinquency")
    metas[10] = _meta(names[10], "ordinal", scale_group="delinquency")
    inc = "increasing"
    return _finish(
        RawTable(raw.columns, raw.source, raw.sha256), columns, metas, _label(y), "fico",
        [(names[9], inc), (names[10], inc)],
        [(names[9], names[10])],
        {"dropped_no_record_rows": int(no_record.sum()), "missing_policy": missing,
         "missing_cells": imputed},
    )  # fmt: skip


RECIPES = {
    "compas": (prepare_compas, COMPAS_SCHEMA, COMPAS_ALIASES),
    "law": (prepare_law, LAW_SCHEMA, LAW_ALIASES),
    "thoracic": (prepare_thoracic, THORACIC_SCHEMA, THORACIC_ALIASES),
    "fico": (prepare_fico, FICO_SCHEMA, FICO_ALIASES),
}


def load_raw(recipe: str, path) -> RawTable:
    if recipe not in RECIPES:
        raise DataError(f"unknown recipe {recipe!r}; choose from {sorted(RECIPES)}")
    _, schema, aliases = RECIPES[recipe]
    path = Path(path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    if path.suffix.lower() == ".arff":
        return load_arff(path, schema, aliases)
    if recipe == "fico":
        return _load_fico_csv(path)
    return load_csv(path, schema, aliases)


def _load_fico_csv(path) -> RawTable:
    # the public file labels outcomes "Bad"/"Good"
    table = load_csv(path, FICO_SCHEMA | {"y": "text"}, FICO_ALIASES)
    y = np.array(
        [1.0 if str(v).strip().lower() in ("bad", "1", "true", "t") else 0.0 for v in table["y"]]
    )
    bad = [v for v in table["y"] if str(v).strip().lower() not in ("bad", "good", "0", "1", "true", "false", "t", "f")]
    if bad:
        raise DataError(f"{path}: unrecognised outcome labels {sorted(set(bad))[:5]}")
    return RawTable(table.columns | {"y": y}, table.source, table.sha256)


def prepare(recipe: str, raw: RawTable) -> tuple[Dataset, ModelSpec]:
    if recipe not in RECIPES:
        raise DataError(f"unknown recipe {recipe!r}")
    return RECIPES[recipe][0](raw)


# --- normal form, splitting and standardization ------------------------------


def normalize_directions(data: Dataset, spec: ModelSpec) -> tuple[Dataset, ModelSpec]:
    """Negate every decreasing feature so that all constraints are increasing."""
    flip = [i for i, d in spec.monotone_features if d == "decreasing"]
    if not flip:
        return data, spec
    X = np.array(data.X)
    features = list(data.features)
    for i in flip:
        f = features[i]
        if f.negated:
            raise DataError(f"feature {f.name!r} is already negated")
        X[:, i] = -X[:, i]
        features[i] = dataclasses.replace(f, negated=True, min=-f.max, max=-f.min)
    mono = tuple((i, "increasing") for i, _ in spec.monotone_features)
    new_data = Dataset(X, data.y, features, data.task, dict(data.meta))
    new_spec = dataclasses.replace(spec, features=tuple(features), monotone_features=mono)
    return new_data, new_spec


def fit_standardization(data: Dataset) -> list[FeatureMeta]:
    """Mean/sd for every column flagged ``standardize``; scale groups are pooled."""
    features = list(data.features)
    groups: dict[str, list[int]] = {}
    for j, f in enumerate(features):
        if f.standardize:
            groups.setdefault(f.scale_group or f"__col{j}", []).append(j)
    for cols in groups.values():
        values = data.X[:, cols].ravel()
        mean = float(values.mean())
        sd = float(values.std())
        if not sd > 0:
            sd = 1.0
        for j in cols:
            features[j] = dataclasses.replace(features[j], shift=mean, scale=sd)
    return features


def _apply(data: Dataset, features: list[FeatureMeta], refit_range: bool) -> Dataset:
    X = np.column_stack(
        [(data.X[:, j] - f.shift) / f.scale for j, f in enumerate(features)]
    ) if data.n else np.empty((0, len(features)))
    if refit_range and data.n:
        features = [
            dataclasses.replace(f, min=float(X[:, j].min()), max=float(X[:, j].max()))
            for j, f in enumerate(features)
        ]
    meta = dict(data.meta) | {"standardized": True}
    return Dataset(X, data.y, features, data.task, meta)


def split(data: Dataset, ratio: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded split; standardization is fit on the training rows only.

    Both outputs carry the fitted transforms and the training rows' observed
    model-space ranges.
    """
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie strictly between 0 and 1")
    if data.n < 2:
        raise ValueError("need at least two rows to split")
    if data.meta.get("standardized"):
        raise DataError("dataset is already standardized; split the prepared data instead")
    perm = np.random.default_rng(seed).permutation(data.n)
    k = int(np.floor(ratio * data.n))
    k = min(max(k, 1), data.n - 1)
    train_raw, test_raw = data.subset(np.sort(perm[:k])), data.subset(np.sort(perm[k:]))
    features = fit_standardization(train_raw)
    train = _apply(train_raw, features, refit_range=True)
    test = _apply(test_raw, list(train.features), refit_range=False)
    return train, test


# --- prepared-data cache -----------------------------------------------------


def save_prepared(data: Dataset, spec: ModelSpec, path) -> tuple[Path, Path]:
    """Write ``<path>.csv`` and a ``<path>.json`` sidecar with transforms and spec."""
    path = Path(path)
    csv_path, json_path = path.with_suffix(".csv"), path.with_suffix(".json")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(data.names + ["y"])
        for row, label in zip(data.X, data.y):
            w.writerow([repr(float(v)) for v in row] + [repr(float(label))])
    sidecar = {
        "features": [f.to_dict() for f in data.features],
        "task": data.task,
        "meta": data.meta,
        "spec": spec.to_dict(),
        "csv_sha256": sha256_file(csv_path),
    }
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def load_prepared(path) -> tuple[Dataset, ModelSpec]:
    path = Path(path)
    sidecar = json.loads(path.with_suffix(".json").read_text())
    features = [FeatureMeta.from_dict(f) for f in sidecar["features"]]
    schema = {f.name: "numeric" for f in features} | {"y": "numeric"}
    table = load_csv(path.with_suffix(".csv"), schema)
    if table.sha256 != sidecar["csv_sha256"]:
        warnings.warn(f"{path.with_suffix('.csv')} does not match its recorded checksum", stacklevel=2)
    X = np.column_stack([table[f.name] for f in features])
    data = Dataset(X, table["y"], features, sidecar["task"], sidecar["meta"])
    return data, ModelSpec.from_dict(sidecar["spec"])


# --- synthetic stand-ins -----------------------------------------------------


def synthetic_raw(recipe: str, n: int = 1000, seed: int = 0) -> RawTable:
    """Random table with the recipe's raw schema, for running pipelines without the real files.

    Labels come from a logistic model that increases in every constrained
    feature, with the dominated feature of each pair weighted less.
    """
    rng = np.random.default_rng(seed)
    cols: dict = {}

    def logistic_labels(score):
        p = 1.0 / (1.0 + np.exp(-(score - np.median(score))))
        return (rng.uniform(size=n) < p).astype(float)

    if recipe == "compas":
        cols["x1"] = rng.choice(np.array(["African-American", "Caucasian", "Hispanic", "Other"], dtype=object), n)
        cols["x2"] = rng.choice(np.array(["Male", "Female"], dtype=object), n)
        cols["x3"] = rng.integers(18, 70, n).astype(float)
        cols["x4"] = rng.poisson(0.15, n).astype(float)
        cols["x5"] = rng.poisson(0.2, n).astype(float)
        cols["x6"] = rng.poisson(3.0, n).astype(float)
        cols["x7"] = rng.integers(1, 50, n).astype(float).astype(object)
        cols["x8"] = rng.choice(np.array(["F", "M"], dtype=object), n)
        cols["x9"] = rng.integers(1, 11, n).astype(float)
        score = (0.8 * np.minimum(cols["x4"], 3) + 0.5 * np.minimum(cols["x5"], 3)
                 + 0.15 * cols["x6"] - 0.04 * cols["x3"] + 0.3 * (cols["x8"] == "F"))  # fmt: skip
        cols["y"] = logistic_labels(score)
    elif recipe == "law":
        for k in (1, 2):
            cols[f"x{k}"] = rng.integers(1, 11, n).astype(float)
        cols["x3"] = rng.normal(36, 5, n).round()
        cols["x4"] = rng.normal(3.2, 0.4, n).round(1)
        cols["x5"] = rng.normal(0, 1, n)
        cols["x6"] = 0.7 * cols["x5"] + rng.normal(0, 0.7, n)
        cols["x7"] = rng.integers(1, 3, n).astype(float)
        cols["x8"] = rng.integers(1, 6, n).astype(float)
        cols["x9"] = rng.choice(np.array(["0", "1"], dtype=object), n)
        cols["x10"] = rng.integers(1, 7, n).astype(float)
        cols["x11"] = rng.choice(np.array(["White", "Black", "Asian", "Hisp"], dtype=object), n)
        score = (0.1 * cols["x1"] + 0.2 * cols["x2"] + 0.08 * cols["x3"] + 0.5 * cols["x4"]
                 + 0.3 * cols["x5"] + 0.8 * cols["x6"])  # fmt: skip
        cols["y"] = logistic_labels(2 * score)
    elif recipe == "thoracic":
        cols["x1"] = rng.choice(np.array(["DGN2", "DGN3", "DGN4", "DGN5"], dtype=object), n)
        cols["x2"] = rng.normal(3.3, 0.8, n)
        cols["x3"] = rng.normal(2.5, 0.7, n)
        cols["x4"] = rng.choice(np.array(ZUBROD_ORDER, dtype=object), n, p=[0.3, 0.6, 0.1])
        for k in (5, 6, 7, 8, 9, 11, 12, 13, 14, 15):
            cols[f"x{k}"] = rng.choice(np.array(["T", "F"], dtype=object), n, p=[0.2, 0.8])
        cols["x10"] = rng.choice(np.array(TUMOR_ORDER, dtype=object), n, p=[0.4, 0.4, 0.15, 0.05])
        cols["x16"] = rng.integers(40, 85, n).astype(float)
        t = {k: (cols[f"x{k}"] == "T").astype(float) for k in (6, 7, 8)}
        score = 1.0 * t[6] + 0.9 * t[7] + 0.4 * t[8] + 0.02 * cols["x16"] - 0.3 * cols["x2"]
        cols["y"] = logistic_labels(score - 1.5)
        cols["y"] = np.where(cols["y"] == 1, "T", "F").astype(object)
    elif recipe == "fico":
        for k in range(1, 24):
            cols[f"x{k}"] = rng.integers(0, 100, n).astype(float)
        cols["x10"] = rng.choice([0, 1, 2, 3, 4, 5, 6, 7, 9], n).astype(float)
        cols["x11"] = rng.choice([2, 3, 4, 5, 6, 7, 8, 9], n).astype(float)
        cols["x9"][rng.uniform(size=n) < 0.3] = -7.0
        cols["x1"][rng.uniform(size=n) < 0.02] = -8.0
        none = rng.uniform(size=n) < 0.03
        for k in range(1, 24):
            cols[f"x{k}"][none] = -9.0
        sev12 = np.nan_to_num(_recode(cols["x10"], FICO_DELQ_12M), nan=-5)
        sev = np.nan_to_num(_recode(cols["x11"], FICO_DELQ_EVER), nan=-5)
        score = 0.5 * sev12 + 0.25 * sev - 0.03 * cols["x1"]
        cols["y"] = logistic_labels(score)
    else:
        raise DataError(f"unknown recipe {recipe!r}")
    columns = {}
    for k, v in cols.items():
        v = np.asarray(v)
        columns[k] = v if v.dtype == object else v.astype(np.float64)
    return RawTable(columns, source=f"synthetic:{recipe}:{n}:{seed}")


def write_raw_csv(table: RawTable, path) -> Path:
    path = Path(path)
    names = list(table.columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for r in range(table.n_rows):
            w.writerow([_fmt(table.columns[c][r]) for c in names])
    return path


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if not float(v).is_integer() else str(int(v))
    return str(v)
