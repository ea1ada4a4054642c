"""CSV datasets, JSON configuration and JSON reports."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from .data import CausalLabeledSet, CausalUnlabeledSet, LabeledSet, RunConfig, UnlabeledSet
from .nuisance import LearnerSpec


class DataError(ValueError):
    """A dataset file is malformed or inconsistent."""


class ConfigError(ValueError):
    """A configuration value is unknown or out of range."""


# ----------------------------------------------------------------- datasets


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_table(path, leading: tuple = ()) -> tuple:
    """Parse a headed numeric CSV into ``(header, values)``.

    ``leading`` names the columns that must open the header (case-insensitive).
    Line numbers in error messages are 1-based and count the header.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror})") from exc
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path}: empty file, missing header")
    header = [c.strip() for c in rows[0]]
    if all(_is_number(c) for c in header):
        raise DataError(f"{path}: missing header (line 1 is numeric)")
    if len(header) < len(leading) + 1:
        raise DataError(f"{path}: header has {len(header)} columns, need {len(leading)} leading plus covariates")
    for j, name in enumerate(leading):
        if header[j].lower() != name:
            raise DataError(f"{path}: line 1, column {j + 1}: expected {name!r}, found {header[j]!r}")
    width = len(header)
    values = np.empty((len(rows) - 1, width))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise DataError(f"{path}: line {i}: expected {width} fields, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: line {i}, column {j + 1}: non-numeric value {cell!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{path}: line {i}, column {j + 1}: non-finite value {cell!r}")
            values[i - 2, j] = v
    return header, values


def _binary_column(values, path, col: int) -> np.ndarray:
    d = values[:, col]
    bad = np.flatnonzero((d != 0) & (d != 1))
    if bad.size:
        raise DataError(f"{path}: line {bad[0] + 2}, column {col + 1}: treatment must be 0 or 1")
    return d


def _build(factory, path, *args):
    try:
        return factory(*args)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def load_labeled(path) -> LabeledSet:
    _, v = read_table(path, ("y",))
    return _build(LabeledSet, path, v[:, 0], v[:, 1:])


def load_unlabeled(path) -> UnlabeledSet:
    _, v = read_table(path)
    return _build(UnlabeledSet, path, v)


def load_causal_labeled(path) -> CausalLabeledSet:
    _, v = read_table(path, ("y", "d"))
    return _build(CausalLabeledSet, path, v[:, 0], _binary_column(v, path, 1), v[:, 2:])


def load_causal_unlabeled(path) -> CausalUnlabeledSet:
    _, v = read_table(path, ("d",))
    return _build(CausalUnlabeledSet, path, _binary_column(v, path, 0), v[:, 1:])


def check_columns(labeled, unlabeled, labeled_path="labeled", unlabeled_path="unlabeled"):
    if labeled.p != unlabeled.p:
        raise DataError(
            f"{labeled_path} has {labeled.p - 1} covariate columns but {unlabeled_path} has {unlabeled.p - 1}"
        )


def fmt(v: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(v), ".17g")


def write_table(path, header, columns) -> None:
    body = np.column_stack(columns) if columns else np.empty((0, 0))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in body:
            w.writerow([fmt(x) for x in row])


def _xnames(q: int) -> list:
    return [f"x{j}" for j in range(1, q + 1)]


def write_labeled(path, data: LabeledSet) -> None:
    X = data.covariates
    write_table(path, ["y", *_xnames(X.shape[1])], [data.responses, *X.T])


def write_unlabeled(path, data: UnlabeledSet) -> None:
    X = data.covariates
    write_table(path, _xnames(X.shape[1]), list(X.T))


def write_causal_labeled(path, data: CausalLabeledSet) -> None:
    X = data.covariates
    write_table(path, ["y", "d", *_xnames(X.shape[1])], [data.responses, data.treatments, *X.T])


def write_causal_unlabeled(path, data: CausalUnlabeledSet) -> None:
    X = data.covariates
    write_table(path, ["d", *_xnames(X.shape[1])], [data.treatments, *X.T])


# ------------------------------------------------------------------- config

_TOP_KEYS = {"k", "t_partitions", "alpha", "seed", "learner", "trim", "propensity"}
_LEARNER_KEYS = {"variant", "lambda", "cv_folds", "tolerance", "max_iters"}


def _learner_from(obj, where: str, default: LearnerSpec) -> LearnerSpec:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(obj) - _LEARNER_KEYS
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    kw = {}
    if "variant" in obj:
        kw["variant"] = obj["variant"]
    if "lambda" in obj:
        lam = obj["lambda"]
        if isinstance(lam, bool) or not isinstance(lam, (int, float, str)):
            raise ConfigError(f"{where}.lambda: expected a number, 'cv' or 'auto'")
        kw["lam"] = float(lam) if not isinstance(lam, str) else lam
    for key in ("cv_folds", "max_iters"):
        if key in obj:
            if isinstance(obj[key], bool) or not isinstance(obj[key], int):
                raise ConfigError(f"{where}.{key}: expected an integer")
            kw[key] = obj[key]
    if "tolerance" in obj:
        if isinstance(obj["tolerance"], bool) or not isinstance(obj["tolerance"], (int, float)):
            raise ConfigError(f"{where}.tolerance: expected a number")
        kw["tolerance"] = float(obj["tolerance"])
    try:
        return replace(default, **kw)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _int_field(cfg, key):
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    return v


DEFAULT_PROPENSITY = LearnerSpec("lasso", "cv")


def config_from_dict(cfg: dict) -> RunConfig:
    if not isinstance(cfg, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration key(s) {sorted(unknown)}")
    kw = {}
    if "k" in cfg:
        kw["K"] = _int_field(cfg, "k")
        if kw["K"] < 1:
            raise ConfigError("k: must be a positive integer")
    if "t_partitions" in cfg:
        kw["partitions"] = _int_field(cfg, "t_partitions")
        if kw["partitions"] < 1:
            raise ConfigError("t_partitions: must be a positive integer")
    if "seed" in cfg:
        kw["seed"] = _int_field(cfg, "seed")
        if not 0 <= kw["seed"] < 2**64:
            raise ConfigError("seed: must be an unsigned 64-bit integer")
    if "alpha" in cfg:
        a = cfg["alpha"]
        if isinstance(a, bool) or not isinstance(a, (int, float)) or not 0 < a < 1:
            raise ConfigError(f"alpha: must lie in (0, 1), got {a!r}")
        kw["alpha"] = float(a)
    if "trim" in cfg:
        t = cfg["trim"]
        if not (isinstance(t, list) and len(t) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in t)):
            raise ConfigError("trim: expected [lower, upper]")
        if not all(0 < x < 1 for x in t):
            raise ConfigError("trim: bounds must lie in (0, 1)")
        if t[0] >= t[1]:
            raise ConfigError("trim lower >= upper")
        kw["trim"] = (float(t[0]), float(t[1]))
    kw["learner"] = _learner_from(cfg.get("learner", {}), "learner", LearnerSpec())
    kw["propensity"] = _learner_from(cfg.get("propensity", {}), "propensity", DEFAULT_PROPENSITY)
    try:
        return RunConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, overrides: Optional[dict] = None) -> RunConfig:
    """Read a JSON run configuration; ``overrides`` (same keys) win over the file.

    A missing path or an empty file gives the defaults.
    """
    cfg = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
        if text.strip():
            try:
                cfg = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc
            if not isinstance(cfg, dict):
                raise ConfigError(f"{path}: configuration must be a JSON object")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in ("learner", "propensity"):
            merged = dict(cfg.get(key, {}))
            merged.update(value)
            cfg[key] = merged
        else:
            cfg[key] = value
    return config_from_dict(cfg)


# ------------------------------------------------------------------ reports


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps_report(report: dict) -> str:
    """Deterministic JSON: sorted keys, non-finite numbers as null."""
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def write_report(report: dict, path=None) -> str:
    text = dumps_report(report)
    if path is not None:
        Path(path).write_text(text)
    return text
