"""Declarative end-to-end experiments and their result records."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .attackfeat import Defense, FeatureMethod
from .attackmodel import infer_baseline_batch, infer_batch, train_attack, train_baseline
from .data import encode, load_csv, load_prepared, split_disjoint
from .errors import ConfigError, DataError
from .learners import HyperParams, ModelKind, overfitting_level
from .metrics import EvalRecord, MetricsReport, auc, evaluate
from .parallel import derive_seed
from .shadowfarm import (FarmConfig, UnlearnMethod, build_farm, case_arrays,
                         negative_cases, positive_cases)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

PROFILES = {
    "desk": dict(n_originals=5, samples_per_original=1000, n_unlearned_per_original=20),
    "paper": dict(n_originals=20, samples_per_original=5000, n_unlearned_per_original=100),
}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatasetSpec(_Strict):
    path: str
    label_column: str
    categorical_columns: list[str] = []
    drop_columns: list[str] = []


class SplitSpec(_Strict):
    target_fraction: float = Field(0.5, gt=0, lt=1)
    positive_fraction: float = Field(0.8, gt=0, lt=1)


class UnlearnSpec(_Strict):
    method: Literal["scratch", "sisa"] = "scratch"
    k: int = Field(1, ge=1)


class FarmSpec(_Strict):
    n_originals: Optional[int] = None
    samples_per_original: Optional[int] = None
    n_unlearned_per_original: Optional[int] = None
    group_size: int = 1
    unlearning: UnlearnSpec = UnlearnSpec()
    model_kind: str = "DT"
    params: dict = {}
    seed: Optional[int] = Field(None, ge=0)


class DefenseSpec(_Strict):
    kind: Literal["none", "topk", "label"] = "none"
    k: int = 0


class ExperimentConfig(_Strict):
    name: str = "experiment"
    dataset: DatasetSpec
    shadow_dataset: Optional[DatasetSpec] = None
    split: SplitSpec = SplitSpec()
    seed: int = Field(0, ge=0)
    profile: Literal["desk", "paper"] = "desk"
    target: FarmSpec = FarmSpec()
    shadow: FarmSpec = FarmSpec()
    attack_kinds: list[str] = ["RF"]
    feature_methods: list[str] = ["SortedDiff"]
    attack_params: dict = {}
    defense: DefenseSpec = DefenseSpec()
    baseline_max_members: Optional[int] = Field(None, ge=1)
    output_dir: Optional[str] = None

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_json(text)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.model_validate_json(text)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from None

    def farm_config(self, side: Literal["target", "shadow"]) -> FarmConfig:
        spec: FarmSpec = getattr(self, side)
        sizes = dict(PROFILES[self.profile])
        for name in sizes:
            if getattr(spec, name) is not None:
                sizes[name] = getattr(spec, name)
        seed = spec.seed if spec.seed is not None else derive_seed(self.seed, side, "farm")
        try:
            return FarmConfig(
                group_size=spec.group_size,
                unlearn_method=UnlearnMethod(spec.unlearning.method, spec.unlearning.k),
                model_kind=ModelKind.parse(spec.model_kind),
                params=HyperParams(**spec.params), seed=seed, **sizes)
        except TypeError as exc:
            raise ConfigError(f"{side}.params: {exc}") from None

    def attack_grid(self) -> tuple[list[ModelKind], list[FeatureMethod]]:
        return ([ModelKind.parse(k) for k in self.attack_kinds],
                [FeatureMethod.parse(m) for m in self.feature_methods])

    def attack_hyperparams(self) -> HyperParams:
        try:
            return HyperParams(**self.attack_params)
        except TypeError as exc:
            raise ConfigError(f"attack_params: {exc}") from None

    def defense_value(self) -> Defense:
        return Defense(self.defense.kind, self.defense.k)

    def validate_all(self) -> None:
        """Surface every config error before any expensive work starts."""
        self.farm_config("target")
        self.farm_config("shadow")
        self.attack_grid()
        self.attack_hyperparams()
        self.defense_value()


@dataclass
class GridEntry:
    target_kind: str
    attack_kind: str
    feature_method: str
    defense: str
    unlearning: str
    group_size: int
    metrics: MetricsReport
    per_original: list[dict] = field(default_factory=list)


@dataclass
class ResultRecord:
    config: dict
    grid: list[GridEntry]
    overfitting: dict
    timings: dict
    case_counts: dict
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "grid": [asdict(g) for g in self.grid],
            "overfitting": self.overfitting,
            "case_counts": self.case_counts,
            "timings": self.timings,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResultRecord":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported result schema {d.get('schema_version')!r}")
        grid = [GridEntry(**{**g, "metrics": MetricsReport(**g["metrics"])})
                for g in d["grid"]]
        return cls(d["config"], grid, d["overfitting"], d["timings"], d["case_counts"],
                   d["schema_version"])

    def without_timings(self) -> dict:
        d = self.to_dict()
        d.pop("timings")
        return d

    def entry(self, attack_kind: str, feature_method: str) -> GridEntry:
        for g in self.grid:
            if g.attack_kind == attack_kind and g.feature_method == feature_method:
                return g
        raise KeyError((attack_kind, feature_method))


def _load_dataset(spec: DatasetSpec):
    """Returns the encoded dataset and any splits persisted by ``prepare``."""
    if spec.path.endswith(".npz"):
        return load_prepared(spec.path)
    raw = load_csv(spec.path, spec.label_column, spec.categorical_columns,
                   spec.drop_columns)
    cats = [c for c in spec.categorical_columns if c not in spec.drop_columns]
    return encode(raw, spec.label_column, cats), {}


def prepare_splits(config: ExperimentConfig):
    """Encode the dataset(s) and cut the four disjoint pools.

    Returns ``{"target_pos", "target_neg", "shadow_pos", "shadow_neg"}``.
    """
    ds, stored = _load_dataset(config.dataset)
    names = ("target_pos", "target_neg", "shadow_pos", "shadow_neg")
    if all(n in stored for n in names) and config.shadow_dataset is None:
        return {n: stored[n] for n in names}
    pos = config.split.positive_fraction
    seed = config.seed
    if config.shadow_dataset is None:
        target, shadow = split_disjoint(
            ds, [config.split.target_fraction, 1 - config.split.target_fraction],
            derive_seed(seed, "split"))
    else:
        sds, _ = _load_dataset(config.shadow_dataset)
        if sds.num_classes != ds.num_classes:
            raise DataError(f"shadow dataset has {sds.num_classes} classes, "
                            f"target has {ds.num_classes}")
        target, shadow = ds.full(), sds.full()
    tp, tn = split_disjoint(target, [pos, 1 - pos], derive_seed(seed, "split", "target"))
    sp, sn = split_disjoint(shadow, [pos, 1 - pos], derive_seed(seed, "split", "shadow"))
    return dict(target_pos=tp, target_neg=tn, shadow_pos=sp, shadow_neg=sn)


def _per_original(cases, pu, pm, b):
    out = []
    origin = np.array([c.origin[0] for c in cases])
    for i in np.unique(origin):
        rows = origin == i
        both = 0 < b[rows].sum() < rows.sum()
        out.append({
            "original": int(i),
            "n": int(rows.sum()),
            "auc_ours": auc(pu[rows], b[rows]) if both else None,
            "auc_baseline": auc(pm[rows], b[rows]) if both else None,
        })
    return out


def run_experiment(config: ExperimentConfig, workers: int = 1, cache_dir=None) -> ResultRecord:
    """Split, build both farms, train attack and baseline, score the target side."""
    config.validate_all()
    timings = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = now - clock
        clock = now

    pools = prepare_splits(config)
    lap("prepare")
    shadow_cfg, target_cfg = config.farm_config("shadow"), config.farm_config("target")
    shadow = build_farm(pools["shadow_pos"], shadow_cfg, workers, cache_dir)
    lap("shadow_farm")
    target = build_farm(pools["target_pos"], target_cfg, workers, cache_dir)
    lap("target_farm")
    if shadow.num_classes != target.num_classes:
        raise DataError("shadow and target farms disagree on the class count")

    s_pos = positive_cases(shadow)
    s_cases = s_pos + negative_cases(shadow, pools["shadow_neg"], len(s_pos),
                                     derive_seed(config.seed, "shadow", "negatives"))
    t_pos = positive_cases(target)
    t_cases = t_pos + negative_cases(target, pools["target_neg"], len(t_pos),
                                     derive_seed(config.seed, "target", "negatives"))
    Po, Pu, b = case_arrays(t_cases)
    lap("cases")

    kinds, methods = config.attack_grid()
    params, defense = config.attack_hyperparams(), config.defense_value()
    grid = []
    for kind in kinds:
        baseline = train_baseline(shadow, pools["shadow_neg"], kind, params,
                                  derive_seed(config.seed, "baseline", kind.value),
                                  defense, config.baseline_max_members)
        pm = infer_baseline_batch(baseline, Po)
        for method in methods:
            attack = train_attack(s_cases, method, defense, kind, params,
                                  derive_seed(config.seed, "attack", kind.value, method.value))
            pu = infer_batch(attack, Po, Pu)
            records = [EvalRecord(bool(x), float(u), float(m)) for x, u, m in zip(b, pu, pm)]
            report = evaluate(records)
            log.info("%s/%s: %s", kind.value, method.value, report)
            grid.append(GridEntry(
                target_cfg.model_kind.value, kind.value, method.value, defense.label(),
                target_cfg.unlearn_method.label(), target_cfg.group_size, report,
                _per_original(t_cases, pu, pm, b)))
    lap("attack")

    def levels(farm, neg_pool):
        return [overfitting_level(e.model, e.train_set, neg_pool) for e in farm.originals]

    overfitting = {"target": levels(target, pools["target_neg"]),
                   "shadow": levels(shadow, pools["shadow_neg"])}
    lap("overfitting")
    return ResultRecord(
        config=json.loads(config.model_dump_json()),
        grid=grid,
        overfitting=overfitting,
        timings=timings,
        case_counts={"shadow": len(s_cases), "target": len(t_cases)},
    )


CSV_FIELDS = ["target_kind", "attack_kind", "feature_method", "defense", "unlearning",
              "group_size", "auc_ours", "auc_baseline", "deg_count", "deg_rate", "n"]


def render(record: ResultRecord, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(record.to_dict(), indent=2) + "\n"
    if fmt != "csv":
        raise ConfigError(f"unknown report format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for g in record.grid:
        m = g.metrics
        writer.writerow([g.target_kind, g.attack_kind, g.feature_method, g.defense,
                         g.unlearning, g.group_size, m.auc_ours, m.auc_baseline,
                         m.deg_count, m.deg_rate, m.n])
    return buf.getvalue()


def report(record: ResultRecord, fmt: str, path) -> Path:
    """Write ``record`` to ``path`` as JSON or one CSV row per grid cell."""
    text = render(record, fmt)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from None
    return path


def load_result(path) -> ResultRecord:
    try:
        return ResultRecord.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"cannot read result {path}: {exc}") from None
