"""Populations of original/unlearned model pairs and the cases they emit.

The same machinery builds the adversary's shadow farm (attack training
data) and the target farm (evaluation data).
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .data import EncodedDataset, SubsetHandle, sample_subsets
from .errors import ConfigError, DataError
from .learners import HyperParams, ModelKind, deserialize, serialize, train
from .parallel import DatasetPool, derive_seed
from .unlearn import (DeletionRequest, SisaModel, deserialize_sisa, serialize_sisa,
                      sisa_train, sisa_unlearn)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class UnlearnMethod:
    name: str = "scratch"
    k: int = 1

    def __post_init__(self):
        if self.name not in ("scratch", "sisa"):
            raise ConfigError(f"unknown unlearning method {self.name!r}")
        if self.k < 1:
            raise ConfigError("SISA needs k >= 1")

    def label(self) -> str:
        return "Scratch" if self.name == "scratch" else f"SISA(k={self.k})"


@dataclass(frozen=True)
class FarmConfig:
    n_originals: int = 20
    samples_per_original: int = 5000
    n_unlearned_per_original: int = 100
    group_size: int = 1
    unlearn_method: UnlearnMethod = field(default_factory=UnlearnMethod)
    model_kind: ModelKind = ModelKind.DT
    params: HyperParams = field(default_factory=HyperParams)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model_kind", ModelKind.parse(self.model_kind))
        for name in ("n_originals", "samples_per_original",
                     "n_unlearned_per_original", "group_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.group_size * self.n_unlearned_per_original > self.samples_per_original:
            raise ConfigError(
                f"{self.n_unlearned_per_original} requests of {self.group_size} samples "
                f"do not fit in {self.samples_per_original} training samples")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model_kind"] = self.model_kind.value
        return d


@dataclass(frozen=True, eq=False)
class OriginalEntry:
    train_set: SubsetHandle
    model: object                       # TrainedClassifier or SisaModel
    seed: int
    requests: tuple[DeletionRequest, ...]
    unlearned: tuple[object, ...]
    unlearned_sets: tuple[SubsetHandle, ...]


@dataclass(frozen=True, eq=False)
class Farm:
    config: FarmConfig
    originals: tuple[OriginalEntry, ...]

    @property
    def num_classes(self) -> int:
        return self.originals[0].model.num_classes

    @property
    def n_unlearned(self) -> int:
        return sum(len(o.unlearned) for o in self.originals)


@dataclass(frozen=True)
class CasePair:
    posterior_original: np.ndarray
    posterior_unlearned: np.ndarray
    is_positive: bool
    sample_true_label: int
    origin: tuple[int, int]
    sample_index: int

    def __post_init__(self):
        if np.shape(self.posterior_original) != np.shape(self.posterior_unlearned):
            raise ValueError("case posteriors differ in length")


# --- worker tasks: fn(dataset, *args), module level so they pickle ---------

def _task_train(ds, kind, params, indices, seed):
    return train(kind, params, SubsetHandle(ds, indices), seed)


def _task_sisa_train(ds, kind, params, indices, k, seed):
    m = sisa_train(SubsetHandle(ds, indices), k, kind, params, seed)
    return [s.indices for s in m.shards], m.sub_models


def _task_sisa_unlearn(ds, kind, params, k, seed, shard_indices, sub_models, request):
    m = SisaModel(tuple(SubsetHandle(ds, s) for s in shard_indices), tuple(sub_models),
                  k, ModelKind.parse(kind), params, seed)
    u = sisa_unlearn(m, request)
    # only retrained shards travel back; the caller keeps the rest by reference
    return [(i, u.shards[i].indices, u.sub_models[i])
            for i in range(k) if u.sub_models[i] is not m.sub_models[i]]


def _sisa_from(ds, shard_indices, sub_models, config, seed):
    return SisaModel(tuple(SubsetHandle(ds, s) for s in shard_indices), tuple(sub_models),
                     config.unlearn_method.k, config.model_kind, config.params, seed)


def _sisa_patch(original: SisaModel, changed) -> SisaModel:
    shards, subs = list(original.shards), list(original.sub_models)
    for i, indices, model in changed:
        shards[i] = SubsetHandle(original.shards[i].parent, indices)
        subs[i] = model
    return SisaModel(tuple(shards), tuple(subs), original.k, original.kind,
                     original.params, original.base_seed)


def _draw_requests(train_set: SubsetHandle, config: FarmConfig, seed: int):
    rng = np.random.default_rng(seed)
    n = config.n_unlearned_per_original * config.group_size
    chosen = rng.choice(np.sort(train_set.indices), size=n, replace=False)
    return tuple(DeletionRequest(tuple(g.tolist()))
                 for g in chosen.reshape(config.n_unlearned_per_original, config.group_size))


def build_farm(positive_pool: SubsetHandle, config: FarmConfig, workers: int = 1,
               cache_dir=None) -> Farm:
    """Train the originals of ``config`` and every unlearned variant.

    Original ``i`` trains with seed ``derive_seed(config.seed, i)``; its
    unlearned models reuse that seed so they differ only by the deletion.
    """
    if len(positive_pool) < config.samples_per_original:
        raise DataError(f"pool of {len(positive_pool)} is smaller than "
                        f"{config.samples_per_original} samples per original")
    cache = None
    if cache_dir is not None:
        cache = _FarmCache(Path(cache_dir), positive_pool, config)
        farm = cache.load()
        if farm is not None:
            log.info("farm cache hit %s", cache.path)
            return farm

    ds = positive_pool.parent
    subsets = sample_subsets(positive_pool, config.n_originals,
                             config.samples_per_original,
                             derive_seed(config.seed, "subsets"))
    seeds = [derive_seed(config.seed, i) for i in range(config.n_originals)]
    requests = [_draw_requests(s, config, derive_seed(config.seed, i, "requests"))
                for i, s in enumerate(subsets)]
    kind, params, method = config.model_kind, config.params, config.unlearn_method
    remainders = [tuple(s.without(r.indices) for r in reqs)
                  for s, reqs in zip(subsets, requests)]

    with DatasetPool(ds, workers) as pool:
        if method.name == "scratch":
            jobs = [(kind, params, s.indices, seed) for s, seed in zip(subsets, seeds)]
            for rems, seed in zip(remainders, seeds):
                jobs.extend((kind, params, r.indices, seed) for r in rems)
            fitted = pool.map(_task_train, jobs)
            originals = fitted[:config.n_originals]
            rest = iter(fitted[config.n_originals:])
            unlearned = [tuple(next(rest) for _ in reqs) for reqs in requests]
        else:
            raw = pool.map(_task_sisa_train,
                           [(kind, params, s.indices, method.k, seed)
                            for s, seed in zip(subsets, seeds)])
            originals = [_sisa_from(ds, sh, subs, config, seed)
                         for (sh, subs), seed in zip(raw, seeds)]
            jobs = [(kind, params, method.k, seed, sh, subs, r)
                    for (sh, subs), seed, reqs in zip(raw, seeds, requests) for r in reqs]
            out = iter(pool.map(_task_sisa_unlearn, jobs))
            unlearned = [tuple(_sisa_patch(orig, next(out)) for _ in reqs)
                         for orig, reqs in zip(originals, requests)]

    farm = Farm(config, tuple(
        OriginalEntry(s, m, seed, reqs, unl, rems)
        for s, m, seed, reqs, unl, rems
        in zip(subsets, originals, seeds, requests, unlearned, remainders)))
    if cache is not None:
        cache.save(farm)
    return farm


def _require(ok, message):
    if not ok:
        raise AssertionError(message)


def audit_farm(farm: Farm, negative_pool: SubsetHandle | None = None) -> None:
    """Check the deletion bookkeeping; raise ``AssertionError`` on any breach."""
    for i, entry in enumerate(farm.originals):
        members = entry.train_set.index_set()
        seen: set[int] = set()
        for j, (req, unl, rem) in enumerate(zip(entry.requests, entry.unlearned,
                                                entry.unlearned_sets)):
            got = set(req.indices)
            _require(got <= members, f"request {i}/{j} leaves the training set")
            _require(not got & seen, f"request {i}/{j} overlaps an earlier request")
            seen |= got
            _require(rem.index_set() == members - got, f"unlearned set {i}/{j} is wrong")
            if isinstance(unl, SisaModel):
                trained = set(unl.training_indices().tolist())
                _require(trained == members - got, f"SISA shards {i}/{j} are wrong")
        if isinstance(entry.model, SisaModel):
            _require(set(entry.model.training_indices().tolist()) == members,
                     f"SISA original {i} does not cover its training set")
        if negative_pool is not None:
            _require(not members & negative_pool.index_set(),
                     f"negative pool overlaps original {i}")


def positive_cases(farm: Farm) -> list[CasePair]:
    """One case per deleted sample, querying its original and unlearned model."""
    cases = []
    for i, entry in enumerate(farm.originals):
        ds = entry.train_set.parent
        for j, (req, unl) in enumerate(zip(entry.requests, entry.unlearned)):
            idx = np.asarray(req.indices)
            X = ds.features[idx]
            Po = np.atleast_2d(entry.model.predict_proba(X))
            Pu = np.atleast_2d(unl.predict_proba(X))
            for r, sample in enumerate(idx):
                cases.append(CasePair(Po[r], Pu[r], True, int(ds.labels[sample]),
                                      (i, j), int(sample)))
    return cases


def negative_cases(farm: Farm, negative_pool: SubsetHandle, count: int,
                   seed: int) -> list[CasePair]:
    """``count`` draws of (non-member, original, random unlearned model of it)."""
    if len(negative_pool) == 0:
        raise DataError("empty negative pool")
    if count < 1:
        raise DataError("count must be positive")
    pool_set = negative_pool.index_set()
    if any(e.train_set.index_set() & pool_set for e in farm.originals):
        raise DataError("negative pool overlaps an original's training set")
    ds = negative_pool.parent
    rng = np.random.default_rng(seed)
    samples = rng.choice(negative_pool.indices, size=count, replace=True)
    orig = rng.integers(0, len(farm.originals), size=count)
    n_unl = np.array([len(e.unlearned) for e in farm.originals])
    unl = (rng.random(count) * n_unl[orig]).astype(np.int64)

    Po = np.empty((count, farm.num_classes))
    Pu = np.empty_like(Po)
    for i in np.unique(orig):
        rows = np.flatnonzero(orig == i)
        entry = farm.originals[i]
        Po[rows] = entry.model.predict_proba(ds.features[samples[rows]])
        for j in np.unique(unl[rows]):
            sub = rows[unl[rows] == j]
            Pu[sub] = entry.unlearned[j].predict_proba(ds.features[samples[sub]])
    return [CasePair(Po[r], Pu[r], False, int(ds.labels[samples[r]]),
                     (int(orig[r]), int(unl[r])), int(samples[r]))
            for r in range(count)]


def case_arrays(cases: list[CasePair]):
    """Stack cases into ``(Po, Pu, is_positive)`` arrays."""
    if not cases:
        raise DataError("no cases")
    Po = np.stack([c.posterior_original for c in cases])
    Pu = np.stack([c.posterior_unlearned for c in cases])
    b = np.array([c.is_positive for c in cases], dtype=bool)
    return Po, Pu, b


# --- cache --------------------------------------------------------------------

_FINGERPRINTS: dict[int, str] = {}


def dataset_fingerprint(ds: EncodedDataset) -> str:
    key = id(ds)
    if key not in _FINGERPRINTS:
        h = hashlib.sha256()
        h.update(ds.features.tobytes())
        h.update(ds.labels.tobytes())
        _FINGERPRINTS[key] = h.hexdigest()
    return _FINGERPRINTS[key]


class _FarmCache:
    """One envelope per model plus ``manifest.json`` with the bookkeeping."""

    def __init__(self, root: Path, pool: SubsetHandle, config: FarmConfig):
        h = hashlib.sha256()
        h.update(dataset_fingerprint(pool.parent).encode())
        h.update(np.ascontiguousarray(pool.indices, dtype="<i8").tobytes())
        h.update(json.dumps(config.to_dict(), sort_keys=True).encode())
        self.key = h.hexdigest()
        self.path = root / f"farm-{self.key[:24]}"
        self.pool, self.config = pool, config

    def _dump(self, model) -> bytes:
        return serialize_sisa(model) if isinstance(model, SisaModel) else serialize(model)

    def _load(self, data: bytes):
        if self.config.unlearn_method.name == "sisa":
            return deserialize_sisa(data, self.pool.parent, self.config.params)
        return deserialize(data)

    def save(self, farm: Farm) -> None:
        self.path.mkdir(parents=True, exist_ok=True)
        manifest = {"key": self.key, "config": self.config.to_dict(), "originals": []}
        for i, e in enumerate(farm.originals):
            (self.path / f"original-{i}.bin").write_bytes(self._dump(e.model))
            for j, m in enumerate(e.unlearned):
                (self.path / f"unlearned-{i}-{j}.bin").write_bytes(self._dump(m))
            manifest["originals"].append({
                "seed": e.seed,
                "train_indices": e.train_set.indices.tolist(),
                "requests": [list(r.indices) for r in e.requests],
            })
        # manifest last: its presence marks a complete entry
        (self.path / "manifest.json").write_text(json.dumps(manifest))

    def load(self) -> Farm | None:
        mpath = self.path / "manifest.json"
        if not mpath.is_file():
            return None
        manifest = json.loads(mpath.read_text())
        if manifest.get("key") != self.key:
            return None
        ds = self.pool.parent
        entries = []
        for i, rec in enumerate(manifest["originals"]):
            train_set = SubsetHandle(ds, np.asarray(rec["train_indices"], dtype=np.int64))
            reqs = tuple(DeletionRequest(tuple(r)) for r in rec["requests"])
            model = self._load((self.path / f"original-{i}.bin").read_bytes())
            unl = tuple(self._load((self.path / f"unlearned-{i}-{j}.bin").read_bytes())
                        for j in range(len(reqs)))
            rems = tuple(train_set.without(r.indices) for r in reqs)
            entries.append(OriginalEntry(train_set, model, rec["seed"], reqs, unl, rems))
        return Farm(self.config, tuple(entries))
