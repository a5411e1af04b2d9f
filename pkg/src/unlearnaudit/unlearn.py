"""Retrain-from-scratch and SISA unlearning."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .data import EncodedDataset, SubsetHandle
from .errors import DataError, DegenerateTrainingSetError, MalformedModelError
from .learners import HyperParams, ModelKind, TrainedClassifier, codec, train


@dataclass(frozen=True)
class DeletionRequest:
    """Parent-dataset row indices whose removal is requested."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise DataError("a deletion request needs at least one index")
        if len(set(idx)) != len(idx):
            raise DataError("deletion request indices must be distinct")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)


def _check_subset(request: DeletionRequest, members: frozenset[int]):
    outside = [i for i in request.indices if i not in members]
    if outside:
        raise DataError(f"deletion request indices not in the training set: {outside[:5]}")


def scratch_unlearn(train_set: SubsetHandle, request: DeletionRequest, kind,
                    params: HyperParams, seed: int) -> TrainedClassifier:
    """Retrain on ``train_set`` minus the requested rows, reusing ``seed``."""
    _check_subset(request, train_set.index_set())
    remainder = train_set.without(request.indices)
    if len(remainder) == 0:
        raise DegenerateTrainingSetError("nothing left after deletion")
    return train(kind, params, remainder, seed)


@dataclass(frozen=True, eq=False)
class SisaModel:
    shards: tuple[SubsetHandle, ...]
    sub_models: tuple[TrainedClassifier, ...]
    k: int
    kind: ModelKind
    params: HyperParams
    base_seed: int

    def __post_init__(self):
        if not (len(self.shards) == len(self.sub_models) == self.k):
            raise ValueError("shard count, sub-model count and k disagree")

    @property
    def num_classes(self) -> int:
        return self.sub_models[0].num_classes

    @property
    def feature_dim(self) -> int:
        return self.sub_models[0].feature_dim

    def training_indices(self) -> np.ndarray:
        return np.sort(np.concatenate([s.indices for s in self.shards]))

    def predict_proba(self, x) -> np.ndarray:
        P = self.sub_models[0].predict_proba(x)
        if self.k == 1:
            return P
        P = P.copy()
        for m in self.sub_models[1:]:
            P += m.predict_proba(x)
        P /= self.k
        return P / P.sum(axis=-1, keepdims=True)


def sisa_train(train_set: SubsetHandle, k: int, kind, params: HyperParams,
               seed: int) -> SisaModel:
    """Partition into ``k`` seeded shards and fit sub-model ``i`` with ``seed + i``."""
    kind = ModelKind.parse(kind)
    if k < 1 or k > len(train_set):
        raise DataError(f"cannot cut {len(train_set)} samples into {k} shards")
    perm = train_set.indices[np.random.default_rng(seed).permutation(len(train_set))]
    shards = tuple(SubsetHandle(train_set.parent, np.sort(chunk))
                   for chunk in np.array_split(perm, k))
    models = tuple(train(kind, params, shard, seed + i) for i, shard in enumerate(shards))
    return SisaModel(shards, models, k, kind, params, seed)


def sisa_unlearn(model: SisaModel, request: DeletionRequest) -> SisaModel:
    """Retrain only the shards that hold a requested index."""
    members = frozenset(model.training_indices().tolist())
    _check_subset(request, members)
    shards, subs = list(model.shards), list(model.sub_models)
    for i, shard in enumerate(model.shards):
        hit = np.isin(shard.indices, request.indices)
        if not hit.any():
            continue
        shards[i] = SubsetHandle(shard.parent, shard.indices[~hit])
        if len(shards[i]) == 0:
            raise DegenerateTrainingSetError(f"shard {i} is empty after deletion")
        subs[i] = train(model.kind, model.params, shards[i], model.base_seed + i)
    return SisaModel(tuple(shards), tuple(subs), model.k, model.kind, model.params,
                     model.base_seed)


def sisa_predict(model: SisaModel, x) -> np.ndarray:
    return model.predict_proba(x)


def posterior(model, x) -> np.ndarray:
    """Posterior of a plain classifier or a SISA ensemble."""
    return model.predict_proba(x)


_SISA_MAGIC = b"UAUS"


def serialize_sisa(model: SisaModel) -> bytes:
    """``UAUS | version u16 | k u32 | base_seed u64`` then per shard:
    ``n u32 | indices i64[n] | envelope length u32 | envelope``.
    Hyperparameters are not stored; pass them back to :func:`deserialize_sisa`.
    """
    parts = [struct.pack("<4sHIQ", _SISA_MAGIC, codec.VERSION, model.k, model.base_seed)]
    for shard, sub in zip(model.shards, model.sub_models):
        env = codec.serialize(sub)
        parts.append(struct.pack("<I", len(shard)))
        parts.append(np.ascontiguousarray(shard.indices, dtype="<i8").tobytes())
        parts.append(struct.pack("<I", len(env)))
        parts.append(env)
    return b"".join(parts)


def deserialize_sisa(data: bytes, parent: EncodedDataset,
                     params: HyperParams) -> SisaModel:
    head = struct.Struct("<4sHIQ")
    if len(data) < head.size:
        raise MalformedModelError("SISA envelope is truncated")
    magic, version, k, base_seed = head.unpack_from(data)
    if magic != _SISA_MAGIC:
        raise MalformedModelError("bad SISA magic bytes")
    if version != codec.VERSION:
        raise codec.ModelVersionError(f"unsupported envelope version {version}")
    r = codec._Reader(data, head.size)
    shards, subs = [], []
    for _ in range(k):
        n = r.u32()
        idx = np.frombuffer(r.take(8 * n), dtype="<i8").astype(np.int64)
        shards.append(SubsetHandle(parent, idx))
        subs.append(codec.deserialize(r.take(r.u32())))
    if r.pos != len(data) or k == 0:
        raise MalformedModelError("malformed SISA envelope")
    return SisaModel(tuple(shards), tuple(subs), k, subs[0].kind, params, base_seed)
