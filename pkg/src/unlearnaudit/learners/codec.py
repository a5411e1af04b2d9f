"""Binary model envelope.

Layout (all little-endian)::

    b"UAUD" | version u16 | kind u8 | num_classes u32 | feature_dim u32 |
    train_seed u64 | kind payload

Arrays inside a payload are written as ``ndim u8, dims u32..., raw data``.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import MalformedModelError, ModelVersionError

MAGIC = b"UAUD"
VERSION = 1
_KIND_TAGS = {"LR": 1, "DT": 2, "RF": 3, "MLP": 4}
_HEADER = struct.Struct("<4sHBIIQ")


class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def u32(self, v):
        self.parts.append(struct.pack("<I", v))

    def array(self, a, dtype):
        a = np.ascontiguousarray(a, dtype=np.dtype(dtype).newbyteorder("<"))
        self.parts.append(struct.pack("<B", a.ndim))
        self.parts.append(struct.pack(f"<{a.ndim}I", *a.shape))
        self.parts.append(a.tobytes())

    def getvalue(self):
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data, pos):
        self.data, self.pos = data, pos

    def take(self, n):
        if n < 0 or self.pos + n > len(self.data):
            raise MalformedModelError("model envelope is truncated")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def array(self, dtype):
        dt = np.dtype(dtype).newbyteorder("<")
        ndim = self.take(1)[0]
        shape = struct.unpack(f"<{ndim}I", self.take(4 * ndim))
        count = int(np.prod(shape, dtype=np.int64))
        raw = self.take(count * dt.itemsize)
        return np.frombuffer(raw, dtype=dt).reshape(shape).astype(dtype)


def _write_tree(w, tree):
    w.array(tree.feature, np.int64)
    w.array(tree.threshold, np.float64)
    w.array(tree.left, np.int64)
    w.array(tree.right, np.int64)
    w.array(tree.proba, np.float64)
    w.array(tree.n_samples, np.int64)


def _read_tree(r):
    from .tree import Tree
    tree = Tree(r.array(np.int64), r.array(np.float64), r.array(np.int64),
                r.array(np.int64), r.array(np.float64), r.array(np.int64))
    n = tree.feature.shape[0]
    if n == 0 or any(a.shape[0] != n for a in (tree.threshold, tree.left, tree.right,
                                               tree.proba, tree.n_samples)):
        raise MalformedModelError("inconsistent tree arrays")
    internal = tree.feature >= 0
    for child in (tree.left, tree.right):
        if np.any(internal & ((child <= 0) | (child >= n))):
            raise MalformedModelError("tree child index out of range")
    return tree


def serialize(model) -> bytes:
    kind = model.kind.value
    w = _Writer()
    w.parts.append(_HEADER.pack(MAGIC, VERSION, _KIND_TAGS[kind], model.num_classes,
                                model.feature_dim, model.train_seed))
    p = model.parameters
    if kind in ("LR", "MLP"):
        for a in p:
            w.array(a, np.float64)
    elif kind == "DT":
        _write_tree(w, p)
    else:
        w.u32(len(p))
        for tree in p:
            _write_tree(w, tree)
    return w.getvalue()


def deserialize(data: bytes):
    from . import ModelKind, TrainedClassifier

    data = bytes(data)
    if len(data) < _HEADER.size:
        raise MalformedModelError("model envelope is truncated")
    magic, version, tag, num_classes, feature_dim, seed = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MalformedModelError("bad magic bytes")
    if version != VERSION:
        raise ModelVersionError(f"unsupported envelope version {version}")
    kinds = {v: k for k, v in _KIND_TAGS.items()}
    if tag not in kinds:
        raise MalformedModelError(f"unknown model kind tag {tag}")
    kind = ModelKind(kinds[tag])
    r = _Reader(data, _HEADER.size)
    if kind is ModelKind.LR:
        params = (r.array(np.float64), r.array(np.float64))
        if params[0].shape != (feature_dim, num_classes) or params[1].shape != (num_classes,):
            raise MalformedModelError("logistic weights have the wrong shape")
    elif kind is ModelKind.MLP:
        params = tuple(r.array(np.float64) for _ in range(4))
        W1, b1, W2, b2 = params
        if (W1.ndim != 2 or W1.shape[0] != feature_dim or b1.shape != (W1.shape[1],)
                or W2.shape != (W1.shape[1], num_classes) or b2.shape != (num_classes,)):
            raise MalformedModelError("network weights have the wrong shape")
    elif kind is ModelKind.DT:
        params = _read_tree(r)
    else:
        params = tuple(_read_tree(r) for _ in range(r.u32()))
        if not params:
            raise MalformedModelError("forest without trees")
    if r.pos != len(data):
        raise MalformedModelError("trailing bytes after model payload")
    return TrainedClassifier(kind, num_classes, feature_dim, params, seed)
