"""Shared plumbing: seed derivation, atomic writes, hashing, parallel map."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import zlib
from concurrent.futures import ProcessPoolExecutor

import numpy as np


def derive_seed(*parts) -> int:
    """Fold (seed, tag, index, ...) into a fresh 32-bit seed.

    String parts are crc32-hashed so call sites can use readable namespaces
    like ``derive_seed(seed, "distill", repeat)``. The result depends only on
    the part values, never on platform or process scheduling.
    """
    words = []
    for p in parts:
        if isinstance(p, str):
            words.append(zlib.crc32(p.encode("utf-8")))
        elif isinstance(p, (int, np.integer)):
            words.append(int(p) & 0xFFFFFFFFFFFFFFFF)
        else:
            raise TypeError(f"seed parts must be int or str, got {type(p).__name__}")
    return int(np.random.SeedSequence(words).generate_state(1, dtype=np.uint32)[0])


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file in the same directory, then rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def pretty_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_arrays(*arrays: np.ndarray) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def map_jobs(fn, items, n_jobs: int = 1) -> list:
    """Map ``fn`` over ``items``, optionally across processes.

    Results come back in input order, so callers merge identically whatever
    the worker scheduling; ``fn`` must be a module-level callable when
    ``n_jobs > 1``.
    """
    items = list(items)
    if n_jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(n_jobs, len(items))) as pool:
        return list(pool.map(fn, items))
