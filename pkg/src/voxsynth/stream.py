"""Continuous producer/consumer sample generation.

Workers generate pairs in parallel into a bounded queue (backpressure:
a full queue blocks producers, nothing is ever dropped). Two sinks:

* in-memory: `stream_pairs` yields pairs as a generator, pulling through
  the queue so consumer speed bounds producer throughput;
* directory: `run_stream` writes one self-contained pair file per seed,
  via write-to-temp plus atomic rename, so a crash never leaves a
  partial file under the final name and a restart resumes idempotently.

`consume_directory` implements the matching claim protocol for training
loaders that delete samples after loading: rename to .claimed, read,
delete.

Seeds are assigned to workers in contiguous blocks from the base seed,
so the set of generated samples is independent of the worker count.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import queue
import struct
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .config import SynthesisConfig
from .errors import ConfigError, GenerationError, VolumeIOError
from .fields import LabelVolume, ScalarField
from .pipeline import SamplePair, generate

log = logging.getLogger(__name__)

_PAIR_MAGIC = b"VXSP"
_PAIR_VERSION = 1

_SENTINEL = object()


@dataclass(frozen=True)
class StreamJob:
    """One continuous-generation job description."""

    roster: tuple  # (name, LabelVolume) pairs
    config: SynthesisConfig
    seed_base: int = 0
    count: int = 100
    capacity: int = 8
    workers: int = 1
    out_dir: str | None = None  # directory sink; None keeps pairs in memory
    order: str = "seed"  # consumption order: "seed" or "arrival"

    def __post_init__(self):
        if not self.roster:
            raise ConfigError("stream jobs need a non-empty label-map roster")
        if self.capacity < 1:
            raise ConfigError("queue capacity must be >= 1")
        if self.workers < 1 or self.count < 1:
            raise ConfigError("worker and sample counts must be >= 1")
        if self.order not in ("seed", "arrival"):
            raise ConfigError("order must be 'seed' or 'arrival'")
        object.__setattr__(self, "roster", tuple(self.roster))


@dataclass
class StreamResult:
    written: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)


def pair_filename(seed: int) -> str:
    return f"pair_{seed:010d}.vxp"


def save_pair(pair: SamplePair, path) -> None:
    """Write one pair as a deterministic single file (temp + rename)."""
    image = np.ascontiguousarray(pair.image.values, dtype=np.float32)
    labels = np.ascontiguousarray(pair.labels.labels, dtype=np.uint32)
    header = json.dumps({
        "seed": pair.seed,
        "shape": list(image.shape),
        "voxel_size": list(pair.image.voxel_size),
        "label_count": pair.labels.label_count,
        "provenance": pair.provenance,
    }, sort_keys=True, default=float).encode()
    path = str(path)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(_PAIR_MAGIC)
        fh.write(struct.pack("<HI", _PAIR_VERSION, len(header)))
        fh.write(header)
        fh.write(image.tobytes())
        fh.write(labels.tobytes())
    os.replace(tmp, path)


def load_pair(path) -> SamplePair:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _PAIR_MAGIC:
        raise VolumeIOError(f"{path}: not a sample-pair file")
    version, header_len = struct.unpack("<HI", blob[4:10])
    if version != _PAIR_VERSION:
        raise VolumeIOError(f"{path}: unsupported pair version {version}")
    meta = json.loads(blob[10:10 + header_len].decode())
    shape = tuple(meta["shape"])
    count = int(np.prod(shape))
    off = 10 + header_len
    expected = off + 8 * count
    if len(blob) < expected:
        raise VolumeIOError(f"{path}: truncated pair payload")
    image = np.frombuffer(blob[off:off + 4 * count],
                          dtype=np.float32).reshape(shape)
    labels = np.frombuffer(blob[off + 4 * count:expected],
                           dtype=np.uint32).reshape(shape)
    voxel = tuple(meta["voxel_size"])
    return SamplePair(ScalarField(image.copy(), voxel),
                      LabelVolume(labels.copy(), int(meta["label_count"]),
                                  voxel),
                      int(meta["seed"]), meta["provenance"])


def _seed_blocks(base: int, count: int, workers: int):
    """Contiguous seed blocks, one per worker, independent of timing."""
    block = -(-count // workers)
    for w in range(workers):
        lo = base + w * block
        hi = min(base + count, lo + block)
        if lo < hi:
            yield range(lo, hi)


def _label_map_for(job: StreamJob, seed: int) -> LabelVolume:
    name, volume = job.roster[(seed - job.seed_base) % len(job.roster)]
    return volume


def _producer(job: StreamJob, seeds, sink: queue.Queue, stop: threading.Event,
              failures: dict, lock: threading.Lock):
    for seed in seeds:
        if stop.is_set():
            break
        try:
            pair = generate(_label_map_for(job, seed), job.config, seed)
        except GenerationError as exc:
            with lock:
                failures[seed] = str(exc)
            log.warning("seed %d failed: %s", seed, exc)
            continue
        while not stop.is_set():
            try:
                sink.put((seed, pair), timeout=0.1)
                break
            except queue.Full:
                continue


def _run_producers(job: StreamJob, sink: queue.Queue, stop: threading.Event,
                   failures: dict):
    lock = threading.Lock()
    threads = [threading.Thread(target=_producer,
                                args=(job, seeds, sink, stop, failures, lock),
                                daemon=True)
               for seeds in _seed_blocks(job.seed_base, job.count,
                                         job.workers)]
    for t in threads:
        t.start()

    def closer():
        for t in threads:
            t.join()
        sink.put(_SENTINEL)

    threading.Thread(target=closer, daemon=True).start()
    return threads


def stream_pairs(job: StreamJob):
    """Yield generated pairs through a bounded in-memory queue.

    With order="seed" the pairs come out in seed order (a small reorder
    buffer holds early arrivals); "arrival" yields them as produced.
    """
    sink = queue.Queue(maxsize=job.capacity)
    stop = threading.Event()
    failures: dict = {}
    _run_producers(job, sink, stop, failures)
    pending: dict = {}
    expected = job.seed_base
    try:
        while True:
            item = sink.get()
            if item is _SENTINEL:
                break
            seed, pair = item
            if job.order == "arrival":
                yield pair
                continue
            pending[seed] = pair
            while expected in pending or expected in failures:
                if expected in pending:
                    yield pending.pop(expected)
                expected += 1
        # failures may unblock trailing seeds
        for seed in sorted(pending):
            yield pending.pop(seed)
    finally:
        stop.set()


def run_stream(job: StreamJob, progress=None) -> StreamResult:
    """Generate every seed of the job into the directory sink.

    Existing final files are kept (restart is idempotent); partially
    written temp files from a previous crash are removed. Blocks until
    all seeds are written or failed.
    """
    if job.out_dir is None:
        raise ConfigError("run_stream needs a directory sink; use "
                          "stream_pairs for in-memory consumption")
    os.makedirs(job.out_dir, exist_ok=True)
    for name in os.listdir(job.out_dir):
        if name.endswith(".tmp"):
            os.unlink(os.path.join(job.out_dir, name))
    result = StreamResult()
    todo = []
    for seed in range(job.seed_base, job.seed_base + job.count):
        path = os.path.join(job.out_dir, pair_filename(seed))
        if os.path.exists(path):
            result.skipped.append(path)
        else:
            todo.append(seed)
    if not todo:
        return result
    sub = StreamJob(job.roster, job.config, job.seed_base, job.count,
                    job.capacity, job.workers, None, "arrival")
    sink = queue.Queue(maxsize=job.capacity)
    stop = threading.Event()
    _run_producers_subset(sub, todo, sink, stop, result.failures)
    while True:
        item = sink.get()
        if item is _SENTINEL:
            break
        seed, pair = item
        path = os.path.join(job.out_dir, pair_filename(seed))
        save_pair(pair, path)
        result.written.append(path)
        if progress is not None:
            progress(seed, path)
    return result


def _run_producers_subset(job: StreamJob, seeds, sink, stop, failures):
    lock = threading.Lock()
    block = -(-len(seeds) // job.workers)
    chunks = [seeds[i:i + block] for i in range(0, len(seeds), block)]
    threads = [threading.Thread(target=_producer,
                                args=(job, chunk, sink, stop, failures, lock),
                                daemon=True)
               for chunk in chunks]
    for t in threads:
        t.start()

    def closer():
        for t in threads:
            t.join()
        sink.put(_SENTINEL)

    threading.Thread(target=closer, daemon=True).start()


def consume_directory(out_dir, delete: bool = True, order: str = "seed",
                      poll_interval: float = 0.05, stop_after: int | None
                      = None, wait: bool = False):
    """Yield pairs from a directory sink using the claim protocol.

    Each final file is renamed to .claimed before reading (so concurrent
    consumers never read the same sample) and deleted after the pair is
    yielded when delete=True. With wait=True the generator polls for new
    files until stop_after pairs have been consumed.
    """
    consumed = 0
    while True:
        names = [n for n in os.listdir(out_dir) if n.endswith(".vxp")]
        if order == "seed":
            names.sort()
        progressed = False
        for name in names:
            final = os.path.join(out_dir, name)
            claimed = final + ".claimed"
            try:
                os.rename(final, claimed)
            except FileNotFoundError:
                continue  # another consumer claimed it first
            pair = load_pair(claimed)
            if delete:
                os.unlink(claimed)
            else:
                os.rename(claimed, final)
            progressed = True
            consumed += 1
            yield pair
            if stop_after is not None and consumed >= stop_after:
                return
        if not wait:
            return
        if not progressed:
            time.sleep(poll_interval)


def pair_digest(pair: SamplePair) -> str:
    """Joint content hash of image and labels (freshness checks)."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(pair.image.values).tobytes())
    h.update(np.ascontiguousarray(pair.labels.labels).tobytes())
    return h.hexdigest()
