import dataclasses
import os
import signal
import subprocess
import sys
import textwrap
import time

import numpy as np
import pytest

from conftest import box_phantom, identity_config
from voxsynth.errors import ConfigError
from voxsynth.pipeline import generate
from voxsynth.stream import (StreamJob, consume_directory, load_pair,
                             pair_digest, pair_filename, run_stream,
                             save_pair, stream_pairs)


def small_job(**overrides):
    """Fast 2-D job the stream tests share."""
    phantom = box_phantom(extent=24, ndim=2)
    cfg = identity_config(ndim=2, translation_mm=(-5.0, 5.0),
                          noise_sd_pct=(1.0, 5.0))
    base = dict(roster=(("p", phantom),), config=cfg, seed_base=0,
                count=20, capacity=4, workers=2)
    base.update(overrides)
    return StreamJob(**base)


class TestPairFile:
    def test_round_trip(self, tmp_path):
        job = small_job()
        pair = generate(job.roster[0][1], job.config, 5)
        path = tmp_path / pair_filename(5)
        save_pair(pair, path)
        loaded = load_pair(path)
        assert loaded.seed == 5
        assert np.array_equal(loaded.image.values, pair.image.values)
        assert np.array_equal(loaded.labels.labels, pair.labels.labels)
        assert loaded.provenance == pair.provenance

    def test_no_temp_file_left_behind(self, tmp_path):
        job = small_job()
        pair = generate(job.roster[0][1], job.config, 1)
        save_pair(pair, tmp_path / pair_filename(1))
        assert not [n for n in os.listdir(tmp_path) if n.endswith(".tmp")]


class TestStreamPairs:
    def test_capacity_one_slow_consumer_loses_nothing(self):
        job = small_job(capacity=1, workers=3, count=12)
        seeds = []
        for pair in stream_pairs(job):
            time.sleep(0.01)  # slow consumer forces producer blocking
            seeds.append(pair.seed)
        assert sorted(seeds) == list(range(12))

    def test_seed_order_consumption(self):
        job = small_job(workers=4, order="seed")
        seeds = [p.seed for p in stream_pairs(job)]
        assert seeds == list(range(20))

    def test_arrival_order_complete(self):
        job = small_job(workers=4, order="arrival")
        seeds = sorted(p.seed for p in stream_pairs(job))
        assert seeds == list(range(20))

    def test_freshness_across_job(self):
        job = small_job(count=16)
        digests = {pair_digest(p) for p in stream_pairs(job)}
        assert len(digests) == 16

    def test_validation(self):
        with pytest.raises(ConfigError):
            small_job(capacity=0)
        with pytest.raises(ConfigError):
            small_job(roster=())
        with pytest.raises(ConfigError):
            small_job(order="fifo")


class TestRunStream:
    def test_workers_deliver_exact_seed_set(self, tmp_path):
        job = small_job(count=100, workers=4, out_dir=str(tmp_path))
        result = run_stream(job)
        assert len(result.written) == 100 and not result.failures
        seeds = sorted(p.seed
                       for p in consume_directory(tmp_path, delete=True))
        assert seeds == list(range(100))
        assert not os.listdir(tmp_path)

    def test_worker_count_does_not_change_content(self, tmp_path):
        d1, d4 = tmp_path / "w1", tmp_path / "w4"
        run_stream(small_job(count=10, workers=1, out_dir=str(d1)))
        run_stream(small_job(count=10, workers=4, out_dir=str(d4)))
        for seed in range(10):
            a = (d1 / pair_filename(seed)).read_bytes()
            b = (d4 / pair_filename(seed)).read_bytes()
            assert a == b

    def test_restart_skips_existing(self, tmp_path):
        job = small_job(count=8, out_dir=str(tmp_path))
        first = run_stream(dataclasses.replace(job, count=3))
        assert len(first.written) == 3
        second = run_stream(job)
        assert len(second.skipped) == 3
        assert len(second.written) == 5

    def test_failed_seed_isolated(self, tmp_path):
        bad_cfg = identity_config(ndim=2, warp_strength_mm=(500.0, 500.0),
                                  warp_control_points=(12, 12))
        phantom = box_phantom(extent=24, ndim=2)
        job = StreamJob(roster=(("p", phantom),), config=bad_cfg,
                        count=4, workers=2, out_dir=str(tmp_path))
        result = run_stream(job)
        assert len(result.written) + len(result.failures) == 4
        assert result.failures

    def test_claim_protocol_without_delete(self, tmp_path):
        job = small_job(count=5, out_dir=str(tmp_path))
        run_stream(job)
        seeds = [p.seed for p in consume_directory(tmp_path, delete=False)]
        assert sorted(seeds) == list(range(5))
        # files are restored under their final names for the next consumer
        assert sorted(os.listdir(tmp_path)) \
            == [pair_filename(s) for s in range(5)]


CRASH_SCRIPT = textwrap.dedent("""
    import sys
    sys.path.insert(0, {conftest_dir!r})
    import voxsynth.stream as vs

    _real_save = vs.save_pair
    def slow_save(pair, path):
        import time
        time.sleep(0.05)
        _real_save(pair, path)
    vs.save_pair = slow_save

    from conftest import box_phantom, identity_config
    phantom = box_phantom(extent=24, ndim=2)
    cfg = identity_config(ndim=2, noise_sd_pct=(1.0, 5.0))
    job = vs.StreamJob(roster=(("p", phantom),), config=cfg, count=50,
                       workers=2, out_dir={out_dir!r})
    print("ready", flush=True)
    vs.run_stream(job)
""")


class TestCrashSafety:
    def test_sigkill_mid_write_leaves_no_partial_files(self, tmp_path):
        out = tmp_path / "sink"
        script = CRASH_SCRIPT.format(
            conftest_dir=os.path.dirname(os.path.abspath(__file__)),
            out_dir=str(out))
        proc = subprocess.Popen([sys.executable, "-c", script],
                                stdout=subprocess.PIPE)
        proc.stdout.readline()  # wait until generation is underway
        deadline = time.time() + 20
        while time.time() < deadline:
            if out.exists() and len(os.listdir(out)) >= 3:
                break
            time.sleep(0.02)
        os.kill(proc.pid, signal.SIGKILL)
        proc.wait()
        written = sorted(os.listdir(out))
        assert written, "the stream never produced output before the kill"
        # every file under a final name must load completely
        finals = [n for n in written if n.endswith(".vxp")]
        for name in finals:
            load_pair(out / name)
        # restart completes the job idempotently and clears leftover temps
        job = small_job(count=50, workers=2, out_dir=str(out))
        result = run_stream(job)
        assert len(result.skipped) == len(finals)
        assert not [n for n in os.listdir(out) if n.endswith(".tmp")]
        seeds = sorted(p.seed for p in consume_directory(out))
        assert seeds == list(range(50))
