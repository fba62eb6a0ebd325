"""Shared fixtures: generator artifacts produced through its CLI.

Everything the trainer consumes from the generator crosses a process or
file boundary here, exactly as in production: datasets and configs come
from subprocess runs, streams from a `serve` subprocess.
"""

import contextlib
import re
import subprocess
import sys

import pytest

GENERATOR = [sys.executable, "-m", "synthhead.cli"]
TOY_SEED = 501
HOLDOUT_SEED = 777


def run_generator(*args):
    proc = subprocess.run(
        GENERATOR + list(args), capture_output=True, text=True
    )
    if proc.returncode != 0:
        raise RuntimeError(f"generator CLI failed ({proc.returncode}): {proc.stderr}")
    return proc.stdout


@contextlib.contextmanager
def serve(config_path, seed=None):
    """Run a `serve` subprocess; yields (host, port)."""
    cmd = GENERATOR + ["serve", "--config", config_path, "--listen", "127.0.0.1:0"]
    if seed is not None:
        cmd += ["--seed", str(seed)]
    proc = subprocess.Popen(
        cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True
    )
    try:
        line = proc.stdout.readline()
        match = re.match(r"serving on (.+):(\d+)", line)
        if not match:
            raise RuntimeError(f"server did not start: {line!r} {proc.stderr.read()}")
        yield match.group(1), int(match.group(2))
    finally:
        proc.terminate()
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()


@pytest.fixture(scope="session")
def toy_config(tmp_path_factory):
    """Generator config for fast 32-voxel cubes, written by the generator."""
    path = str(tmp_path_factory.mktemp("cfg") / "toy.json")
    helper = (
        "from synthhead.config import scaled_default, save_config; "
        f"save_config(scaled_default((32, 32, 32), seed={TOY_SEED}), {path!r})"
    )
    subprocess.run([sys.executable, "-c", helper], check=True)
    return path


@pytest.fixture(scope="session")
def toy_dataset(toy_config, tmp_path_factory):
    """Eight training pairs generated at the toy seed."""
    out = str(tmp_path_factory.mktemp("data") / "train")
    run_generator("generate", "--config", toy_config, "--count", "8", "--out", out)
    return out


@pytest.fixture(scope="session")
def holdout_dataset(toy_config, tmp_path_factory):
    """Twenty pairs at a seed the training stream never sees."""
    out = str(tmp_path_factory.mktemp("data") / "holdout")
    run_generator(
        "generate", "--config", toy_config, "--seed", str(HOLDOUT_SEED),
        "--count", "20", "--out", out,
    )
    return out
