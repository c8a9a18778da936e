import os
import subprocess
import sys
from pathlib import Path

import optosync
from optosync import _backend

BENCH = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


def _backend_under(env_value):
    env = dict(os.environ)
    if env_value is None:
        env.pop("OPTOSYNC_BACKEND", None)
    else:
        env["OPTOSYNC_BACKEND"] = env_value
    out = subprocess.run([sys.executable, "-c", "import optosync; print(optosync.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_python_backend_forced_by_env():
    assert _backend_under("python") == "python"


def test_default_backend_is_compiled_when_built():
    expected = "cython" if _backend.compiled_kernels is not None else "python"
    assert _backend_under(None) == expected


def test_backend_exposed():
    assert optosync.BACKEND in ("cython", "python")


def test_benchmark_runs():
    out = subprocess.run([sys.executable, str(BENCH), "--steps", "200", "--repeat", "1"],
                         capture_output=True, text=True, timeout=300)
    assert out.returncode == 0, out.stderr
    assert "speedup" in out.stdout.lower() or "python" in out.stdout.lower()
