import os
import subprocess
import sys

from fairguide import backends


def _active_backend_with_env(value):
    env = dict(os.environ)
    if value is None:
        env.pop("FAIRGUIDE_BACKEND", None)
    else:
        env["FAIRGUIDE_BACKEND"] = value
    out = subprocess.run(
        [sys.executable, "-c",
         "from fairguide.backends import ACTIVE_BACKEND; print(ACTIVE_BACKEND)"],
        env=env, capture_output=True, text=True,
    )
    return out.returncode, out.stdout.strip(), out.stderr


def test_default_prefers_numba_when_available():
    code, backend, _ = _active_backend_with_env(None)
    assert code == 0
    expected = "numba" if backends._numba_available() else "numpy"
    assert backend == expected


def test_numpy_flag_forces_fallback():
    code, backend, _ = _active_backend_with_env("numpy")
    assert code == 0
    assert backend == "numpy"


def test_invalid_flag_rejected():
    code, _, stderr = _active_backend_with_env("cuda")
    assert code != 0
    assert "FAIRGUIDE_BACKEND" in stderr


def test_numpy_backend_trains_models():
    # run one real fit through the fallback path in a subprocess
    script = (
        "import numpy as np\n"
        "from fairguide.kernels import train_gd, ACTIVE_BACKEND\n"
        "assert ACTIVE_BACKEND == 'numpy'\n"
        "rng = np.random.default_rng(0)\n"
        "X = rng.random((50, 4)); y = (rng.random(50) < 0.5).astype(float)\n"
        "w, b, trace = train_gd(X, y, np.zeros(50), 0.5, 200, 1e-2, 0.0)\n"
        "assert np.all(np.diff(trace) <= 1e-15)\n"
        "print('ok')\n"
    )
    env = dict(os.environ, FAIRGUIDE_BACKEND="numpy")
    out = subprocess.run([sys.executable, "-c", script], env=env,
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "ok"
