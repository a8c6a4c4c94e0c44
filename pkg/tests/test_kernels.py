import os
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from diracmech import _kernels
from diracmech._kernels import _ref

_speed = pytest.importorskip("diracmech._kernels._speed")


def random_poly(rng, n, terms, max_exp=3):
    coeffs = rng.uniform(-2, 2, terms)
    qexps = rng.integers(0, max_exp + 1, size=(terms, n)).astype(np.int64)
    vexps = rng.integers(0, max_exp + 1, size=(terms, n)).astype(np.int64)
    return coeffs, qexps, vexps


class TestBackendsAgree:
    def test_values_and_gradients(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 6))
            coeffs, qexps, vexps = random_poly(rng, n, int(rng.integers(0, 7)))
            q, v = rng.standard_normal(n), rng.standard_normal(n)
            assert_allclose(_speed.poly_value(coeffs, qexps, vexps, q, v),
                            _ref.poly_value(coeffs, qexps, vexps, q, v),
                            atol=1e-12)
            assert_allclose(_speed.poly_grad_q(coeffs, qexps, vexps, q, v),
                            _ref.poly_grad_q(coeffs, qexps, vexps, q, v),
                            atol=1e-12)
            assert_allclose(_speed.poly_grad_v(coeffs, qexps, vexps, q, v),
                            _ref.poly_grad_v(coeffs, qexps, vexps, q, v),
                            atol=1e-12)

    def test_covector_accumulation(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = int(rng.integers(1, 5))
            terms = int(rng.integers(0, 6))
            coeffs, qexps, vexps = random_poly(rng, n, terms)
            comps = rng.integers(0, n, size=terms).astype(np.int64)
            q, v = rng.standard_normal(n), rng.standard_normal(n)
            assert_allclose(
                _speed.poly_covector(comps, coeffs, qexps, vexps, q, v, n),
                _ref.poly_covector(comps, coeffs, qexps, vexps, q, v, n),
                atol=1e-12)

    def test_step_residual(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            n = int(rng.integers(1, 5))
            m = int(rng.integers(0, 3))
            coeffs, qexps, vexps = random_poly(rng, n, int(rng.integers(1, 6)))
            fterms = int(rng.integers(0, 3))
            fcoeffs, fqexps, fvexps = random_poly(rng, n, fterms, max_exp=1)
            fcomp = rng.integers(0, n, size=fterms).astype(np.int64)
            w = np.ascontiguousarray(rng.standard_normal((m, n)))
            z = rng.standard_normal(3 * n + m)
            q0, v0, p0 = (rng.standard_normal(n) for _ in range(3))
            for scheme in (_kernels.MIDPOINT, _kernels.BACKWARD_EULER):
                args = (z, q0, v0, p0, 0.05, scheme, coeffs, qexps, vexps,
                        fcomp, fcoeffs, fqexps, fvexps, w)
                assert_allclose(_speed.step_residual(*args),
                                _ref.step_residual(*args), atol=1e-11)


class TestEdgeCases:
    def test_zero_base_with_zero_exponent(self):
        coeffs = np.array([2.0])
        qexps = np.array([[0, 2]], dtype=np.int64)
        vexps = np.array([[1, 0]], dtype=np.int64)
        q = np.array([0.0, 3.0])
        v = np.array([5.0, 0.0])
        # 2 * q1^2 * v0 = 90 even though q0 = 0 and v1 = 0.
        for impl in (_speed, _ref):
            assert_allclose(impl.poly_value(coeffs, qexps, vexps, q, v), 90.0)
            # d/dq0 has exponent 0: contributes nothing, no 0^(-1) blowup.
            assert_allclose(impl.poly_grad_q(coeffs, qexps, vexps, q, v),
                            [0.0, 60.0])

    def test_gradient_at_zero_with_unit_exponent(self):
        coeffs = np.array([3.0])
        qexps = np.array([[1]], dtype=np.int64)
        vexps = np.array([[0]], dtype=np.int64)
        q, v = np.array([0.0]), np.array([0.0])
        for impl in (_speed, _ref):
            assert_allclose(impl.poly_grad_q(coeffs, qexps, vexps, q, v), [3.0])


class TestSelection:
    def test_compiled_selected_by_default(self):
        out = subprocess.run(
            [sys.executable, "-c", "import diracmech; print(diracmech.BACKEND)"],
            capture_output=True, text=True, check=True,
            env={**os.environ, "DIRACMECH_PURE_PYTHON": ""})
        assert out.stdout.strip() == "compiled"

    def test_env_var_forces_pure(self):
        out = subprocess.run(
            [sys.executable, "-c", "import diracmech; print(diracmech.BACKEND)"],
            capture_output=True, text=True, check=True,
            env={**os.environ, "DIRACMECH_PURE_PYTHON": "1"})
        assert out.stdout.strip() == "pure"

    def test_pure_backend_runs_a_simulation(self):
        code = (
            "import numpy as np\n"
            "from diracmech.integrator import IntegratorConfig, "
            "project_initial, simulate\n"
            "from diracmech.library import build_builtin\n"
            "s = build_builtin('harmonic')\n"
            "st = project_initial(s, [1.0], [0.0])\n"
            "traj = simulate(s, st, IntegratorConfig(h=0.01), 1.0)\n"
            "print(float(traj.states[-1].q[0]))\n"
        )
        runs = []
        for flag in ("", "1"):
            out = subprocess.run(
                [sys.executable, "-c", code], capture_output=True, text=True,
                check=True, env={**os.environ, "DIRACMECH_PURE_PYTHON": flag})
            runs.append(float(out.stdout.strip()))
        assert abs(runs[0] - runs[1]) <= 1e-12
