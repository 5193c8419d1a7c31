"""Parity between the compiled kernels and the pure-python fallback.

Both implementations follow the same algorithm, so agreement is required
to near machine precision, not merely to the documented accuracy.
"""

import os
import subprocess
import sys

import numpy as np
import pytest

from swiptsim import _specfun_py, specfun

try:
    from swiptsim import _specfun_native
except ImportError:
    _specfun_native = None

needs_both = pytest.mark.skipif(
    _specfun_native is None, reason="compiled backend not built"
)


def test_backend_name_is_reported():
    assert specfun.BACKEND in ("native", "python")
    if _specfun_native is not None and not os.environ.get("SWIPTSIM_PURE_PYTHON"):
        assert specfun.BACKEND == "native"


@needs_both
@pytest.mark.parametrize(
    "name,args_list",
    [
        ("digamma", [(0.1,), (1.0,), (7.5,), (123.0,)]),
        ("ln_gamma", [(0.2,), (1.0,), (11.5,), (250.0,)]),
        (
            "reg_gamma_lower",
            [(0.5, 0.25), (3.0, 2.06), (40.0, 55.0), (2.0, 1e-8), (200.0, 160.0)],
        ),
        ("reg_gamma_upper", [(0.5, 0.25), (3.0, 2.06), (7.5, 12.0)]),
        ("bessel_i_scaled", [(0, 0.5), (1, 12.0), (5, 49.0), (12, 300.0)]),
        (
            "marcum_q",
            [(1, 0.5, 0.5), (2, 3.0, 4.0), (4, 8.0, 8.0), (1, 60.0, 58.0), (5, 0.1, 11.0)],
        ),
        ("marcum_q_complement", [(1, 0.5, 0.5), (6, 10.0, 4.0), (4, 25.0, 27.0)]),
    ],
)
def test_scalar_kernels_agree(name, args_list):
    # 5e-13 leaves room for rounding to accumulate differently in the two
    # continued-fraction loops at extreme shape parameters (a ~ 200); over
    # the rest of the range agreement is a few ulp.
    fn_py = getattr(_specfun_py, name)
    fn_nat = getattr(_specfun_native, name)
    for args in args_list:
        py = fn_py(*args)
        nat = fn_nat(*args)
        assert nat == pytest.approx(py, rel=5e-13, abs=1e-300), (name, args)


@needs_both
def test_vector_kernels_agree():
    xs = np.linspace(0.02, 55.0, 400)
    np.testing.assert_allclose(
        _specfun_native.reg_gamma_lower_many(4.5, xs),
        _specfun_py.reg_gamma_lower_many(4.5, xs),
        rtol=5e-14,
    )
    bs = np.linspace(0.05, 11.0, 300)
    np.testing.assert_allclose(
        _specfun_native.marcum_q_many(2, 3.0, bs),
        _specfun_py.marcum_q_many(2, 3.0, bs),
        rtol=5e-14,
        atol=1e-300,
    )


@needs_both
def test_marcum_grid_agreement_spans_both_branches():
    """Cross the series/quadrature split (a*b near 30) without a visible seam."""
    worst = 0.0
    for a in (2.9, 3.0, 3.1):
        for b in np.linspace(9.0, 11.0, 41):  # a*b sweeps through 30
            py = _specfun_py.marcum_q(2, a, float(b))
            nat = _specfun_native.marcum_q(2, a, float(b))
            denom = max(abs(py), 1e-300)
            worst = max(worst, abs(py - nat) / denom)
    assert worst < 5e-13


def test_env_var_forces_pure_backend():
    code = "import swiptsim.specfun as s; print(s.BACKEND)"
    env = dict(os.environ, SWIPTSIM_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "python"


def test_env_var_zero_means_default():
    code = "import swiptsim.specfun as s; print(s.BACKEND)"
    env = dict(os.environ, SWIPTSIM_PURE_PYTHON="0")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    expected = "native" if _specfun_native is not None else "python"
    assert out.stdout.strip() == expected


@needs_both
def test_outage_value_invariant_under_backend(tmp_path):
    """A full closed-form evaluation must not depend on the backend choice."""
    code = (
        "from swiptsim.model import SystemParams\n"
        "from swiptsim import outage\n"
        "p = SystemParams.from_snr_db(3, 20.0)\n"
        "r = outage.data_outage_tdd(p, 0.02, 0.0163, 6.0)\n"
        "print(repr(r.value))\n"
    )
    values = {}
    for flag in ("", "1"):
        env = dict(os.environ, SWIPTSIM_PURE_PYTHON=flag)
        out = subprocess.run(
            [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
        )
        values[flag] = float(out.stdout.strip())
    assert values[""] == pytest.approx(values["1"], rel=1e-12)
