"""Special functions used by the analysis layer.

Two interchangeable backends implement the scalar kernels:

* ``swiptsim._specfun_native`` -- Cython extension, used when importable;
* ``swiptsim._specfun_py`` -- pure Python, always available.

Set the environment variable ``SWIPTSIM_PURE_PYTHON=1`` before import to
force the fallback (useful for debugging and for the backend-parity tests).
The module attribute ``BACKEND`` reports which one is active.

All functions validate their domains and raise ValueError on bad arguments;
``bessel_i`` raises OverflowError (a range error, not a domain error) when
the unscaled result exceeds the double range.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import _specfun_py

if os.environ.get("SWIPTSIM_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _specfun_py
else:
    try:
        from . import _specfun_native as _impl
    except ImportError:
        _impl = _specfun_py

BACKEND = _impl.BACKEND_NAME

ln_gamma = _impl.ln_gamma
digamma = _impl.digamma
reg_gamma_lower = _impl.reg_gamma_lower
reg_gamma_upper = _impl.reg_gamma_upper
bessel_i_scaled = _impl.bessel_i_scaled
bessel_i = _impl.bessel_i
marcum_q = _impl.marcum_q
marcum_q_complement = _impl.marcum_q_complement
reg_gamma_lower_many = _impl.reg_gamma_lower_many
reg_gamma_upper_many = _impl.reg_gamma_upper_many
bessel_i_scaled_many = _impl.bessel_i_scaled_many
marcum_q_many = _impl.marcum_q_many
marcum_q_complement_many = _impl.marcum_q_complement_many

__all__ = [
    "BACKEND",
    "Tolerance",
    "ln_gamma",
    "digamma",
    "reg_gamma_lower",
    "reg_gamma_upper",
    "bessel_i_scaled",
    "bessel_i",
    "marcum_q",
    "marcum_q_complement",
    "reg_gamma_lower_many",
    "reg_gamma_upper_many",
    "bessel_i_scaled_many",
    "marcum_q_many",
    "marcum_q_complement_many",
    "noncentral_chi2_sf",
    "noncentral_chi2_cdf",
]


@dataclass(frozen=True)
class Tolerance:
    """Absolute/relative tolerance pair.

    ``bound(scale)`` gives the allowed error for a quantity of the given
    magnitude: max(abs_tol, rel_tol * |scale|).
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10

    def bound(self, scale):
        return max(self.abs_tol, self.rel_tol * abs(scale))


def _check_even_dof(dof):
    d = int(dof)
    if d != dof or d < 2 or d % 2 != 0:
        raise ValueError(
            f"noncentral chi-square here supports even dof >= 2 only, got {dof!r}"
        )
    return d


def noncentral_chi2_sf(x, dof, noncentrality):
    """Survival function of the noncentral chi-square law (even dof).

    For even dof = 2m the survival function equals the Marcum Q function
    Q_m(sqrt(noncentrality), sqrt(x)), which is how it is computed here.
    Accepts scalar or ndarray ``x``.
    """
    m = _check_even_dof(dof) // 2
    if not noncentrality >= 0.0:
        raise ValueError(f"noncentrality must be >= 0, got {noncentrality!r}")
    a = float(np.sqrt(noncentrality))
    if isinstance(x, np.ndarray):
        return marcum_q_many(m, a, np.sqrt(x))
    if not x >= 0.0:
        raise ValueError(f"x must be >= 0, got {x!r}")
    return marcum_q(m, a, float(np.sqrt(x)))


def noncentral_chi2_cdf(x, dof, noncentrality):
    """CDF of the noncentral chi-square law (even dof), lower-tail stable."""
    m = _check_even_dof(dof) // 2
    if not noncentrality >= 0.0:
        raise ValueError(f"noncentrality must be >= 0, got {noncentrality!r}")
    a = float(np.sqrt(noncentrality))
    if isinstance(x, np.ndarray):
        return marcum_q_complement_many(m, a, np.sqrt(x))
    if not x >= 0.0:
        raise ValueError(f"x must be >= 0, got {x!r}")
    return marcum_q_complement(m, a, float(np.sqrt(x)))
