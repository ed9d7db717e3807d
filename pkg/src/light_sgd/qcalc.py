"""Deformed logarithm and exponential.

Convention: ``q_log(x, q) = (1 - x**-q) / q`` and its inverse
``q_exp(u, q) = (1 - q*u)**(-1/q)``.  With ``q = 1`` the pair turns the
Gompertz-type solution ``exp(ln(N0) * exp(-r t))`` into the logistic
(Verhulst) curve; ``q -> 0`` recovers ``ln``/``exp`` (Gompertz).

Both functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import math

import numpy as np

Q_LIMIT_TOL = 1e-6


class QDomainError(ValueError):
    """Argument outside the domain of the deformed logarithm."""


class QPoleError(ValueError):
    """Argument at or beyond the singularity of the deformed exponential."""


def check_q(q: float) -> float:
    q = float(q)
    if not math.isfinite(q) or q < 0:
        raise QDomainError(f"q must be finite and non-negative, got {q}")
    return q


def is_limit(q: float) -> bool:
    """True when ``q`` is close enough to zero to use plain ln/exp."""
    return q <= Q_LIMIT_TOL


def q_log(x, q: float):
    q = check_q(q)
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)) or np.any(x_arr <= 0):
        raise QDomainError(f"q_log needs finite x > 0, got {x}")
    if is_limit(q):
        out = np.log(x_arr)
    else:
        # -expm1(-q ln x) keeps precision for small q ln x
        out = -np.expm1(-q * np.log(x_arr)) / q
    return float(out) if out.ndim == 0 else out


def q_exp(u, q: float):
    q = check_q(q)
    u_arr = np.asarray(u, dtype=float)
    if np.any(np.isnan(u_arr)):
        raise QDomainError("q_exp got NaN")
    if is_limit(q):
        with np.errstate(over="ignore"):
            out = np.exp(u_arr)
    else:
        if np.any(q * u_arr >= 1):
            raise QPoleError(f"q_exp pole: q*u >= 1 for q={q}")
        # (1 - q u)^(-1/q) = exp(-log1p(-q u) / q)
        with np.errstate(over="ignore"):
            out = np.exp(-np.log1p(-q * u_arr) / q)
    return float(out) if out.ndim == 0 else out


def q_exp_deriv(u, q: float):
    """Derivative of ``q_exp`` in its argument, ``q_exp(u, q) ** (1 + q)``."""
    q = check_q(q)
    e = np.asarray(q_exp(u, q))
    out = e if is_limit(q) else e ** (1.0 + q)
    return float(out) if out.ndim == 0 else out
