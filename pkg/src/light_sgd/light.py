"""The LIGHT activation: logistic growth up to ``T``, harvested decline after it.

For ``t < T`` the curve is ``eps * f(ln_q(N0) * exp(-r t))`` and for
``t >= T`` it is ``eps * f((ln_q(NT) + E/r) * exp(-r (t - T)))``, where ``f`` is
the deformed exponential (``eval_mode="deformed"``) or plain ``exp``
(``eval_mode="literal"``).  ``t`` is the pre-activation fed to the output
neuron.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Mapping

import numpy as np

from light_sgd.qcalc import QPoleError, is_limit, q_exp, q_exp_deriv, q_log

EPSILON_POLICIES = ("unit", "harvest", "explicit")
EVAL_MODES = ("deformed", "literal")

PRESETS = {
    "-default-": dict(r=1.0, E=0.0, N0=0.5),
    "-r-": dict(r=3.0, E=0.0, N0=0.3),
    "-E-": dict(r=1.0, E=3.0, N0=0.3),
    "-Er-": dict(r=3.0, E=4.0, N0=0.3),
}
VARIANTS = {"light-v": 1.0, "light-g": 0.0}

# exp(-r t) is evaluated with its exponent capped here; beyond it the curve is 0 anyway
_MAX_EXPONENT = 700.0


class LightRangeError(ValueError):
    """A LIGHT parameter lies outside its admissible range."""


def config_name(name: str) -> str:
    """Normalise ``"Er"`` / ``"-Er-"`` style configuration names."""
    key = name if name.startswith("-") else f"-{name}-"
    if key not in PRESETS:
        raise KeyError(f"unknown configuration {name!r}; expected one of {list(PRESETS)}")
    return key


@dataclass(frozen=True)
class LightParams:
    """LIGHT parameters, validated on construction.

    ``q = 0`` stands for the Gompertz limit (light-g).  ``epsilon_value`` is only
    read for the ``explicit`` policy.
    """

    r: float = 1.0
    E: float = 0.0
    T: float = 0.75
    N0: float = 0.5
    NT: float = 0.5
    q: float = 1.0
    epsilon_policy: str = "harvest"
    epsilon_value: float | None = None
    eval_mode: str = "deformed"

    def __post_init__(self):
        for name in ("r", "E", "T", "N0", "NT", "q"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise LightRangeError(f"{name} must be a finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.r <= 0:
            raise LightRangeError(f"r must be > 0, got {self.r}")
        if self.E < 0:
            raise LightRangeError(f"E must be >= 0, got {self.E}")
        if self.T < 0:
            raise LightRangeError(f"T must be >= 0, got {self.T}")
        for name in ("N0", "NT"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise LightRangeError(f"{name} must lie in (0, 1), got {getattr(self, name)}")
        if self.q < 0:
            raise LightRangeError(f"q must be >= 0, got {self.q}")
        if self.epsilon_policy not in EPSILON_POLICIES:
            raise LightRangeError(f"unknown epsilon_policy {self.epsilon_policy!r}")
        if self.eval_mode not in EVAL_MODES:
            raise LightRangeError(f"unknown eval_mode {self.eval_mode!r}")
        if self.epsilon_policy == "explicit":
            v = self.epsilon_value
            if v is None or not math.isfinite(v) or v <= 0:
                raise LightRangeError(f"explicit epsilon must be finite and > 0, got {v!r}")
        if self.eval_mode == "deformed" and not is_limit(self.q):
            if self.q * self.decline_coef >= 1 or self.q * self.growth_coef >= 1:
                raise QPoleError(
                    f"deformed exponential pole reachable: q={self.q}, "
                    f"q*(ln_q(NT) + E/r)={self.q * self.decline_coef:.6g}"
                )

    @cached_property
    def epsilon(self) -> float:
        if self.epsilon_policy == "unit":
            return 1.0
        if self.epsilon_policy == "harvest":
            return math.exp(-self.E / self.r)
        return float(self.epsilon_value)

    @cached_property
    def growth_coef(self) -> float:
        return q_log(self.N0, self.q)

    @cached_property
    def decline_coef(self) -> float:
        return q_log(self.NT, self.q) + self.E / self.r

    def replace(self, **changes) -> "LightParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "r": self.r,
            "E": self.E,
            "T": self.T,
            "N0": self.N0,
            "NT": self.NT,
            "q": self.q,
            "epsilon_policy": self.epsilon_policy,
            "epsilon": self.epsilon,
            "eval_mode": self.eval_mode,
        }

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> "LightParams":
        fields = {k: record[k] for k in ("r", "E", "T", "N0", "NT", "q") if k in record}
        policy = record.get("epsilon_policy", "harvest")
        value = record.get("epsilon") if policy == "explicit" else None
        return cls(
            **fields,
            epsilon_policy=policy,
            epsilon_value=value,
            eval_mode=record.get("eval_mode", "deformed"),
        )


def validate(params: LightParams | Mapping[str, Any]) -> LightParams:
    """Return checked parameters; raises ``LightRangeError`` or ``QPoleError``."""
    if isinstance(params, LightParams):
        return dataclasses.replace(params)
    return LightParams.from_dict(params)


def preset(name: str, variant: str = "light-v") -> LightParams:
    key = config_name(name)
    if variant not in VARIANTS:
        raise KeyError(f"unknown variant {variant!r}; expected one of {list(VARIANTS)}")
    values = PRESETS[key]
    return LightParams(
        r=values["r"],
        E=values["E"],
        T=0.75,
        N0=values["N0"],
        NT=values["N0"],
        q=VARIANTS[variant],
        epsilon_policy="harvest",
    )


def _inner(t, p: LightParams):
    t = np.asarray(t, dtype=float)
    growth = t < p.T
    exponent = np.where(growth, -p.r * t, -p.r * (t - p.T))
    decay = np.exp(np.minimum(exponent, _MAX_EXPONENT))
    coef = np.where(growth, p.growth_coef, p.decline_coef)
    return coef * decay


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def light_eval(t, params: LightParams):
    u = _inner(t, params)
    if params.eval_mode == "deformed":
        f = q_exp(u, params.q)
    else:
        f = np.exp(u)
    return _scalar(params.epsilon * np.asarray(f))


def light_deriv(t, params: LightParams):
    """Exact derivative of ``light_eval`` in ``t``; at ``t == T`` the decline branch is used."""
    u = _inner(t, params)
    if params.eval_mode == "deformed":
        df = q_exp_deriv(u, params.q)
    else:
        df = np.exp(u)
    return _scalar(-params.epsilon * params.r * u * np.asarray(df))


def light_value_and_deriv(t, params: LightParams):
    """``(light_eval(t), light_deriv(t))`` sharing one evaluation of the inner term."""
    u = _inner(t, params)
    if params.eval_mode == "deformed":
        f = np.asarray(q_exp(u, params.q))
        df = f if is_limit(params.q) else f ** (1.0 + params.q)
    else:
        f = df = np.exp(u)
    eps = params.epsilon
    return _scalar(eps * f), _scalar(-eps * params.r * u * df)


def continuous_nt(params: LightParams) -> float:
    """The ``NT`` at which the decline branch meets the growth branch at ``T`` when ``E = 0``.

    Both evaluation modes need ``q_log(NT) == q_log(N0) * exp(-r T)``.
    """
    return float(q_exp(params.growth_coef * math.exp(-params.r * params.T), params.q))
