"""The eleven experiment configurations: reward reshaping and critic auxiliary input."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .appraisal import AppraisalVector
from .errors import ConfigError

AUX_NONE = "none"
AUX_NOISE = "noise6"
AUX_APPRAISAL = "appraisal6"
AUX_WIDTH = {AUX_NONE: 0, AUX_NOISE: 6, AUX_APPRAISAL: 6}


@dataclass(frozen=True)
class ShapingConfig:
    """One named configuration.

    The reshaped reward is ``r - sum(c_i * (1 - z_i)) - sum(d_i * z_i)`` where the
    ``complement_weights`` ``c_i`` and ``direct_weights`` ``d_i`` are indexed by
    appraisal name (``mr``, ``cp``, ``gc``, ...).
    """

    name: str
    aux_mode: str
    complement_weights: tuple[tuple[str, float], ...] = ()
    direct_weights: tuple[tuple[str, float], ...] = ()

    @property
    def aux_width(self) -> int:
        return AUX_WIDTH[self.aux_mode]

    @property
    def reshapes(self) -> bool:
        return bool(self.complement_weights or self.direct_weights)


def _rs(name, complement=(), direct=()):
    return ShapingConfig(name, AUX_APPRAISAL, tuple(complement), tuple(direct))


CONFIGS: dict[str, ShapingConfig] = {
    "baseline": ShapingConfig("baseline", AUX_NONE),
    "noise": ShapingConfig("noise", AUX_NOISE),
    "appraisal": ShapingConfig("appraisal", AUX_APPRAISAL),
    "rsv1": _rs("rsv1", [("mr", 0.01)]),
    "rsv2": _rs("rsv2", [("cp", 0.01)]),
    "rsv3": _rs("rsv3", [("gc", 0.01)]),
    "rsv4": _rs("rsv4", [("mr", 0.01), ("gc", 0.01)]),
    "rsv5": _rs("rsv5", [("mr", 0.01), ("cp", 0.01), ("gc", 0.01)]),
    "rsv6": _rs("rsv6", direct=[("mr", 0.1), ("cp", 0.1), ("gc", 0.1)]),
    "rsv7a": _rs("rsv7a", [("cp", 0.01)], [("mr", 0.1), ("gc", 0.1)]),
    "rsv7b": _rs("rsv7b", [("cp", 0.1)], [("mr", 0.1), ("gc", 0.1)]),
}


def get_config(name: str) -> ShapingConfig:
    try:
        return CONFIGS[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown shaping configuration {name!r}; valid: {', '.join(CONFIGS)}") from None


def penalty(z: AppraisalVector, cfg: ShapingConfig) -> float:
    """Amount subtracted from the reward, ``w_rf * rho(z)`` in one number."""
    total = 0.0
    for field, coef in cfg.complement_weights:
        total += coef * (1.0 - getattr(z, field))
    for field, coef in cfg.direct_weights:
        total += coef * getattr(z, field)
    return total


def reshape(r: float, z: AppraisalVector, cfg: ShapingConfig) -> float:
    return r - penalty(z, cfg)


def critic_aux(cfg: ShapingConfig, z: AppraisalVector, rng: np.random.Generator | None = None) -> np.ndarray:
    """Extra critic input for ``cfg``: nothing, six uniform draws, or the appraisals."""
    if cfg.aux_mode == AUX_NONE:
        return np.zeros(0, dtype=np.float32)
    if cfg.aux_mode == AUX_NOISE:
        if rng is None:
            raise ConfigError("noise aux mode needs an RNG stream")
        return rng.uniform(0.0, 1.0, size=6).astype(np.float32)
    return np.asarray(z, dtype=np.float32)
