"""Full Lyapunov-spectrum computation with horizon doubling.

The spectrum comes from the tangent-matrix log-norm sums accumulated by
the augmented integrator: lambda_i = log_norm_sums[i] / T, sorted
descending. A run is accepted once the sign pattern of the spectrum
(counts of positive / zero / negative exponents, with a configurable zero
band) stops changing between consecutive horizon doublings T, 2T, 4T, ...
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .integrate import IntegrationConfig, integrate, integrate_augmented
from .systems import SamplePoint, SystemDefinition

__all__ = [
    "CHAOTIC",
    "NON_CHAOTIC",
    "INDETERMINATE",
    "EPS_ZERO_DEFAULT",
    "LyapunovResult",
    "LyapunovConfig",
    "sign_pattern",
    "spectrum_fixed_T",
    "spectrum_with_doubling",
    "spectrum_from_config",
    "classify",
]

CHAOTIC = "chaotic"
NON_CHAOTIC = "non_chaotic"
INDETERMINATE = "indeterminate"

# Zero band (in 1/time units of the system) for sign-pattern counting.
EPS_ZERO_DEFAULT = 1e-3


@dataclass(frozen=True)
class LyapunovResult:
    spectrum: tuple[float, ...]  # sorted descending
    mle: float
    t_final: float
    doublings: int
    converged: bool
    sign_pattern: tuple[int, int, int]  # (positive, zero, negative) counts

    def to_dict(self) -> dict:
        return {
            "spectrum": list(self.spectrum),
            "mle": self.mle,
            "t_final": self.t_final,
            "doublings": self.doublings,
            "converged": self.converged,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class LyapunovConfig:
    """Bundle of every knob a spectrum run needs, for callers (sampler,
    CLI, service) that pass the whole recipe around."""

    t0_horizon: float = 100.0
    dt: float = 0.01
    renorm_every: int = 10
    max_doublings: int = 6
    eps_zero: float = EPS_ZERO_DEFAULT
    transient_frac: float = 0.1
    blowup_cap: float = 1e8

    def __post_init__(self) -> None:
        if not self.t0_horizon > 0:
            raise ValueError("t0_horizon must be positive")
        if self.max_doublings < 1:
            raise ValueError("max_doublings must be >= 1")
        if not 0.0 <= self.transient_frac < 1.0:
            raise ValueError("transient_frac must be in [0, 1)")

    def integration(self) -> IntegrationConfig:
        return IntegrationConfig(dt=self.dt, blowup_cap=self.blowup_cap)


def sign_pattern(spectrum: np.ndarray, eps_zero: float = EPS_ZERO_DEFAULT) -> tuple[int, int, int]:
    spec = np.asarray(spectrum)
    pos = int(np.sum(spec > eps_zero))
    zero = int(np.sum(np.abs(spec) <= eps_zero))
    neg = int(np.sum(spec < -eps_zero))
    return (pos, zero, neg)


def spectrum_fixed_T(
    system: SystemDefinition,
    sample: SamplePoint,
    T: float,
    cfg: IntegrationConfig,
    renorm_every: int = 10,
    transient_frac: float = 0.1,
) -> Optional[np.ndarray]:
    """Spectrum over one horizon, or None when the orbit blows up.

    A transient of transient_frac * T is integrated first without
    accumulating log norms, then the tangent matrix starts from identity.
    """
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    t_start = cfg.t0
    state = sample.state_array()
    if transient_frac > 0.0:
        t_tr = transient_frac * T
        traj = integrate(system, sample, cfg.t0 + t_tr, cfg)
        if traj.terminated_early:
            return None
        state = traj.final_state
        t_start = cfg.t0 + t_tr
    aug_cfg = dataclasses.replace(cfg, t0=t_start, record_stride=0)
    aug_sample = SamplePoint.of(system, sample.param_values, state)
    res = integrate_augmented(
        system, aug_sample, t_start + T, aug_cfg, tangent_init=None,
        renorm_every=renorm_every,
    )
    if res.terminated_early:
        return None
    lams = np.sort(res.log_norm_sums / T)[::-1]
    if not np.all(np.isfinite(lams)):
        return None
    return lams


def spectrum_with_doubling(
    system: SystemDefinition,
    sample: SamplePoint,
    T0: float,
    cfg: IntegrationConfig,
    renorm_every: int = 10,
    max_doublings: int = 6,
    eps_zero: float = EPS_ZERO_DEFAULT,
    transient_frac: float = 0.1,
) -> LyapunovResult:
    """Evaluate spectra at T0, 2*T0, 4*T0, ... until the sign pattern
    repeats between consecutive horizons.

    Returns the longer-horizon spectrum of the first matching pair with
    converged=True; exhausting max_doublings (or losing the orbit to
    blowup) yields converged=False, with NaN spectrum in the blowup case.
    """
    if not T0 > 0:
        raise ValueError(f"T0 must be positive, got {T0}")
    if max_doublings < 1:
        raise ValueError(f"max_doublings must be >= 1, got {max_doublings}")
    n = system.dim
    prev_pattern: Optional[tuple[int, int, int]] = None
    spec = None
    pattern = (0, 0, 0)
    for k in range(max_doublings + 1):
        T = T0 * (2.0 ** k)
        spec = spectrum_fixed_T(system, sample, T, cfg, renorm_every, transient_frac)
        if spec is None:
            return LyapunovResult(
                spectrum=tuple([math.nan] * n),
                mle=math.nan,
                t_final=T,
                doublings=k,
                converged=False,
                sign_pattern=(0, 0, n),
            )
        pattern = sign_pattern(spec, eps_zero)
        if prev_pattern is not None and pattern == prev_pattern:
            return LyapunovResult(
                spectrum=tuple(float(v) for v in spec),
                mle=float(spec[0]),
                t_final=T,
                doublings=k,
                converged=True,
                sign_pattern=pattern,
            )
        prev_pattern = pattern
    return LyapunovResult(
        spectrum=tuple(float(v) for v in spec),
        mle=float(spec[0]),
        t_final=T0 * (2.0 ** max_doublings),
        doublings=max_doublings,
        converged=False,
        sign_pattern=pattern,
    )


def spectrum_from_config(
    system: SystemDefinition,
    sample: SamplePoint,
    lcfg: LyapunovConfig,
) -> LyapunovResult:
    return spectrum_with_doubling(
        system,
        sample,
        lcfg.t0_horizon,
        lcfg.integration(),
        renorm_every=lcfg.renorm_every,
        max_doublings=lcfg.max_doublings,
        eps_zero=lcfg.eps_zero,
        transient_frac=lcfg.transient_frac,
    )


def classify(div: float, lr: LyapunovResult, eps_zero: float = EPS_ZERO_DEFAULT) -> str:
    """Chaos verdict for one sample: volume contraction at the initial
    point (div < 0) plus a converged positive top exponent."""
    if not lr.converged:
        return INDETERMINATE
    if div < 0 and math.isfinite(lr.mle) and lr.mle > eps_zero:
        return CHAOTIC
    return NON_CHAOTIC
