"""Fixed-step classical RK4 integration of plain and tangent-augmented systems.

The augmented form co-integrates the state Y and an n x n tangent matrix V
(dV/dt = J(Y, t) V) with one shared step, renormalizing the tangent columns
by modified Gram-Schmidt on a fixed cadence and accumulating the log of
each column norm. Those sums are the raw material for Lyapunov spectra.

Systems whose rhs/jac are numba-compiled run through compiled loop drivers
built once per (rhs, jac) pair; everything else falls back to equivalent
pure-Python loops. Within a path, the fiducial trajectory of the augmented
driver is bit-identical to the plain one.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numba import njit
from numba.core.dispatcher import Dispatcher

from .systems import FD_STEP_REL, SamplePoint, SystemDefinition, fd_jacobian

__all__ = [
    "IntegrationConfig",
    "Trajectory",
    "AugmentedResult",
    "integrate",
    "integrate_augmented",
    "trajectory_csv",
    "COMPLETED",
    "BLOWUP",
    "NONFINITE",
]

COMPLETED = "completed"
BLOWUP = "blowup"
NONFINITE = "nonfinite"

_STATUS = {0: COMPLETED, 1: BLOWUP, 2: NONFINITE}


@dataclass(frozen=True)
class IntegrationConfig:
    """Step size and guard rails for a fixed-step run.

    ``record_stride=0`` keeps only the final state; a positive stride
    records every stride-th step (plus the initial and final states).
    """

    dt: float = 0.01
    t0: float = 0.0
    blowup_cap: float = 1e8
    record_stride: int = 0

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.blowup_cap > 0:
            raise ValueError(f"blowup_cap must be positive, got {self.blowup_cap}")
        if self.record_stride < 0:
            raise ValueError(f"record_stride must be >= 0, got {self.record_stride}")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    terminated_early: bool
    termination_reason: str

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])


@dataclass
class AugmentedResult:
    final_state: np.ndarray
    final_tangent: np.ndarray
    log_norm_sums: np.ndarray
    terminated_early: bool
    termination_reason: str
    t_reached: float
    renorms: int


def _plan_steps(t0: float, t_end: float, dt: float) -> tuple[int, float]:
    """Number of full steps plus the length of a final shortened step
    (0.0 when the grid lands on t_end already)."""
    span = t_end - t0
    n_full = int(math.floor(span / dt))
    rem = span - n_full * dt
    if rem > 1e-9 * dt:
        return n_full, t_end - (t0 + n_full * dt)
    return n_full, 0.0


# ---------------------------------------------------------------------------
# compiled drivers, built lazily per (rhs, jac) pair
# ---------------------------------------------------------------------------

_PLAIN_DRIVERS: dict = {}
_AUG_DRIVERS: dict = {}
_FD_JACS: dict = {}


def _make_fd_jac_njit(rhs):
    rel = FD_STEP_REL

    @njit
    def jac(t, y, p):
        n = y.shape[0]
        J = np.empty((n, n))
        for j in range(n):
            h = rel * max(1.0, abs(y[j]))
            up = y.copy()
            up[j] += h
            dn = y.copy()
            dn[j] -= h
            fu = rhs(t, up, p)
            fd = rhs(t, dn, p)
            for i in range(n):
                J[i, j] = (fu[i] - fd[i]) / (2.0 * h)
        return J

    return jac


def _jit_jac_for(system: SystemDefinition):
    if system.jac is not None:
        return system.jac
    key = system.rhs
    if key not in _FD_JACS:
        _FD_JACS[key] = _make_fd_jac_njit(system.rhs)
    return _FD_JACS[key]


def _build_plain_driver(rhs):
    @njit
    def run(t0, y0, p, dt, n_full, dt_last, cap, stride, rec_t, rec_y):
        n = y0.shape[0]
        y = y0.copy()
        n_rec = 0
        if stride > 0:
            rec_t[0] = t0
            for i in range(n):
                rec_y[0, i] = y[i]
            n_rec = 1
        n_total = n_full + (1 if dt_last > 0.0 else 0)
        status = 0
        t_prev = t0
        for k in range(n_total):
            h = dt if k < n_full else dt_last
            t = t_prev
            k1 = rhs(t, y, p)
            y2 = y + 0.5 * h * k1
            k2 = rhs(t + 0.5 * h, y2, p)
            y3 = y + 0.5 * h * k2
            k3 = rhs(t + 0.5 * h, y3, p)
            y4 = y + h * k3
            k4 = rhs(t + h, y4, p)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t_prev = t0 + (k + 1) * dt if k < n_full else t + h
            bad = 0
            for i in range(n):
                if not np.isfinite(y[i]):
                    bad = 2
            if bad == 0:
                for i in range(n):
                    if abs(y[i]) > cap:
                        bad = 1
            is_last = k == n_total - 1
            if bad != 0 or (stride > 0 and (k + 1) % stride == 0) or is_last:
                rec_t[n_rec] = t_prev
                for i in range(n):
                    rec_y[n_rec, i] = y[i]
                n_rec += 1
            if bad != 0:
                status = bad
                break
        return y, t_prev, n_rec, status

    return run


def _build_aug_driver(rhs, jac):
    @njit
    def run(t0, y0, V0, p, dt, n_full, dt_last, cap, renorm_every, step_offset,
            sums, final_flush):
        # n_full/dt_last describe this call; step_offset makes the time
        # arithmetic of resumed (block-wise) calls identical to one shot.
        n = y0.shape[0]
        y = y0.copy()
        V = V0.copy()
        n_total = n_full + (1 if dt_last > 0.0 else 0)
        status = 0
        t_prev = t0 + step_offset * dt
        pending = step_offset % renorm_every
        renorms = 0
        for k in range(n_total):
            h = dt if k < n_full else dt_last
            t = t_prev
            k1 = rhs(t, y, p)
            K1 = jac(t, y, p) @ V
            y2 = y + 0.5 * h * k1
            V2 = V + 0.5 * h * K1
            k2 = rhs(t + 0.5 * h, y2, p)
            K2 = jac(t + 0.5 * h, y2, p) @ V2
            y3 = y + 0.5 * h * k2
            V3 = V + 0.5 * h * K2
            k3 = rhs(t + 0.5 * h, y3, p)
            K3 = jac(t + 0.5 * h, y3, p) @ V3
            y4 = y + h * k3
            V4 = V + h * K3
            k4 = rhs(t + h, y4, p)
            K4 = jac(t + h, y4, p) @ V4
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            V = V + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
            t_prev = t0 + (step_offset + k + 1) * dt if k < n_full else t + h
            bad = 0
            for i in range(n):
                if not np.isfinite(y[i]):
                    bad = 2
            if bad == 0:
                for i in range(n):
                    if abs(y[i]) > cap:
                        bad = 1
            if bad != 0:
                status = bad
                return y, V, t_prev, status, renorms
            pending += 1
            if pending == renorm_every or (final_flush and k == n_total - 1 and pending > 0):
                for j in range(n):
                    for i in range(j):
                        r = 0.0
                        for q in range(n):
                            r += V[q, i] * V[q, j]
                        for q in range(n):
                            V[q, j] -= r * V[q, i]
                    nrm = 0.0
                    for q in range(n):
                        nrm += V[q, j] * V[q, j]
                    nrm = np.sqrt(nrm)
                    if not np.isfinite(nrm) or nrm == 0.0:
                        status = 2
                        return y, V, t_prev, status, renorms
                    sums[j] += np.log(nrm)
                    for q in range(n):
                        V[q, j] /= nrm
                pending = 0
                renorms += 1
        return y, V, t_prev, status, renorms

    return run


def _is_jit(fn) -> bool:
    return isinstance(fn, Dispatcher)


def _jit_capable(system: SystemDefinition) -> bool:
    if not _is_jit(system.rhs):
        return False
    return system.jac is None or _is_jit(system.jac)


def _plain_driver_for(system: SystemDefinition):
    key = system.rhs
    if key not in _PLAIN_DRIVERS:
        _PLAIN_DRIVERS[key] = _build_plain_driver(system.rhs)
    return _PLAIN_DRIVERS[key]


def _aug_driver_for(system: SystemDefinition):
    key = (system.rhs, system.jac)
    if key not in _AUG_DRIVERS:
        _AUG_DRIVERS[key] = _build_aug_driver(system.rhs, _jit_jac_for(system))
    return _AUG_DRIVERS[key]


# ---------------------------------------------------------------------------
# pure-Python fallback drivers (same arithmetic, same step plan)
# ---------------------------------------------------------------------------

def _py_plain(rhs, t0, y0, p, dt, n_full, dt_last, cap, stride, rec_t, rec_y):
    y = y0.copy()
    n_rec = 0
    if stride > 0:
        rec_t[0] = t0
        rec_y[0] = y
        n_rec = 1
    n_total = n_full + (1 if dt_last > 0.0 else 0)
    status = 0
    t_prev = t0
    for k in range(n_total):
        h = dt if k < n_full else dt_last
        t = t_prev
        k1 = np.asarray(rhs(t, y, p))
        k2 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k1, p))
        k3 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k2, p))
        k4 = np.asarray(rhs(t + h, y + h * k3, p))
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t_prev = t0 + (k + 1) * dt if k < n_full else t + h
        if not np.all(np.isfinite(y)):
            status = 2
        elif np.any(np.abs(y) > cap):
            status = 1
        is_last = k == n_total - 1
        if status != 0 or (stride > 0 and (k + 1) % stride == 0) or is_last:
            rec_t[n_rec] = t_prev
            rec_y[n_rec] = y
            n_rec += 1
        if status != 0:
            break
    return y, t_prev, n_rec, status


def _py_aug(rhs, jac, t0, y0, V0, p, dt, n_full, dt_last, cap, renorm_every,
            step_offset, sums, final_flush, on_renorm=None):
    y = y0.copy()
    V = V0.copy()
    n_total = n_full + (1 if dt_last > 0.0 else 0)
    status = 0
    t_prev = t0
    pending = step_offset % renorm_every
    renorms = 0
    jac_fn = jac if jac is not None else (lambda t, yy, pp: fd_jacobian(rhs, t, yy, pp))
    for k in range(n_total):
        h = dt if k < n_full else dt_last
        t = t_prev
        k1 = np.asarray(rhs(t, y, p))
        K1 = np.asarray(jac_fn(t, y, p)) @ V
        y2 = y + 0.5 * h * k1
        V2 = V + 0.5 * h * K1
        k2 = np.asarray(rhs(t + 0.5 * h, y2, p))
        K2 = np.asarray(jac_fn(t + 0.5 * h, y2, p)) @ V2
        y3 = y + 0.5 * h * k2
        V3 = V + 0.5 * h * K2
        k3 = np.asarray(rhs(t + 0.5 * h, y3, p))
        K3 = np.asarray(jac_fn(t + 0.5 * h, y3, p)) @ V3
        y4 = y + h * k3
        V4 = V + h * K3
        k4 = np.asarray(rhs(t + h, y4, p))
        K4 = np.asarray(jac_fn(t + h, y4, p)) @ V4
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        V = V + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
        t_prev = t0 + (k + 1) * dt if k < n_full else t + h
        if not np.all(np.isfinite(y)):
            status = 2
        elif np.any(np.abs(y) > cap):
            status = 1
        if status != 0:
            return y, V, t_prev, status, renorms
        pending += 1
        if pending == renorm_every or (final_flush and k == n_total - 1 and pending > 0):
            n = y.shape[0]
            for j in range(n):
                for i in range(j):
                    r = float(V[:, i] @ V[:, j])
                    V[:, j] -= r * V[:, i]
                nrm = float(np.sqrt(V[:, j] @ V[:, j]))
                if not np.isfinite(nrm) or nrm == 0.0:
                    return y, V, t_prev, 2, renorms
                sums[j] += np.log(nrm)
                V[:, j] /= nrm
            pending = 0
            renorms += 1
            if on_renorm is not None:
                on_renorm(sums.copy())
    return y, V, t_prev, status, renorms


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def _check_sample(system: SystemDefinition, sample: SamplePoint) -> tuple[np.ndarray, np.ndarray]:
    if sample.system_id != system.id:
        raise ValueError(f"sample targets {sample.system_id!r}, not {system.id!r}")
    y0 = sample.state_array()
    p = sample.params_array()
    if y0.shape != (system.dim,) or p.shape != (len(system.params),):
        raise ValueError("sample dimensions do not match the system")
    return y0, p


def integrate(
    system: SystemDefinition,
    sample: SamplePoint,
    t_end: float,
    cfg: IntegrationConfig,
) -> Trajectory:
    """Run classical RK4 from cfg.t0 to t_end (final step shortened to land
    exactly). Early termination on blowup or non-finite state is a normal
    return, flagged on the trajectory."""
    y0, p = _check_sample(system, sample)
    if not t_end > cfg.t0:
        raise ValueError(f"t_end must exceed t0, got t_end={t_end}, t0={cfg.t0}")
    n_full, dt_last = _plan_steps(cfg.t0, t_end, cfg.dt)
    n_total = n_full + (1 if dt_last > 0.0 else 0)
    if n_total == 0:
        return Trajectory(np.array([t_end]), y0[None, :].copy(), False, COMPLETED)
    stride = cfg.record_stride
    cap_rows = 2 + (n_total // stride + 1 if stride > 0 else 0)
    rec_t = np.empty(cap_rows)
    rec_y = np.empty((cap_rows, system.dim))

    if _jit_capable(system):
        run = _plain_driver_for(system)
        y, t_reached, n_rec, status = run(
            cfg.t0, y0, p, cfg.dt, n_full, dt_last, cfg.blowup_cap, stride, rec_t, rec_y
        )
    else:
        y, t_reached, n_rec, status = _py_plain(
            system.rhs, cfg.t0, y0, p, cfg.dt, n_full, dt_last, cfg.blowup_cap,
            stride, rec_t, rec_y
        )

    times = rec_t[:n_rec].copy()
    states = rec_y[:n_rec].copy()
    if status == 0 and n_rec > 0:
        times[-1] = t_end  # the shortened final step lands here by construction
    return Trajectory(
        times=times,
        states=states,
        terminated_early=status != 0,
        termination_reason=_STATUS[status],
    )


def integrate_augmented(
    system: SystemDefinition,
    sample: SamplePoint,
    t_end: float,
    cfg: IntegrationConfig,
    tangent_init: Optional[np.ndarray] = None,
    renorm_every: int = 10,
    on_renorm: Optional[Callable[[np.ndarray], None]] = None,
    final_flush: bool = True,
) -> AugmentedResult:
    """Co-integrate state and tangent matrix with a shared RK4 step.

    Tangent columns are re-orthonormalized every ``renorm_every`` steps by
    modified Gram-Schmidt, accumulating each column's log norm into
    ``log_norm_sums`` first; a trailing flush captures any partial cadence
    at t_end. ``on_renorm`` receives a copy of the running sums after each
    renormalization.
    """
    y0, p = _check_sample(system, sample)
    if not t_end > cfg.t0:
        raise ValueError(f"t_end must exceed t0, got t_end={t_end}, t0={cfg.t0}")
    if renorm_every < 1:
        raise ValueError(f"renorm_every must be >= 1, got {renorm_every}")
    n = system.dim
    V0 = np.eye(n) if tangent_init is None else np.array(tangent_init, dtype=np.float64)
    if V0.shape != (n, n):
        raise ValueError(f"tangent_init must be {n}x{n}, got {V0.shape}")

    n_full, dt_last = _plan_steps(cfg.t0, t_end, cfg.dt)
    sums = np.zeros(n)
    if n_full == 0 and dt_last == 0.0:
        return AugmentedResult(y0, V0, sums, False, COMPLETED, t_end, 0)

    if not _jit_capable(system):
        y, V, t_reached, status, renorms = _py_aug(
            system.rhs, system.jac, cfg.t0, y0, V0, p, cfg.dt, n_full, dt_last,
            cfg.blowup_cap, renorm_every, 0, sums, final_flush, on_renorm
        )
        return AugmentedResult(y, V, sums, status != 0, _STATUS[status], t_reached, renorms)

    run = _aug_driver_for(system)
    if on_renorm is None:
        y, V, t_reached, status, renorms = run(
            cfg.t0, y0, V0, p, cfg.dt, n_full, dt_last, cfg.blowup_cap,
            renorm_every, 0, sums, final_flush
        )
        return AugmentedResult(y, V, sums, status != 0, _STATUS[status], t_reached, renorms)

    # Streaming mode: drive one renormalization block at a time so the
    # callback fires at the true cadence. Arithmetic is identical to the
    # single-shot path because global step indices are threaded through.
    y = y0
    V = V0
    total_renorms = 0
    step = 0
    n_total = n_full + (1 if dt_last > 0.0 else 0)
    status = 0
    t_reached = cfg.t0
    while step < n_total:
        block = min(renorm_every - (step % renorm_every), n_total - step)
        blk_full = min(block, max(n_full - step, 0))
        blk_last = dt_last if step + block > n_full else 0.0
        is_final = step + block >= n_total
        y, V, t_reached, status, renorms = run(
            cfg.t0, y, V, p, cfg.dt, blk_full, blk_last, cfg.blowup_cap,
            renorm_every, step, sums, final_flush and is_final
        )
        step += block
        if renorms:
            total_renorms += renorms
            on_renorm(sums.copy())
        if status != 0:
            break
    return AugmentedResult(y, V, sums, status != 0, _STATUS[status], t_reached, total_renorms)


def trajectory_csv(traj: Trajectory, state_names: Sequence[str]) -> str:
    """Render a trajectory as CSV (`t,<state names...>`); early termination
    appends a comment row naming the reason."""
    buf = io.StringIO()
    buf.write("t," + ",".join(state_names) + "\n")
    for t, row in zip(traj.times, traj.states):
        buf.write(repr(float(t)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
    if traj.terminated_early:
        buf.write(f"# terminated_early reason={traj.termination_reason} t={traj.final_time!r}\n")
    return buf.getvalue()
