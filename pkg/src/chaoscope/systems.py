"""ODE system abstraction: definitions, sample points, search boxes, registry.

A system is a first-order ODE dY/dt = f(Y, t; p) with an optional analytic
Jacobian. Definitions are immutable after construction and safe to share
across threads and worker processes; the evaluators are pure functions of
their arguments.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "ParamDescriptor",
    "SystemDefinition",
    "SamplePoint",
    "BoxCoord",
    "SearchBox",
    "eval_rhs",
    "eval_jacobian",
    "divergence_at",
    "fd_jacobian",
    "register_system",
    "get_system",
    "list_systems",
    "catalog",
    "catalog_json",
]

RhsFn = Callable[[float, np.ndarray, np.ndarray], np.ndarray]
JacFn = Callable[[float, np.ndarray, np.ndarray], np.ndarray]

# Central finite differences with step h_j = FD_STEP_REL * max(1, |Y_j|).
FD_STEP_REL = 1e-6


@dataclass(frozen=True)
class ParamDescriptor:
    """One named system parameter with a default value and display units."""

    name: str
    default: float
    units: str = "dimensionless"
    description: str = ""


@dataclass(frozen=True)
class SystemDefinition:
    """A parameterized ODE system.

    ``rhs(t, state, params) -> dstate`` and the optional analytic
    ``jac(t, state, params) -> n x n matrix`` must be pure. For built-in
    systems both are numba-compiled module-level functions, which keeps
    definitions picklable for the sampling worker pool.
    """

    id: str
    dim: int
    state_names: tuple[str, ...]
    params: tuple[ParamDescriptor, ...]
    rhs: RhsFn
    jac: Optional[JacFn] = None
    time_dependent: bool = False
    default_state: tuple[float, ...] = ()
    hidden: bool = False

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"system {self.id!r}: dim must be >= 1")
        if len(self.state_names) != self.dim:
            raise ValueError(f"system {self.id!r}: need {self.dim} state names")
        if not self.params:
            raise ValueError(f"system {self.id!r}: parameter list may not be empty")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError(f"system {self.id!r}: duplicate parameter names")
        if len(set(self.state_names)) != self.dim:
            raise ValueError(f"system {self.id!r}: duplicate state names")
        if self.default_state and len(self.default_state) != self.dim:
            raise ValueError(f"system {self.id!r}: default_state length mismatch")

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    def default_params(self) -> np.ndarray:
        return np.array([p.default for p in self.params], dtype=np.float64)

    def default_initial_state(self) -> np.ndarray:
        if self.default_state:
            return np.array(self.default_state, dtype=np.float64)
        return np.zeros(self.dim)

    def param_index(self, name: str) -> int:
        for i, p in enumerate(self.params):
            if p.name == name:
                return i
        raise KeyError(f"system {self.id!r} has no parameter {name!r}")

    def state_index(self, name: str) -> int:
        try:
            return self.state_names.index(name)
        except ValueError:
            raise KeyError(f"system {self.id!r} has no state {name!r}") from None


@dataclass(frozen=True)
class SamplePoint:
    """One element of the combined parameter / initial-condition space."""

    system_id: str
    param_values: tuple[float, ...]
    initial_state: tuple[float, ...]

    @staticmethod
    def of(system: SystemDefinition, params: Sequence[float], state: Sequence[float]) -> "SamplePoint":
        params = tuple(float(v) for v in params)
        state = tuple(float(v) for v in state)
        if len(params) != len(system.params):
            raise ValueError(
                f"expected {len(system.params)} parameter values, got {len(params)}"
            )
        if len(state) != system.dim:
            raise ValueError(f"expected {system.dim} state values, got {len(state)}")
        return SamplePoint(system.id, params, state)

    def params_array(self) -> np.ndarray:
        return np.array(self.param_values, dtype=np.float64)

    def state_array(self) -> np.ndarray:
        return np.array(self.initial_state, dtype=np.float64)


@dataclass(frozen=True)
class BoxCoord:
    """One searchable coordinate: a parameter or an initial condition."""

    name: str
    lo: float
    hi: float
    kind: str = "parameter"  # "parameter" | "initial_condition"

    def __post_init__(self) -> None:
        if self.kind not in ("parameter", "initial_condition"):
            raise ValueError(f"bad coordinate kind {self.kind!r}")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ValueError(f"coordinate {self.name!r}: bounds must be finite")
        if not self.lo < self.hi:
            raise ValueError(f"coordinate {self.name!r}: need lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def label(self) -> str:
        """Flat-namespace display name; initial conditions carry an ic. prefix."""
        return f"ic.{self.name}" if self.kind == "initial_condition" else self.name


@dataclass(frozen=True)
class SearchBox:
    """Rectangular search region over parameters and initial conditions."""

    coords: tuple[BoxCoord, ...]

    def __post_init__(self) -> None:
        if not self.coords:
            raise ValueError("search box needs at least one coordinate")
        labels = [c.label for c in self.coords]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate coordinates in search box")

    def validate_for(self, system: SystemDefinition) -> None:
        for c in self.coords:
            if c.kind == "parameter":
                system.param_index(c.name)
            else:
                system.state_index(c.name)

    def lows(self) -> np.ndarray:
        return np.array([c.lo for c in self.coords], dtype=np.float64)

    def highs(self) -> np.ndarray:
        return np.array([c.hi for c in self.coords], dtype=np.float64)

    def widths(self) -> np.ndarray:
        return self.highs() - self.lows()

    def labels(self) -> tuple[str, ...]:
        return tuple(c.label for c in self.coords)

    def contains(self, vec: np.ndarray) -> bool:
        return bool(np.all(vec >= self.lows()) and np.all(vec <= self.highs()))

    def to_sample(self, system: SystemDefinition, vec: np.ndarray) -> SamplePoint:
        """Embed a box vector into a full sample; uncovered coordinates pinned at defaults."""
        params = system.default_params()
        state = system.default_initial_state()
        for value, c in zip(vec, self.coords):
            if c.kind == "parameter":
                params[system.param_index(c.name)] = value
            else:
                state[system.state_index(c.name)] = value
        return SamplePoint.of(system, params, state)


def _check_lengths(system: SystemDefinition, state: np.ndarray, params: np.ndarray) -> None:
    if state.shape != (system.dim,):
        raise ValueError(f"state must have shape ({system.dim},), got {state.shape}")
    if params.shape != (len(system.params),):
        raise ValueError(
            f"params must have shape ({len(system.params)},), got {params.shape}"
        )


def eval_rhs(system: SystemDefinition, t: float, state: Sequence[float], params: Sequence[float]) -> np.ndarray:
    """Evaluate the derivative vector. Non-finite output is returned as-is;
    callers treat it as a numerical-blowup signal."""
    state = np.asarray(state, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    _check_lengths(system, state, params)
    return np.asarray(system.rhs(t, state, params), dtype=np.float64)


def fd_jacobian(rhs: RhsFn, t: float, state: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian with scale-aware step per coordinate."""
    n = state.shape[0]
    J = np.empty((n, n))
    for j in range(n):
        h = FD_STEP_REL * max(1.0, abs(state[j]))
        up = state.copy()
        up[j] += h
        dn = state.copy()
        dn[j] -= h
        J[:, j] = (np.asarray(rhs(t, up, params)) - np.asarray(rhs(t, dn, params))) / (2.0 * h)
    return J


def eval_jacobian(system: SystemDefinition, t: float, state: Sequence[float], params: Sequence[float]) -> np.ndarray:
    """Evaluate d(rhs)_i / d(state)_j, analytically when available."""
    state = np.asarray(state, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    _check_lengths(system, state, params)
    if system.jac is not None:
        return np.asarray(system.jac(t, state, params), dtype=np.float64)
    return fd_jacobian(system.rhs, t, state, params)


def divergence_at(system: SystemDefinition, sample: SamplePoint) -> float:
    """Trace of the Jacobian at t=0 and the sample's initial state.

    A negative value is the volume-contraction screen used ahead of the
    Lyapunov test; NaN/Inf propagates to the caller as a blowup signal.
    """
    if sample.system_id != system.id:
        raise ValueError(f"sample targets {sample.system_id!r}, not {system.id!r}")
    J = eval_jacobian(system, 0.0, sample.state_array(), sample.params_array())
    return float(np.trace(J))


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

_REGISTRY: dict[str, SystemDefinition] = {}


def register_system(system: SystemDefinition, replace: bool = False) -> SystemDefinition:
    if system.id in _REGISTRY and not replace:
        raise ValueError(f"system id {system.id!r} already registered")
    _REGISTRY[system.id] = system
    return system


def get_system(system_id: str) -> SystemDefinition:
    try:
        return _REGISTRY[system_id]
    except KeyError:
        raise KeyError(f"unknown system {system_id!r}") from None


def list_systems(include_hidden: bool = False) -> list[SystemDefinition]:
    out = [s for s in _REGISTRY.values() if include_hidden or not s.hidden]
    return sorted(out, key=lambda s: s.id)


def catalog(include_hidden: bool = False) -> list[dict]:
    """Catalog rows in the wire format served by the HTTP API and the CLI."""
    rows = []
    for s in list_systems(include_hidden):
        rows.append(
            {
                "id": s.id,
                "dim": s.dim,
                "state_names": list(s.state_names),
                "params": [
                    {"name": p.name, "default": p.default, "units": p.units}
                    for p in s.params
                ],
                "time_dependent": s.time_dependent,
            }
        )
    return rows


def catalog_json(include_hidden: bool = False) -> str:
    return json.dumps(catalog(include_hidden), indent=2)
