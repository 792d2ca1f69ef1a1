"""Built-in ODE systems and their parameter maps.

Four model families ship with the toolkit:

* ``quadratic3``: the general three-variable quadratic flow with 30
  coefficients, all exposed as parameters.
* ``kot_monod``: the dimensionless forced double-Monod chemostat
  (substrate x, prey y, predator z) with sinusoidal substrate forcing.
* ``pgpr``: a four-state rhizosphere model (two competing microbe pools,
  organic substrate, oxygen) driven by a truncated Fourier square wave.
* ``becks_dim`` / ``becks_rescaled``: a rods/cocci/predator/nutrient
  chemostat in dimensional form and its eleven-parameter rescaling.

Two hidden systems (``lorenz``, ``lin2``) back the validation suite.

All right-hand sides and analytic Jacobians are module-level
numba-compiled functions of ``(t, state, params)``, so system definitions
stay picklable and the integrator can inline them into its compiled loops.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Optional, Sequence

import numpy as np
from numba import njit

from .systems import ParamDescriptor, SamplePoint, SystemDefinition, register_system

__all__ = [
    "QUADRATIC3_COEFF_NAMES",
    "make_quadratic3",
    "load_quadratic3_coeffs",
    "quadratic3_divergence",
    "kot_nondimensionalize",
    "make_kot_monod",
    "KOT_TABLE",
    "fourier_square_wave",
    "InteractionSpec",
    "pgpr_growth_rate",
    "make_pgpr",
    "load_pgpr_config",
    "PGPR_REQUIRED_KEYS",
    "BECKS_TABLE",
    "make_becks_dim",
    "BecksHatParams",
    "becks_rescale_params",
    "make_becks_rescaled",
    "becks_map_state",
    "make_lorenz",
    "make_linear2",
]


# ---------------------------------------------------------------------------
# quadratic3: general 3-D quadratic flow, 30 coefficients
# ---------------------------------------------------------------------------

# Row layout per equation: a, b1, b2, b3, c1, c2, c3, c4, c5, c6 where
#   df = a + b1*x + b2*y + b3*z + c1*x^2 + c2*xy + c3*xz + c4*y^2 + c5*yz + c6*z^2
QUADRATIC3_COEFF_NAMES = tuple(
    f"{kind}{axis}{idx}"
    for axis in ("x", "y", "z")
    for kind, idx in (
        [("a", 1)]
        + [("b", i) for i in (1, 2, 3)]
        + [("c", i) for i in (1, 2, 3, 4, 5, 6)]
    )
)


@njit(cache=True)
def _quadratic3_rhs(t, y, p):
    out = np.empty(3)
    x0 = y[0]
    x1 = y[1]
    x2 = y[2]
    for r in range(3):
        o = 10 * r
        out[r] = (
            p[o]
            + p[o + 1] * x0
            + p[o + 2] * x1
            + p[o + 3] * x2
            + p[o + 4] * x0 * x0
            + p[o + 5] * x0 * x1
            + p[o + 6] * x0 * x2
            + p[o + 7] * x1 * x1
            + p[o + 8] * x1 * x2
            + p[o + 9] * x2 * x2
        )
    return out


@njit(cache=True)
def _quadratic3_jac(t, y, p):
    J = np.empty((3, 3))
    x0 = y[0]
    x1 = y[1]
    x2 = y[2]
    for r in range(3):
        o = 10 * r
        J[r, 0] = p[o + 1] + 2.0 * p[o + 4] * x0 + p[o + 5] * x1 + p[o + 6] * x2
        J[r, 1] = p[o + 2] + p[o + 5] * x0 + 2.0 * p[o + 7] * x1 + p[o + 8] * x2
        J[r, 2] = p[o + 3] + p[o + 6] * x0 + p[o + 8] * x1 + 2.0 * p[o + 9] * x2
    return J


def quadratic3_divergence(coeffs: Sequence[float], state: Sequence[float]) -> float:
    """Closed-form trace of the quadratic-flow Jacobian at ``state``."""
    p = np.asarray(coeffs, dtype=np.float64)
    x, y, z = (float(v) for v in state)
    return float(
        (p[1] + p[12] + p[23])
        + (2.0 * p[4] + p[15] + p[26]) * x
        + (p[5] + 2.0 * p[17] + p[28]) * y
        + (p[6] + p[18] + 2.0 * p[29]) * z
    )


def make_quadratic3(coeffs: Sequence[float], system_id: str = "quadratic3") -> SystemDefinition:
    c = np.asarray(coeffs, dtype=np.float64)
    if c.shape != (30,):
        raise ValueError(f"quadratic3 needs exactly 30 coefficients, got {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("quadratic3 coefficients must be finite")
    params = tuple(
        ParamDescriptor(name, float(v), "dimensionless", "flow coefficient")
        for name, v in zip(QUADRATIC3_COEFF_NAMES, c)
    )
    return SystemDefinition(
        id=system_id,
        dim=3,
        state_names=("x", "y", "z"),
        params=params,
        rhs=_quadratic3_rhs,
        jac=_quadratic3_jac,
        default_state=(0.05, 0.05, 0.05),
    )


def load_quadratic3_coeffs(path: str) -> np.ndarray:
    """Read a coefficient file: a JSON array of 30 reals in row order
    (x-equation a,b1..b3,c1..c6, then y-equation, then z-equation)."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    arr = np.asarray(data, dtype=np.float64)
    if arr.shape != (30,):
        raise ValueError(f"{path}: expected a JSON array of 30 reals, got shape {arr.shape}")
    return arr


# ---------------------------------------------------------------------------
# kot_monod: dimensionless forced double-Monod chemostat
# ---------------------------------------------------------------------------

#: Dimensional growth/yield/saturation constants behind the default
#: dimensionless parameter set (rates per hour, K in mg/l).
KOT_TABLE = {
    "Y1": 0.4,
    "mu1": 0.5,
    "K1": 8.0,
    "Y2": 0.6,
    "mu2": 0.2,
    "K2": 9.0,
    "Si": 115.0,
    "D": 0.1,
    "T": 24.0,
}


@njit(cache=True)
def _kot_rhs(t, y, p):
    # p = [A, a, B, b, eps, omega]
    out = np.empty(3)
    x0 = y[0]
    x1 = y[1]
    x2 = y[2]
    g = p[0] * x0 / (p[1] + x0)
    h = p[2] * x1 / (p[3] + x1)
    out[0] = 1.0 + p[4] * math.sin(p[5] * t) - x0 - g * x1
    out[1] = g * x1 - x1 - h * x2
    out[2] = h * x2 - x2
    return out


@njit(cache=True)
def _kot_jac(t, y, p):
    J = np.empty((3, 3))
    x0 = y[0]
    x1 = y[1]
    x2 = y[2]
    ax = p[1] + x0
    by = p[3] + x1
    g = p[0] * x0 / ax
    gx = p[0] * p[1] / (ax * ax)
    h = p[2] * x1 / by
    hy = p[2] * p[3] / (by * by)
    J[0, 0] = -1.0 - x1 * gx
    J[0, 1] = -g
    J[0, 2] = 0.0
    J[1, 0] = x1 * gx
    J[1, 1] = g - 1.0 - x2 * hy
    J[1, 2] = -h
    J[2, 0] = 0.0
    J[2, 1] = x2 * hy
    J[2, 2] = h - 1.0
    return J


def kot_nondimensionalize(
    Y1: float,
    mu1: float,
    K1: float,
    Y2: float,
    mu2: float,
    K2: float,
    Si: float,
    D: float,
    T_forcing: float,
) -> tuple[float, float, float, float, float]:
    """Map dimensional chemostat constants to the dimensionless parameter
    set (A, a, B, b, omega) of the forced double-Monod system."""
    for name, v in (
        ("Y1", Y1), ("mu1", mu1), ("K1", K1), ("Y2", Y2), ("mu2", mu2),
        ("K2", K2), ("Si", Si), ("D", D), ("T_forcing", T_forcing),
    ):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    A = mu1 / D
    a = K1 / Si
    B = mu2 / D
    b = K2 / (Y1 * Si)
    omega = 2.0 * math.pi / (D * T_forcing)
    return A, a, B, b, omega


def make_kot_monod(
    A: float, a: float, B: float, b: float, eps: float, omega: float,
    system_id: str = "kot_monod",
) -> SystemDefinition:
    if not a > 0 or not b > 0:
        raise ValueError(f"half-saturation parameters must be positive, got a={a}, b={b}")
    params = (
        ParamDescriptor("A", float(A), "dimensionless", "prey growth / dilution ratio"),
        ParamDescriptor("a", float(a), "dimensionless", "prey half-saturation / inflow substrate"),
        ParamDescriptor("B", float(B), "dimensionless", "predator growth / dilution ratio"),
        ParamDescriptor("b", float(b), "dimensionless", "predator half-saturation (yield-scaled)"),
        ParamDescriptor("eps", float(eps), "dimensionless", "forcing amplitude"),
        ParamDescriptor("omega", float(omega), "dimensionless", "forcing angular frequency"),
    )
    return SystemDefinition(
        id=system_id,
        dim=3,
        state_names=("x", "y", "z"),
        params=params,
        rhs=_kot_rhs,
        jac=_kot_jac,
        time_dependent=True,
        default_state=(0.42, 0.4, 0.42),
    )


# ---------------------------------------------------------------------------
# pgpr: rhizosphere model with square-wave photosynthesis forcing
# ---------------------------------------------------------------------------

@njit(cache=True)
def _fourier_square_wave(t, terms):
    # Truncated Fourier series of the 24-hour square wave (1 on (0,12], 0 after).
    acc = 0.5
    for j in range(1, terms + 1):
        m = 2 * j - 1
        acc += (2.0 / (m * math.pi)) * math.sin(m * math.pi * t / 12.0)
    return acc


def fourier_square_wave(t: float, terms: int) -> float:
    """Partial Fourier sum of the unit square wave with 24-hour period.

    ``terms=0`` leaves only the mean value 0.5; larger counts sharpen the
    on/off transitions at the cost of Gibbs ripple near them.
    """
    if terms < 0:
        raise ValueError(f"terms must be >= 0, got {terms}")
    return float(_fourier_square_wave(float(t), int(terms)))


@dataclass(frozen=True)
class InteractionSpec:
    """Cross-feeding couplings between the two microbe pools.

    Both couplings saturate in the partner density. The all-zero default
    leaves the pools uncoupled; the division guard keeps the 0/0 corner of
    a zero saturation constant at zero effect.
    """

    f_c: float = 0.0
    k_f: float = 0.0
    g_c: float = 0.0
    k_g: float = 0.0


PGPR_REQUIRED_KEYS = (
    "mu_mx", "k_sx", "k_px", "k_nx",
    "mu_mz", "k_sz", "k_pz", "k_nz",
    "theta", "N",
    "alpha", "beta", "d1", "d2",
    "L", "d_s", "d_p", "s0", "p0",
    "y_xs", "y_zs", "y_xp", "y_zp",
)

_PGPR_POSITIVE_KEYS = ("k_sx", "k_px", "k_nx", "k_sz", "k_pz", "k_nz", "theta")


@njit(cache=True)
def _pgpr_mu(s, pox, nit, mu_m, theta, k_s, k_p, k_n):
    return (
        mu_m
        * (s / (s + theta * k_s))
        * (pox / (pox + k_p))
        * (nit / (nit + theta * k_n))
    )


@njit(cache=True)
def _pgpr_rhs(t, y, p):
    # p: 0 mu_mx 1 k_sx 2 k_px 3 k_nx 4 mu_mz 5 k_sz 6 k_pz 7 k_nz 8 theta
    #    9 N 10 alpha 11 beta 12 d1 13 d2 14 L 15 d_s 16 d_p 17 s0 18 p0
    #    19 y_xs 20 y_zs 21 y_xp 22 y_zp 23 w_amp 24 w_offset
    #    25 f_c 26 k_f 27 g_c 28 k_g 29 w_terms
    out = np.empty(4)
    X = y[0]
    Z = y[1]
    S = y[2]
    P = y[3]
    theta = p[8]
    nit = p[9]
    mu_x = _pgpr_mu(S, P, nit, p[0], theta, p[1], p[2], p[3])
    mu_z = _pgpr_mu(S, P, nit, p[4], theta, p[5], p[6], p[7])
    den_f = Z + p[26]
    F = p[25] * Z / den_f if den_f != 0.0 else 0.0
    den_g = X + p[28]
    G = p[27] * X / den_g if den_g != 0.0 else 0.0
    W = p[24] + p[23] * _fourier_square_wave(t, int(p[29]))
    out[0] = X * (mu_x + F - p[10] * X - p[12])
    out[1] = Z * (mu_z + G - p[11] * Z - p[13])
    out[2] = W + p[14] - p[15] * (S - p[17]) - X * mu_x / p[19] - Z * mu_z / p[20]
    out[3] = p[16] * (p[18] - P) - X * mu_x / p[21] - Z * mu_z / p[22]
    return out


def pgpr_growth_rate(
    mu_m: float, s: float, pox: float, nit: float,
    theta: float, k_s: float, k_p: float, k_n: float,
) -> float:
    """Rate-limited growth law: the maximal rate damped by substrate,
    oxygen, and nitrogen saturation factors."""
    return float(_pgpr_mu(s, pox, nit, mu_m, theta, k_s, k_p, k_n))


def make_pgpr(
    param_table: Mapping[str, float],
    forcing_terms: int = 25,
    interaction: Optional[InteractionSpec] = None,
    w_amplitude: float = 1.0,
    w_offset: float = 0.0,
    system_id: str = "pgpr",
) -> SystemDefinition:
    """Build the four-state rhizosphere system from a full parameter table.

    Every key in ``PGPR_REQUIRED_KEYS`` must be supplied; there are no
    hidden numeric defaults. The packaged ``pgpr_example.json`` holds one
    illustrative configuration for demos and tests.
    """
    missing = [k for k in PGPR_REQUIRED_KEYS if k not in param_table]
    if missing:
        raise ValueError(f"pgpr config missing required keys: {missing}")
    if forcing_terms < 0:
        raise ValueError("forcing_terms must be >= 0")
    for k in _PGPR_POSITIVE_KEYS:
        if not float(param_table[k]) > 0:
            raise ValueError(f"pgpr parameter {k!r} must be positive, got {param_table[k]}")
    inter = interaction or InteractionSpec()

    units = {
        "mu_mx": "1/h", "mu_mz": "1/h", "theta": "dimensionless",
        "alpha": "cc/gm/h", "beta": "cc/gm/h", "d1": "1/h", "d2": "1/h",
        "L": "gm/cc/h", "d_s": "1/h", "d_p": "1/h",
    }
    descs = {
        "N": "nitrogen level (held constant)",
        "theta": "soil moisture content",
        "L": "constant substrate input",
        "w_amp": "photosynthesis forcing amplitude",
        "w_offset": "photosynthesis forcing offset",
        "w_terms": "Fourier terms in the square-wave forcing",
    }

    def pd(name: str, value: float, units_s: str = "gm/cc") -> ParamDescriptor:
        return ParamDescriptor(name, float(value), units.get(name, units_s), descs.get(name, ""))

    params = tuple(
        [pd(k, float(param_table[k])) for k in PGPR_REQUIRED_KEYS]
        + [
            pd("w_amp", w_amplitude, "gm/cc/h"),
            pd("w_offset", w_offset, "gm/cc/h"),
            pd("f_c", inter.f_c, "1/h"),
            pd("k_f", inter.k_f, "gm/cc"),
            pd("g_c", inter.g_c, "1/h"),
            pd("k_g", inter.k_g, "gm/cc"),
            ParamDescriptor("w_terms", float(forcing_terms), "count", descs["w_terms"]),
        ]
    )
    return SystemDefinition(
        id=system_id,
        dim=4,
        state_names=("X", "Z", "S", "P"),
        params=params,
        rhs=_pgpr_rhs,
        jac=None,  # central finite differences
        time_dependent=True,
        default_state=(0.1, 0.1, 1.0, 1.0),
    )


def load_pgpr_config(path: Optional[str] = None) -> dict:
    """Load a pgpr configuration document. With no path, returns the packaged
    illustrative example (not sourced from any measured system)."""
    if path is None:
        ref = resources.files("chaoscope").joinpath("data/pgpr_example.json")
        doc = json.loads(ref.read_text(encoding="utf-8"))
    else:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    return doc


def _pgpr_from_config(doc: Mapping) -> SystemDefinition:
    inter = InteractionSpec(**doc.get("interaction", {}))
    return make_pgpr(
        doc["params"],
        forcing_terms=int(doc.get("forcing_terms", 25)),
        interaction=inter,
        w_amplitude=float(doc.get("w_amplitude", 1.0)),
        w_offset=float(doc.get("w_offset", 0.0)),
    )


# ---------------------------------------------------------------------------
# becks: rods/cocci/predator/nutrient chemostat, dimensional and rescaled
# ---------------------------------------------------------------------------

#: Default species constants (rates per day, concentrations gm/cc).
BECKS_TABLE = {
    "mu_NR": 12.0,
    "mu_NC": 6.0,
    "mu_PR": 2.2,
    "mu_PC": 2.2,
    "K_NR": 8e-6,
    "K_NC": 8e-6,
    "K_PR": 1e-6,
    "K_PC": 1e-6,
    "Y_NR": 0.1,
    "Y_NC": 0.1,
    "Y_PR": 0.12,
    "Y_PC": 0.12,
    "delta_R": 0.5,
    "delta_C": 0.25,
    "delta_P": 0.08,
}

_BECKS_UNITS = {
    "mu_NR": "1/day", "mu_NC": "1/day", "mu_PR": "1/day", "mu_PC": "1/day",
    "K_NR": "gm/cc", "K_NC": "gm/cc", "K_PR": "gm/cc", "K_PC": "gm/cc",
    "Y_NR": "gm R/gm N", "Y_NC": "gm C/gm N", "Y_PR": "gm P/gm R", "Y_PC": "gm P/gm C",
    "delta_R": "1/day", "delta_C": "1/day", "delta_P": "1/day",
    "D": "1/day", "N0": "gm/cc",
}


@njit(cache=True)
def _becks_rhs(t, y, p):
    # p: 0 mu_NR 1 mu_NC 2 mu_PR 3 mu_PC 4 K_NR 5 K_NC 6 K_PR 7 K_PC
    #    8 Y_NR 9 Y_NC 10 Y_PR 11 Y_PC 12 delta_R 13 delta_C 14 delta_P
    #    15 D 16 N0
    out = np.empty(4)
    R = y[0]
    C = y[1]
    P = y[2]
    N = y[3]
    fNR = N / (p[4] + N)
    fNC = N / (p[5] + N)
    fPR = R / (p[6] + R)
    fPC = C / (p[7] + C)
    D = p[15]
    out[0] = R * (p[0] * fNR - p[12]) - (p[2] / p[10]) * fPR * P - D * R
    out[1] = C * (p[1] * fNC - p[13]) - (p[3] / p[11]) * fPC * P - D * C
    out[2] = P * (p[2] * fPR + p[3] * fPC - p[14]) - D * P
    out[3] = D * p[16] - R * (p[0] / p[8]) * fNR - C * (p[1] / p[9]) * fNC - D * N
    return out


@njit(cache=True)
def _becks_jac(t, y, p):
    J = np.zeros((4, 4))
    R = y[0]
    C = y[1]
    P = y[2]
    N = y[3]
    D = p[15]
    kNR = p[4]
    kNC = p[5]
    kPR = p[6]
    kPC = p[7]
    fNR = N / (kNR + N)
    fNC = N / (kNC + N)
    fPR = R / (kPR + R)
    fPC = C / (kPC + C)
    dNR = kNR / ((kNR + N) * (kNR + N))
    dNC = kNC / ((kNC + N) * (kNC + N))
    dPR = kPR / ((kPR + R) * (kPR + R))
    dPC = kPC / ((kPC + C) * (kPC + C))
    J[0, 0] = p[0] * fNR - p[12] - (p[2] / p[10]) * P * dPR - D
    J[0, 2] = -(p[2] / p[10]) * fPR
    J[0, 3] = R * p[0] * dNR
    J[1, 1] = p[1] * fNC - p[13] - (p[3] / p[11]) * P * dPC - D
    J[1, 2] = -(p[3] / p[11]) * fPC
    J[1, 3] = C * p[1] * dNC
    J[2, 0] = P * p[2] * dPR
    J[2, 1] = P * p[3] * dPC
    J[2, 2] = p[2] * fPR + p[3] * fPC - p[14] - D
    J[3, 0] = -(p[0] / p[8]) * fNR
    J[3, 1] = -(p[1] / p[9]) * fNC
    J[3, 3] = -R * (p[0] / p[8]) * dNR - C * (p[1] / p[9]) * dNC - D
    return J


def make_becks_dim(
    param_table: Optional[Mapping[str, float]] = None,
    D: float = 0.5,
    N0: float = 1e-4,
    system_id: str = "becks_dim",
) -> SystemDefinition:
    """Dimensional four-species chemostat (prey R and C, predator P,
    nutrient N) with dilution-driven nutrient supply.

    ``param_table`` may override any entry of ``BECKS_TABLE``; all growth,
    saturation, and yield constants must be positive.
    """
    table = dict(BECKS_TABLE)
    if param_table:
        unknown = set(param_table) - set(BECKS_TABLE)
        if unknown:
            raise ValueError(f"unknown becks parameters: {sorted(unknown)}")
        table.update({k: float(v) for k, v in param_table.items()})
    for k, v in table.items():
        if not v > 0:
            raise ValueError(f"becks parameter {k!r} must be positive, got {v}")
    if not D > 0 or not N0 > 0:
        raise ValueError(f"D and N0 must be positive, got D={D}, N0={N0}")
    order = list(BECKS_TABLE) + ["D", "N0"]
    table = {**table, "D": float(D), "N0": float(N0)}
    params = tuple(
        ParamDescriptor(k, table[k], _BECKS_UNITS[k]) for k in order
    )
    return SystemDefinition(
        id=system_id,
        dim=4,
        state_names=("R", "C", "P", "N"),
        params=params,
        rhs=_becks_rhs,
        jac=_becks_jac,
        default_state=(1e-6, 1e-6, 1e-6, 1e-4),
    )


@dataclass(frozen=True)
class BecksHatParams:
    """Dimensionless parameter set of the rescaled chemostat."""

    mu_NR: float
    mu_NC: float
    mu_PR: float
    mu_PC: float
    kappa: float
    delta_C: float
    delta_P: float
    delta: float
    eta1: float
    eta2: float
    eta3: float


def becks_rescale_params(
    param_table: Optional[Mapping[str, float]] = None,
    D: float = 0.5,
    N0: float = 1e-4,
) -> tuple[BecksHatParams, float]:
    """Collapse the dimensional chemostat constants into the eleven
    dimensionless parameters plus the rescaled nutrient supply n0.

    The nutrient axis rescales as N = K_NR * n, so the supply level maps
    to n0 = N0 / K_NR.
    """
    t = dict(BECKS_TABLE)
    if param_table:
        t.update({k: float(v) for k, v in param_table.items()})
    scale = t["delta_R"] + D
    if not scale > 0:
        raise ValueError(f"delta_R + D must be positive, got {scale}")
    hat = BecksHatParams(
        mu_NR=t["mu_NR"] / scale,
        mu_NC=t["mu_NC"] / scale,
        mu_PR=t["mu_PR"] / scale,
        mu_PC=t["mu_PC"] / scale,
        kappa=t["K_NC"] / t["K_NR"],
        delta_C=(t["delta_C"] + D) / scale,
        delta_P=(t["delta_P"] + D) / scale,
        delta=D / scale,
        eta1=(t["mu_PC"] * t["Y_PR"] * t["K_PR"]) / (t["mu_PR"] * t["Y_PC"] * t["K_PC"]),
        eta2=(t["mu_NR"] * t["K_PR"]) / (t["Y_NR"] * t["K_NR"] * scale),
        eta3=(t["mu_NC"] * t["K_PC"]) / (t["Y_NC"] * t["K_NR"] * scale),
    )
    n0 = N0 / t["K_NR"]
    return hat, n0


@njit(cache=True)
def _becks_rescaled_rhs(t, y, p):
    # p: 0 mu_NR 1 mu_NC 2 mu_PR 3 mu_PC 4 kappa 5 delta_C 6 delta_P
    #    7 delta 8 eta1 9 eta2 10 eta3 11 n0
    out = np.empty(4)
    r = y[0]
    c = y[1]
    pp = y[2]
    n = y[3]
    out[0] = p[0] * n * r / (n + 1.0) - r * pp / (r + 1.0) - r
    out[1] = p[1] * n * c / (n + p[4]) - p[8] * c * pp / (c + 1.0) - p[5] * c
    out[2] = p[2] * r * pp / (r + 1.0) + p[3] * c * pp / (c + 1.0) - p[6] * pp
    out[3] = p[7] * (p[11] - n) - p[9] * n * r / (n + 1.0) - p[10] * n * c / (n + p[4])
    return out


@njit(cache=True)
def _becks_rescaled_jac(t, y, p):
    J = np.zeros((4, 4))
    r = y[0]
    c = y[1]
    pp = y[2]
    n = y[3]
    kap = p[4]
    r1 = r + 1.0
    c1 = c + 1.0
    n1 = n + 1.0
    nk = n + kap
    J[0, 0] = p[0] * n / n1 - pp / (r1 * r1) - 1.0
    J[0, 2] = -r / r1
    J[0, 3] = p[0] * r / (n1 * n1)
    J[1, 1] = p[1] * n / nk - p[8] * pp / (c1 * c1) - p[5]
    J[1, 2] = -p[8] * c / c1
    J[1, 3] = p[1] * c * kap / (nk * nk)
    J[2, 0] = p[2] * pp / (r1 * r1)
    J[2, 1] = p[3] * pp / (c1 * c1)
    J[2, 2] = p[2] * r / r1 + p[3] * c / c1 - p[6]
    J[3, 0] = -p[9] * n / n1
    J[3, 1] = -p[10] * n / nk
    J[3, 3] = -p[7] - p[9] * r / (n1 * n1) - p[10] * c * kap / (nk * nk)
    return J


def make_becks_rescaled(
    hat: BecksHatParams,
    n0: float,
    system_id: str = "becks_rescaled",
) -> SystemDefinition:
    if not hat.kappa > 0:
        raise ValueError(f"kappa must be positive, got {hat.kappa}")
    vals = [
        ("mu_NR_hat", hat.mu_NR), ("mu_NC_hat", hat.mu_NC),
        ("mu_PR_hat", hat.mu_PR), ("mu_PC_hat", hat.mu_PC),
        ("kappa_hat", hat.kappa), ("delta_C_hat", hat.delta_C),
        ("delta_P_hat", hat.delta_P), ("delta_hat", hat.delta),
        ("eta1_hat", hat.eta1), ("eta2_hat", hat.eta2), ("eta3_hat", hat.eta3),
        ("n0", float(n0)),
    ]
    params = tuple(ParamDescriptor(k, float(v), "dimensionless") for k, v in vals)
    return SystemDefinition(
        id=system_id,
        dim=4,
        state_names=("r", "c", "p", "n"),
        params=params,
        rhs=_becks_rescaled_rhs,
        jac=_becks_rescaled_jac,
        default_state=becks_map_state(
            (1e-6, 1e-6, 1e-6, 1e-4), BECKS_TABLE, D=0.5
        ),
    )


def becks_map_state(
    state_dim: Sequence[float],
    param_table: Optional[Mapping[str, float]] = None,
    D: float = 0.5,
) -> tuple[float, float, float, float]:
    """Map a dimensional (R, C, P, N) state to rescaled (r, c, p, n)."""
    t = dict(BECKS_TABLE)
    if param_table:
        t.update({k: float(v) for k, v in param_table.items()})
    R, C, P, N = (float(v) for v in state_dim)
    scale = t["delta_R"] + D
    return (
        R / t["K_PR"],
        C / t["K_PC"],
        P * t["mu_PR"] / (t["K_PR"] * t["Y_PR"] * scale),
        N / t["K_NR"],
    )


# ---------------------------------------------------------------------------
# hidden validation systems
# ---------------------------------------------------------------------------

@njit(cache=True)
def _lorenz_rhs(t, y, p):
    out = np.empty(3)
    out[0] = p[0] * (y[1] - y[0])
    out[1] = y[0] * (p[1] - y[2]) - y[1]
    out[2] = y[0] * y[1] - p[2] * y[2]
    return out


@njit(cache=True)
def _lorenz_jac(t, y, p):
    J = np.empty((3, 3))
    J[0, 0] = -p[0]
    J[0, 1] = p[0]
    J[0, 2] = 0.0
    J[1, 0] = p[1] - y[2]
    J[1, 1] = -1.0
    J[1, 2] = -y[0]
    J[2, 0] = y[1]
    J[2, 1] = y[0]
    J[2, 2] = -p[2]
    return J


def make_lorenz(sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0) -> SystemDefinition:
    params = (
        ParamDescriptor("sigma", float(sigma)),
        ParamDescriptor("rho", float(rho)),
        ParamDescriptor("beta", float(beta)),
    )
    return SystemDefinition(
        id="lorenz",
        dim=3,
        state_names=("x", "y", "z"),
        params=params,
        rhs=_lorenz_rhs,
        jac=_lorenz_jac,
        default_state=(1.0, 1.0, 1.0),
        hidden=True,
    )


@njit(cache=True)
def _linear2_rhs(t, y, p):
    out = np.empty(2)
    out[0] = p[0] * y[0]
    out[1] = p[1] * y[1]
    return out


@njit(cache=True)
def _linear2_jac(t, y, p):
    J = np.zeros((2, 2))
    J[0, 0] = p[0]
    J[1, 1] = p[1]
    return J


def make_linear2(lam1: float = -1.0, lam2: float = -2.0) -> SystemDefinition:
    params = (
        ParamDescriptor("lam1", float(lam1), "1/time", "first decay rate"),
        ParamDescriptor("lam2", float(lam2), "1/time", "second decay rate"),
    )
    return SystemDefinition(
        id="lin2",
        dim=2,
        state_names=("y1", "y2"),
        params=params,
        rhs=_linear2_rhs,
        jac=_linear2_jac,
        default_state=(1.0, 1.0),
        hidden=True,
    )


# ---------------------------------------------------------------------------
# registry population
# ---------------------------------------------------------------------------

def kot_paper_sample(system: Optional[SystemDefinition] = None) -> SamplePoint:
    """The canonical chaotic configuration of the forced double-Monod
    system: defaults for (A, a, B, b, eps, omega) with state (0.42, 0.4, 0.42)."""
    sys_ = system or make_kot_monod(
        A=5.0, a=8.0 / 115.0, B=2.0, b=9.0 / 46.0, eps=0.6, omega=5.0 * math.pi / 6.0
    )
    return SamplePoint.of(sys_, sys_.default_params(), (0.42, 0.4, 0.42))


def _register_builtins() -> None:
    register_system(make_quadratic3(np.zeros(30)))
    register_system(
        make_kot_monod(A=5.0, a=8.0 / 115.0, B=2.0, b=9.0 / 46.0, eps=0.6,
                       omega=5.0 * math.pi / 6.0)
    )
    register_system(_pgpr_from_config(load_pgpr_config()))
    register_system(make_becks_dim())
    hat, n0 = becks_rescale_params()
    register_system(make_becks_rescaled(hat, n0))
    register_system(make_lorenz())
    register_system(make_linear2())


_register_builtins()
