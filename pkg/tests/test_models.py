import json
import math

import numpy as np
import pytest

import chaoscope as cs
from chaoscope.models import (
    BECKS_TABLE,
    KOT_TABLE,
    PGPR_REQUIRED_KEYS,
    InteractionSpec,
    becks_map_state,
    becks_rescale_params,
    fourier_square_wave,
    kot_nondimensionalize,
    load_pgpr_config,
    make_becks_dim,
    make_becks_rescaled,
    make_kot_monod,
    make_pgpr,
    make_quadratic3,
    pgpr_growth_rate,
    quadratic3_divergence,
)
from chaoscope.systems import divergence_at, eval_jacobian, eval_rhs

from oracles import fd_jacobian_oracle

# Golden value: Jacobian trace of the forced double-Monod system at its
# canonical chaotic configuration, frozen from the central-difference oracle
# before the analytic Jacobian was written. Positive: the flow expands
# volume at that particular initial point.
KOT_PAPER_POINT_DIVERGENCE = 1.5888771


# ---------------------------------------------------------------------------
# quadratic3
# ---------------------------------------------------------------------------

def test_quadratic3_zero_coefficients_is_zero_field():
    sys_ = make_quadratic3(np.zeros(30))
    out = eval_rhs(sys_, 0.0, [1.2, -0.7, 3.4], sys_.default_params())
    assert np.array_equal(out, np.zeros(3))


def test_quadratic3_single_linear_coefficient():
    coeffs = np.zeros(30)
    coeffs[2] = 1.0  # bx2: dx/dt = y
    sys_ = make_quadratic3(coeffs)
    out = eval_rhs(sys_, 0.0, [5.0, 2.5, -1.0], sys_.default_params())
    assert out == pytest.approx([2.5, 0.0, 0.0])
    J = eval_jacobian(sys_, 0.0, [5.0, 2.5, -1.0], sys_.default_params())
    expected = np.zeros((3, 3))
    expected[0, 1] = 1.0
    assert np.array_equal(J, expected)


def test_quadratic3_five_coefficient_hand_expansion():
    # cx5*y*z | by1*x + by2*y | az1 + cz2*x*y, remainder zero
    rng = np.random.default_rng(7)
    for _ in range(20):
        cx5, by1, by2, az1, cz2 = rng.uniform(-5, 5, size=5)
        coeffs = np.zeros(30)
        coeffs[8] = cx5
        coeffs[11] = by1
        coeffs[12] = by2
        coeffs[20] = az1
        coeffs[25] = cz2
        sys_ = make_quadratic3(coeffs)
        x, y, z = rng.uniform(-5, 5, size=3)
        out = eval_rhs(sys_, 0.0, [x, y, z], sys_.default_params())
        assert out == pytest.approx([cx5 * y * z, by1 * x + by2 * y, az1 + cz2 * x * y], rel=1e-12)


def test_quadratic3_divergence_closed_form_matches_trace():
    rng = np.random.default_rng(11)
    for _ in range(100):
        coeffs = rng.uniform(-5, 5, size=30)
        sys_ = make_quadratic3(coeffs)
        state = rng.uniform(-5, 5, size=3)
        J = eval_jacobian(sys_, 0.0, state, sys_.default_params())
        closed = quadratic3_divergence(coeffs, state)
        assert closed == pytest.approx(float(np.trace(J)), rel=1e-12, abs=1e-12)


def test_quadratic3_jacobian_entry_against_finite_differences():
    rng = np.random.default_rng(3)
    coeffs = rng.uniform(-2, 2, size=30)
    sys_ = make_quadratic3(coeffs)
    state = rng.uniform(-5, 5, size=3)
    J = eval_jacobian(sys_, 0.0, state, sys_.default_params())
    J_fd = fd_jacobian_oracle(sys_.rhs, 0.0, state, sys_.default_params())
    assert J == pytest.approx(J_fd, rel=1e-4, abs=1e-7)


def test_quadratic3_needs_exactly_30_finite_coefficients():
    with pytest.raises(ValueError):
        make_quadratic3(np.zeros(29))
    bad = np.zeros(30)
    bad[5] = np.inf
    with pytest.raises(ValueError):
        make_quadratic3(bad)


def test_quadratic3_coeff_file_roundtrip(tmp_path):
    coeffs = list(np.arange(30.0))
    path = tmp_path / "coeffs.json"
    path.write_text(json.dumps(coeffs))
    loaded = cs.load_quadratic3_coeffs(str(path))
    assert list(loaded) == coeffs
    path.write_text(json.dumps(coeffs[:7]))
    with pytest.raises(ValueError):
        cs.load_quadratic3_coeffs(str(path))


# ---------------------------------------------------------------------------
# kot_monod
# ---------------------------------------------------------------------------

def test_kot_rhs_at_origin_is_forced_source_only(kot):
    out = eval_rhs(kot, 0.0, [0.0, 0.0, 0.0], kot.default_params())
    assert out == pytest.approx([1.0, 0.0, 0.0])


def test_kot_predator_column_at_zero_prey(kot):
    J = eval_jacobian(kot, 0.0, [0.5, 0.0, 0.3], kot.default_params())
    assert J[2, 2] == pytest.approx(-1.0)


def test_kot_nondimensionalization_table_values():
    A, a, B, b, omega = kot_nondimensionalize(
        Y1=KOT_TABLE["Y1"], mu1=KOT_TABLE["mu1"], K1=KOT_TABLE["K1"],
        Y2=KOT_TABLE["Y2"], mu2=KOT_TABLE["mu2"], K2=KOT_TABLE["K2"],
        Si=KOT_TABLE["Si"], D=KOT_TABLE["D"], T_forcing=KOT_TABLE["T"],
    )
    assert A == pytest.approx(5.0)
    assert a == pytest.approx(8.0 / 115.0)
    assert B == pytest.approx(2.0)
    assert b == pytest.approx(9.0 / 46.0)
    assert omega == pytest.approx(5.0 * math.pi / 6.0)


def test_kot_nondimensionalization_rejects_nonpositive():
    with pytest.raises(ValueError):
        kot_nondimensionalize(0.4, 0.5, 8.0, 0.6, 0.2, 9.0, 115.0, 0.0, 24.0)


def test_kot_paper_point_divergence_golden(kot):
    sample = cs.kot_paper_sample(kot)
    d = divergence_at(kot, sample)
    d_fd = float(np.trace(fd_jacobian_oracle(
        kot.rhs, 0.0, sample.state_array(), sample.params_array())))
    assert d == pytest.approx(d_fd, rel=1e-5)
    assert d == pytest.approx(KOT_PAPER_POINT_DIVERGENCE, abs=1e-6)


def test_kot_eps_zero_reduces_to_constant_forcing():
    sys_ = make_kot_monod(A=5.0, a=0.07, B=2.0, b=0.2, eps=0.0, omega=2.0)
    p = sys_.default_params()
    f1 = eval_rhs(sys_, 0.0, [0.3, 0.3, 0.3], p)
    f2 = eval_rhs(sys_, 17.3, [0.3, 0.3, 0.3], p)
    assert np.array_equal(f1, f2)


def test_kot_requires_positive_half_saturations():
    with pytest.raises(ValueError):
        make_kot_monod(A=5.0, a=0.0, B=2.0, b=0.2, eps=0.6, omega=1.0)


# ---------------------------------------------------------------------------
# fourier square wave
# ---------------------------------------------------------------------------

def test_fourier_dc_term_only():
    for t in (-3.0, 0.0, 5.5, 24.0):
        assert fourier_square_wave(t, 0) == pytest.approx(0.5)


def test_fourier_value_at_zero_any_terms():
    for k in (1, 5, 25, 100):
        assert fourier_square_wave(0.0, k) == pytest.approx(0.5, abs=1e-12)


def test_fourier_plateau_value_partial_sum_oracle():
    # Independent partial-sum evaluation at the plateau midpoint t=6.
    acc = 0.5 + math.fsum(
        (2.0 / ((2 * j - 1) * math.pi)) * math.sin((2 * j - 1) * math.pi * 6.0 / 12.0)
        for j in range(1, 26)
    )
    assert fourier_square_wave(6.0, 25) == pytest.approx(acc, abs=1e-12)
    assert abs(fourier_square_wave(6.0, 25) - 1.0) < 0.03


def test_fourier_periodicity():
    for k in (0, 3, 25):
        for t in (0.0, 1.7, 11.9, 13.2):
            assert fourier_square_wave(t + 24.0, k) == pytest.approx(
                fourier_square_wave(t, k), abs=1e-12)


def test_fourier_period_average_is_half():
    # Trapezoid quadrature over one full period; sine terms cancel exactly.
    for k in (0, 1, 10, 25):
        m = 2400
        ts = np.linspace(0.0, 24.0, m + 1)
        vals = [fourier_square_wave(float(t), k) for t in ts]
        weights = np.full(m + 1, 1.0)
        weights[0] = weights[-1] = 0.5
        avg = math.fsum(w * v for w, v in zip(weights, vals)) / m
        assert abs(avg - 0.5) <= 1e-12


def test_fourier_rejects_negative_terms():
    with pytest.raises(ValueError):
        fourier_square_wave(1.0, -1)


# ---------------------------------------------------------------------------
# pgpr
# ---------------------------------------------------------------------------

def _pgpr():
    return cs.get_system("pgpr")


def test_pgpr_zero_populations_stay_zero():
    sys_ = _pgpr()
    p = sys_.default_params()
    out = eval_rhs(sys_, 3.0, [0.0, 0.0, 0.8, 0.9], p)
    assert out[0] == 0.0
    assert out[1] == 0.0


def test_pgpr_growth_law_saturates_to_maximum():
    mu_m, theta = 0.4, 0.3
    k_s, k_p, k_n = 1.0, 0.5, 0.5
    big = 1e6
    mu = pgpr_growth_rate(mu_m, big * theta * k_s, big * k_p, big * theta * k_n,
                          theta, k_s, k_p, k_n)
    assert abs(mu - mu_m) / mu_m < 0.01


def test_pgpr_forcing_periodicity_in_rhs():
    sys_ = _pgpr()
    p = sys_.default_params()
    state = [0.1, 0.2, 0.9, 0.8]
    f1 = eval_rhs(sys_, 2.5, state, p)
    f2 = eval_rhs(sys_, 26.5, state, p)
    assert f1 == pytest.approx(f2, abs=1e-12)


def test_pgpr_requires_full_config():
    doc = load_pgpr_config()
    table = dict(doc["params"])
    table.pop("mu_mx")
    with pytest.raises(ValueError, match="missing required keys"):
        make_pgpr(table)


def test_pgpr_rejects_nonpositive_saturation():
    doc = load_pgpr_config()
    table = dict(doc["params"])
    table["k_px"] = 0.0
    with pytest.raises(ValueError, match="must be positive"):
        make_pgpr(table)


def test_pgpr_interaction_defaults_are_inert():
    doc = load_pgpr_config()
    base = make_pgpr(doc["params"])
    coupled = make_pgpr(doc["params"], interaction=InteractionSpec(f_c=0.1, k_f=0.2,
                                                                   g_c=0.3, k_g=0.4))
    state = [0.2, 0.3, 0.7, 0.8]
    f_base = eval_rhs(base, 1.0, state, base.default_params())
    f_coup = eval_rhs(coupled, 1.0, state, coupled.default_params())
    # cross-feeding adds X*f_c*Z/(Z+k_f) and Z*g_c*X/(X+k_g)
    assert f_coup[0] - f_base[0] == pytest.approx(0.2 * 0.1 * 0.3 / 0.5, rel=1e-12)
    assert f_coup[1] - f_base[1] == pytest.approx(0.3 * 0.3 * 0.2 / 0.6, rel=1e-12)


def test_pgpr_finite_difference_jacobian_pipeline():
    sys_ = _pgpr()
    assert sys_.jac is None
    p = sys_.default_params()
    state = np.array([0.15, 0.25, 0.8, 0.9])
    J = eval_jacobian(sys_, 1.3, state, p)
    J_oracle = fd_jacobian_oracle(sys_.rhs, 1.3, state, p)
    assert J == pytest.approx(J_oracle, rel=1e-6, abs=1e-10)


def test_pgpr_required_keys_cover_example_config():
    doc = load_pgpr_config()
    assert set(PGPR_REQUIRED_KEYS) <= set(doc["params"])


# ---------------------------------------------------------------------------
# becks, dimensional and rescaled
# ---------------------------------------------------------------------------

def test_becks_table_defaults_load_exactly(becks):
    by_name = {p.name: p.default for p in becks.params}
    for key, value in BECKS_TABLE.items():
        assert by_name[key] == value


def test_becks_washout_free_equilibrium():
    sys_ = make_becks_dim(D=0.5, N0=1e-5)
    p = sys_.default_params()
    n0 = 1e-5
    out = eval_rhs(sys_, 0.0, [0.0, 0.0, 0.0, n0], p)
    assert out == pytest.approx([0.0, 0.0, 0.0, 0.0], abs=1e-18)


def test_becks_jacobian_matches_finite_differences():
    sys_ = make_becks_dim(D=0.5, N0=1e-5)
    p = sys_.default_params()
    state = np.array([1e-6, 1e-6, 1e-6, 1e-5])
    J = eval_jacobian(sys_, 0.0, state, p)
    J_fd = fd_jacobian_oracle(sys_.rhs, 0.0, state, p)
    scale = np.abs(J_fd) + 1e-9
    assert np.max(np.abs(J - J_fd) / scale) < 1e-4


def test_becks_rejects_nonpositive_parameters():
    with pytest.raises(ValueError):
        make_becks_dim({"K_NR": 0.0})
    with pytest.raises(ValueError):
        make_becks_dim(D=-0.1)
    with pytest.raises(ValueError):
        make_becks_dim({"nope": 1.0})


def test_becks_rescale_rejects_degenerate_time_scale():
    with pytest.raises(ValueError, match="delta_R \\+ D"):
        becks_rescale_params(D=-BECKS_TABLE["delta_R"])


def test_becks_rescale_parameter_values():
    hat, n0 = becks_rescale_params(D=0.5, N0=1e-4)
    assert hat.mu_NR == pytest.approx(12.0)
    assert hat.kappa == pytest.approx(1.0)
    assert hat.delta == pytest.approx(0.5)
    assert hat.mu_NC == pytest.approx(6.0)
    assert hat.delta_C == pytest.approx(0.75)
    assert hat.delta_P == pytest.approx(0.58)
    assert n0 == pytest.approx(1e-4 / 8e-6)


def test_becks_rescaled_equilibrium_at_supply_level():
    hat, n0 = becks_rescale_params(D=0.5, N0=1e-4)
    sys_ = make_becks_rescaled(hat, n0)
    out = eval_rhs(sys_, 0.0, [0.0, 0.0, 0.0, n0], sys_.default_params())
    assert out == pytest.approx([0.0, 0.0, 0.0, 0.0], abs=1e-15)


def test_becks_rescaled_jacobian_matches_finite_differences():
    hat, n0 = becks_rescale_params(D=0.5, N0=1e-4)
    sys_ = make_becks_rescaled(hat, n0)
    p = sys_.default_params()
    rng = np.random.default_rng(5)
    for _ in range(20):
        state = rng.uniform(0.05, 3.0, size=4)
        J = eval_jacobian(sys_, 0.0, state, p)
        J_fd = fd_jacobian_oracle(sys_.rhs, 0.0, state, p)
        scale = np.abs(J_fd) + 1e-9
        assert np.max(np.abs(J - J_fd) / scale) < 1e-4


def test_becks_dual_representation_trajectories_agree():
    # Dual-integration consistency: a dimensional trajectory, mapped through
    # the change of variables, must match the rescaled trajectory. Heavy
    # dilution keeps the flow smooth and non-chaotic so the comparison is
    # well conditioned.
    D, N0 = 3.0, 1e-4
    dim = make_becks_dim(D=D, N0=N0)
    hat, n0 = becks_rescale_params(D=D, N0=N0)
    res = make_becks_rescaled(hat, n0)
    scale = BECKS_TABLE["delta_R"] + D

    state_dim = (2e-6, 1.5e-6, 3e-6, 5e-5)
    state_res = becks_map_state(state_dim, D=D)

    t_resc = 50.0
    dt_resc = 7e-4
    samp_d = cs.SamplePoint.of(dim, dim.default_params(), state_dim)
    samp_r = cs.SamplePoint.of(res, res.default_params(), state_res)
    traj_d = cs.integrate(dim, samp_d, t_resc / scale,
                          cs.IntegrationConfig(dt=dt_resc / scale, record_stride=100))
    traj_r = cs.integrate(res, samp_r, t_resc,
                          cs.IntegrationConfig(dt=dt_resc, record_stride=100))
    assert not traj_d.terminated_early and not traj_r.terminated_early
    assert traj_d.states.shape == traj_r.states.shape
    mapped = np.array([becks_map_state(row, D=D) for row in traj_d.states])
    ranges = np.maximum(np.abs(traj_r.states).max(axis=0), 1e-12)
    rel_err = np.max(np.abs(mapped - traj_r.states) / ranges)
    assert rel_err < 1e-5


def test_becks_rescaled_divergence_sign_matches_dimensional():
    D, N0 = 0.5, 1e-4
    dim = make_becks_dim(D=D, N0=N0)
    hat, n0 = becks_rescale_params(D=D, N0=N0)
    res = make_becks_rescaled(hat, n0)
    state_dim = (1e-6, 1e-6, 5e-6, 1e-4)
    sd = cs.SamplePoint.of(dim, dim.default_params(), state_dim)
    sr = cs.SamplePoint.of(res, res.default_params(), becks_map_state(state_dim, D=D))
    d_dim = divergence_at(dim, sd)
    d_res = divergence_at(res, sr)
    assert math.copysign(1, d_dim) == math.copysign(1, d_res)


# ---------------------------------------------------------------------------
# shared system machinery
# ---------------------------------------------------------------------------

def test_all_builtin_analytic_jacobians_match_finite_differences():
    rng = np.random.default_rng(17)
    boxes = {
        "quadratic3": (-5.0, 5.0),
        "kot_monod": (0.05, 1.0),
        "becks_dim": (1e-6, 1e-4),
        "becks_rescaled": (0.05, 3.0),
        "lorenz": (-10.0, 10.0),
        "lin2": (-2.0, 2.0),
    }
    for sys_ in cs.list_systems(include_hidden=True):
        if sys_.jac is None:
            continue
        lo, hi = boxes[sys_.id]
        p = sys_.default_params()
        worst = 0.0
        for _ in range(100):
            state = rng.uniform(lo, hi, size=sys_.dim)
            t = float(rng.uniform(0.0, 10.0))
            J = eval_jacobian(sys_, t, state, p)
            J_fd = fd_jacobian_oracle(sys_.rhs, t, state, p)
            scale = np.abs(J_fd) + 1e-8 * max(1.0, float(np.abs(J_fd).max()))
            worst = max(worst, float(np.max(np.abs(J - J_fd) / scale)))
        assert worst <= 1e-4, f"{sys_.id}: max FD discrepancy {worst}"


def test_duplicate_parameter_names_rejected():
    with pytest.raises(ValueError, match="duplicate parameter names"):
        cs.SystemDefinition(
            id="dup", dim=1, state_names=("y",),
            params=(cs.ParamDescriptor("a", 1.0), cs.ParamDescriptor("a", 2.0)),
            rhs=lambda t, y, p: y,
        )


def test_search_box_invariants():
    with pytest.raises(ValueError):
        cs.BoxCoord("a", 1.0, 1.0)
    with pytest.raises(ValueError):
        cs.BoxCoord("a", 0.0, 1.0, "bogus")
    with pytest.raises(ValueError):
        cs.SearchBox(())


def test_search_box_resolves_names(kot, kot_box):
    kot_box.validate_for(kot)
    bad = cs.SearchBox((cs.BoxCoord("nonexistent", 0.0, 1.0),))
    with pytest.raises(KeyError):
        bad.validate_for(kot)


def test_search_box_embedding_pins_uncovered_coordinates(kot):
    box = cs.SearchBox((cs.BoxCoord("eps", 0.0, 1.0),))
    sample = box.to_sample(kot, np.array([0.77]))
    by_name = dict(zip(kot.param_names, sample.param_values))
    assert by_name["eps"] == 0.77
    assert by_name["A"] == 5.0
    assert sample.initial_state == kot.default_state


def test_eval_rhs_dimension_mismatch_rejected(kot):
    with pytest.raises(ValueError):
        eval_rhs(kot, 0.0, [0.1, 0.2], kot.default_params())
    with pytest.raises(ValueError):
        eval_rhs(kot, 0.0, [0.1, 0.2, 0.3], kot.default_params()[:-1])


def test_divergence_of_linear_system_is_eigenvalue_sum(lin2):
    sample = cs.SamplePoint.of(lin2, lin2.default_params(), (4.2, -1.3))
    assert divergence_at(lin2, sample) == pytest.approx(-3.0)


def test_catalog_wire_format():
    rows = cs.catalog()
    ids = [r["id"] for r in rows]
    assert ids == ["becks_dim", "becks_rescaled", "kot_monod", "pgpr", "quadratic3"]
    for row in rows:
        assert set(row) == {"id", "dim", "state_names", "params", "time_dependent"}
        for p in row["params"]:
            assert set(p) == {"name", "default", "units"}
    parsed = json.loads(cs.catalog_json())
    assert parsed == rows
    assert "lorenz" in [r["id"] for r in cs.catalog(include_hidden=True)]
