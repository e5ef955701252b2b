import json

import numpy as np
import pytest
import scipy.linalg as sla

from discal.errors import (
    DegenerateScaleError,
    NoDataError,
    NotFoundError,
    UnsupportedViewError,
    ValidationError,
)
from discal.fem import ScenarioConfig
from discal.prior import HyperParams, build_prior
from discal.studio import (
    StudioSession,
    generate_sample_dataset,
    overview_payload,
    perturbation_basis,
)
from conftest import make_space


def make_prior(n=17, beta_z=0.02, alpha_z=0.5, alpha_u=1.0):
    space = make_space(n)
    hyper = HyperParams(
        alpha_u=alpha_u, beta_u=0.02, alpha_z=alpha_z, beta_z=beta_z, alpha_d=1e-4
    )
    zt = 1.0 + np.sin(np.pi * space.nodes[:, 0])
    return build_prior(space, space, hyper, z_tilde=zt), zt


@pytest.fixture(scope="module")
def session_1d():
    return StudioSession(
        ScenarioConfig(problem="stationary-1d", n_space=17),
        n_data=2,
        init_options={"n_mc_gamma": 40, "n_mc_eig": 1000},
    )


@pytest.fixture(scope="module")
def session_transient():
    return StudioSession(
        ScenarioConfig(problem="transient-1d", n_space=13, n_time=8),
        n_data=2,
        init_options={"n_mc_gamma": 30, "n_mc_eig": 800},
    )


# -- perturbation basis ---------------------------------------------------------------


def test_basis_flat_spectrum_keeps_everything():
    prior, zt = make_prior(beta_z=0.0)
    basis = perturbation_basis(prior, zt)
    assert basis.count == prior.n_z
    np.testing.assert_allclose(basis.eigenvalues, 1.0, atol=1e-10)


def test_basis_matches_dense_generalized_eigensolver():
    prior, zt = make_prior(beta_z=0.05)
    basis = perturbation_basis(prior, zt)
    E = prior.factor_z.E
    M = prior.control_space.mass_s
    mu, V = sla.eigh(prior.control_space.stiffness_s, M)
    lam_expected = np.sort(1.0 / (1.0 + 0.05 * np.maximum(mu, 0.0)))[::-1]
    np.testing.assert_allclose(
        basis.eigenvalues, lam_expected[: basis.count], atol=1e-8
    )
    # directions diagonalize E in the mass inner product and carry the
    # expansion-point norm
    scale = np.sqrt(prior.control_space.norm2(zt))
    for lam, d in zip(basis.eigenvalues, basis.directions):
        np.testing.assert_allclose(
            E @ d, (1.0 / lam) * (M @ d), atol=1e-8 * np.abs(E @ d).max()
        )
        assert np.sqrt(prior.control_space.norm2(d)) == pytest.approx(scale, rel=1e-10)


def test_basis_count_non_increasing_in_smoothness():
    counts = []
    for beta_z in (0.0, 1e-3, 1e-2, 1e-1, 1.0):
        prior, zt = make_prior(beta_z=beta_z)
        counts.append(perturbation_basis(prior, zt).count)
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert counts[-1] >= 1


def test_basis_rejects_zero_expansion_point():
    prior, _ = make_prior()
    with pytest.raises(DegenerateScaleError):
        perturbation_basis(prior, np.zeros(prior.n_z))


# -- sample dataset -------------------------------------------------------------------


def test_dataset_record_count_and_determinism():
    prior, zt = make_prior()
    basis = perturbation_basis(prior, zt)
    ds1 = generate_sample_dataset(prior, basis, q=7, seed=3)
    ds2 = generate_sample_dataset(prior, basis, q=7, seed=3)
    assert ds1.n_records == 7 * basis.count
    np.testing.assert_allclose(ds1.base_fields, ds2.base_fields, atol=0)
    np.testing.assert_allclose(ds1.max_abs_diff(), ds2.max_abs_diff(), atol=0)


def test_matched_noise_scaling_across_perturbations():
    # For a fixed draw the difference fields share the noise, so magnitudes
    # scale exactly by the square-rooted spectral weights.
    prior, zt = make_prior()
    basis = perturbation_basis(prior, zt)
    ds = generate_sample_dataset(prior, basis, q=4, seed=0)
    maxabs = ds.max_abs_diff()
    for i in range(4):
        for k in range(1, basis.count):
            expected = np.sqrt(basis.scales[k] / basis.scales[0])
            assert maxabs[i, k] / maxabs[i, 0] == pytest.approx(expected, rel=1e-10)


def test_forced_zero_noise_gives_zero_fields():
    prior, zt = make_prior()
    basis = perturbation_basis(prior, zt)
    zero = lambda i: (np.zeros(prior.n_u), np.zeros(prior.n_u))
    ds = generate_sample_dataset(prior, basis, q=3, seed=0, noise=zero)
    np.testing.assert_allclose(ds.base_fields, 0.0, atol=0)
    for i in range(3):
        for k in range(basis.count):
            np.testing.assert_allclose(ds.diff_field(i, k), 0.0, atol=0)


def test_halving_control_variance_halves_difference_fields():
    prior, zt = make_prior(alpha_z=0.5)
    prior_quarter, _ = make_prior(alpha_z=0.5 / 4.0)
    basis = perturbation_basis(prior, zt)
    basis_q = perturbation_basis(prior_quarter, zt)
    ds = generate_sample_dataset(prior, basis, q=5, seed=9)
    ds_q = generate_sample_dataset(prior_quarter, basis_q, q=5, seed=9)
    ratio = ds_q.max_abs_diff() / ds.max_abs_diff()
    np.testing.assert_allclose(ratio, 0.5, rtol=1e-12)
    np.testing.assert_allclose(ds_q.base_fields, ds.base_fields, rtol=1e-13)


# -- overview -------------------------------------------------------------------------


def test_overview_counts_partition_records():
    prior, zt = make_prior()
    basis = perturbation_basis(prior, zt)
    ds = generate_sample_dataset(prior, basis, q=11, seed=1)
    ov = overview_payload(ds, "control")
    assert ov["total"] == 11 * basis.count
    assert sum(b["count"] for b in ov["bins"]) == ov["total"]
    ovs = overview_payload(ds, "state")
    assert ovs["total"] == 11
    assert sum(b["count"] for b in ovs["bins"]) == 11


def test_overview_bin_payload_shape():
    prior, zt = make_prior()
    basis = perturbation_basis(prior, zt)
    ds = generate_sample_dataset(prior, basis, q=6, seed=2)
    ov = overview_payload(ds, "control")
    assert len(ov["bins"]) == min(basis.count, 12)
    for b in ov["bins"]:
        assert b["hi"] >= b["lo"]
        if b["count"]:
            qs = b["quantiles"]
            assert qs["q05"] <= qs["q25"] <= qs["q50"] <= qs["q75"] <= qs["q95"]
            assert len(b["points"]) <= 500
            for p in b["points"]:
                assert 0 <= p["i"] < 6 and 0 <= p["k"] < basis.count


def test_overview_rejects_bad_view_and_missing_data():
    prior, zt = make_prior()
    basis = perturbation_basis(prior, zt)
    ds = generate_sample_dataset(prior, basis, q=3, seed=0)
    with pytest.raises(UnsupportedViewError):
        overview_payload(ds, "bogus")
    with pytest.raises(NoDataError):
        overview_payload(None, "control")


# -- records -------------------------------------------------------------------------


def test_record_metrics_recompute_and_roundtrip(session_1d):
    session_1d.generate(q=6, seed=4)
    payload = session_1d.inspect_payload(2, 1)
    wire = json.loads(json.dumps(payload))
    diff = np.asarray(wire["diff_field"]["values"], dtype=float)
    base = np.asarray(wire["base_field"]["values"], dtype=float)
    assert wire["metrics"]["max_abs_diff"] == float(np.max(np.abs(diff)))
    assert wire["metrics"]["max_abs_base"] == float(np.max(np.abs(base)))
    assert wire["diff_field"]["dim"] == 1
    assert len(wire["diff_field"]["nodes"]) == len(wire["diff_field"]["values"])


def test_record_out_of_range(session_1d):
    session_1d.generate(q=4, seed=0)
    with pytest.raises(NotFoundError):
        session_1d.inspect(99, 0)
    with pytest.raises(NotFoundError):
        session_1d.inspect(0, 99)


def test_leading_mode_has_longest_correlation(session_1d):
    basis = session_1d.basis
    assert basis.kappas[0] == pytest.approx(basis.kappas.max(), rel=1e-12)


# -- session lifecycle ----------------------------------------------------------------


def test_update_hyperparams_validation(session_1d):
    with pytest.raises(ValidationError):
        session_1d.update_hyperparams({"beta_u": -1.0})
    with pytest.raises(ValidationError):
        session_1d.update_hyperparams({"alpha_u": 0.0})
    with pytest.raises(ValidationError):
        session_1d.update_hyperparams({"nope": 1.0})


def test_stale_flag_lifecycle():
    session = StudioSession(
        ScenarioConfig(problem="stationary-1d", n_space=13),
        n_data=2,
        init_options={"n_mc_gamma": 20, "n_mc_eig": 500},
    )
    session.generate(q=4, seed=0)
    assert session.overview("control")["stale"] is False
    before = len(session.audit)
    session.update_hyperparams({"alpha_z": session.hyper.alpha_z / 4.0})
    assert session.stale is True
    ov = session.overview("control")
    assert ov["stale"] is True  # old payload still served, but flagged
    session.generate(q=4, seed=0)
    assert session.overview("control")["stale"] is False
    assert len(session.audit) == before + 1


def test_empty_patch_is_noop_but_audited(session_1d):
    before_hyper = session_1d.hyper.to_dict()
    before_audit = len(session_1d.audit)
    session_1d.update_hyperparams({})
    assert session_1d.hyper.to_dict() == before_hyper
    assert len(session_1d.audit) == before_audit + 1


def test_quartering_control_variance_halves_bin_medians(session_1d):
    session_1d.generate(q=10, seed=21)
    ov1 = session_1d.overview("control")
    session_1d.update_hyperparams({"alpha_z": session_1d.hyper.alpha_z / 4.0})
    session_1d.generate(q=10, seed=21)
    ov2 = session_1d.overview("control")
    for b1, b2 in zip(ov1["bins"], ov2["bins"]):
        if b1["count"]:
            assert b2["quantiles"]["q50"] == pytest.approx(
                b1["quantiles"]["q50"] / 2.0, rel=1e-10
            )
    # restore for other tests sharing the fixture
    session_1d.update_hyperparams({"alpha_z": session_1d.hyper.alpha_z * 4.0})


def test_increasing_smoothness_damps_rough_bins():
    base = StudioSession(
        ScenarioConfig(problem="stationary-1d", n_space=17),
        n_data=2,
        init_options={"n_mc_gamma": 20, "n_mc_eig": 500},
    )
    base.generate(q=30, seed=5)
    ov1 = base.overview("control")
    rough1 = next(b for b in ov1["bins"] if b["count"])
    base.update_hyperparams({"beta_z": base.hyper.beta_z * 30.0})
    base.generate(q=30, seed=5)
    ov2 = base.overview("control")
    rough2 = next(b for b in ov2["bins"] if b["count"])
    assert rough2["quantiles"]["q50"] < rough1["quantiles"]["q50"]


def test_export_snapshot(session_1d):
    session_1d.generate(q=5, seed=8)
    doc = json.loads(json.dumps(session_1d.export()))
    assert doc["scenario"]["problem"] == "stationary-1d"
    assert "alpha_u" in doc["hyperparams"]
    assert len(doc["audit"]) >= 1
    assert doc["samples"]["q"] == 5


# -- timeseries -----------------------------------------------------------------------


def test_timeseries_requires_transient(session_1d):
    with pytest.raises(UnsupportedViewError):
        session_1d.timeseries()


def test_timeseries_curve_shapes(session_transient):
    session_transient.generate(q=7, seed=0)
    ts = session_transient.timeseries()
    nt = session_transient.bundle.state_space.n_time
    assert len(ts["t"]) == nt
    assert len(ts["curves"]) == 7
    assert all(len(c) == nt for c in ts["curves"])
    assert len(ts["data_curve"]) == nt
    # both models start from rest: the data curve vanishes at t = 0
    assert ts["data_curve"][0] == pytest.approx(0.0, abs=1e-12)


def test_timeseries_adapted_weights_ramp(session_transient):
    session_transient.generate(q=60, seed=3)
    ts = session_transient.timeseries()
    curves = np.asarray(ts["curves"])
    med = np.median(curves, axis=0)
    assert med[0] < 0.2 * med[-1]


def test_posterior_ensemble_payload(session_1d):
    doc = session_1d.posterior_ensemble(n=7, seed=0)
    assert len(doc["samples"]) == 7
    assert len(doc["z_tilde"]) == session_1d.bundle.control_space.n
    assert len(doc["hifi_optimum"]) == session_1d.bundle.control_space.n
