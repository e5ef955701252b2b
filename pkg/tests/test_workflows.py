import numpy as np
import pytest

from discal.fem import ScenarioConfig
from discal.workflows import (
    build_scenario,
    generate_calibration_data,
    run_pipeline,
    solve_highfi_optimum,
)


def _check_result(res, n_control, ensemble_n):
    ens = np.asarray(res["ensemble"]["samples"])
    assert ens.shape == (ensemble_n, n_control)
    assert len(res["ensemble"]["z_tilde"]) == n_control
    assert len(res["ensemble"]["hifi_optimum"]) == n_control
    hyper = res["hyperparams"]
    misfits = res["posterior"].mean_data_misfits()
    bound = 5.0 * np.sqrt(hyper.alpha_d) * np.sqrt(res["bundle"].state_space.n)
    assert np.all(misfits <= bound)


def test_pipeline_stationary_1d():
    res = run_pipeline(
        ScenarioConfig(problem="stationary-1d", n_space=33),
        n_data=2, ensemble_n=10, seed=0, n_mc_gamma=40, n_mc_eig=800,
    )
    _check_result(res, 33, 10)


def test_pipeline_transient_1d_structured_posterior():
    # Parameter count far above any dense-factorization budget; everything
    # must route through the data-space structure.
    sc = ScenarioConfig(problem="transient-1d", n_space=33, n_time=32)
    res = run_pipeline(sc, n_data=2, ensemble_n=6, seed=0, n_mc_gamma=30, n_mc_eig=500)
    n_theta = res["bundle"].state_space.n * (res["bundle"].control_space.n + 1)
    assert n_theta > 2 * 10**4
    _check_result(res, 33, 6)


def test_pipeline_stationary_2d():
    res = run_pipeline(
        ScenarioConfig(problem="stationary-2d", n_space=9),
        n_data=1, ensemble_n=6, seed=0, n_mc_gamma=30, n_mc_eig=500,
    )
    _check_result(res, 81, 6)


def test_single_datum_pipeline_supported():
    # One model evaluation is enough: the expansion-point datum alone.
    res = run_pipeline(
        ScenarioConfig(problem="stationary-1d", n_space=17),
        n_data=1, ensemble_n=4, seed=0, n_mc_gamma=20, n_mc_eig=300,
    )
    assert res["dataset"].n_samples == 1
    _check_result(res, 17, 4)


def test_highfi_reference_differs_from_lowfi_optimum():
    bundle = build_scenario(ScenarioConfig(problem="stationary-1d", n_space=33))
    z_hi = solve_highfi_optimum(bundle)
    rel = np.linalg.norm(z_hi - bundle.z_tilde) / np.linalg.norm(z_hi)
    assert rel > 0.05  # the advection gap is substantial


def test_calibration_data_convention():
    bundle = build_scenario(ScenarioConfig(problem="stationary-1d", n_space=17))
    ds = generate_calibration_data(bundle, n_data=3, seed=4)
    np.testing.assert_allclose(ds.z_tilde, bundle.z_tilde, atol=0)
    assert ds.n_samples == 3
    # raw data reproduces the model gap at the stored controls
    gap = bundle.highfi(ds.Z) - bundle.lowfi(ds.Z)
    np.testing.assert_allclose(ds.d_raw, gap, atol=1e-10)
