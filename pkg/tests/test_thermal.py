import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from lyzeros.coupling import coupling_profile
from lyzeros.errors import TruncationError
from lyzeros.io import read_grid, write_grid
from lyzeros.thermal import (
    FockDistribution,
    ThermalParams,
    gibbs_distribution,
    log_partition_z0,
    partition_grid,
    partition_value,
)


def dense_trace_oracle(beta_omega, h_r, eta, beta_h_i, n_max=100):
    """Tr exp(-b(H_S + h_R H_I) - i b h_I H_I) / Z0 from dense matrix exponentials."""
    prof = coupling_profile(eta, n_max)
    hs = np.diag(np.arange(n_max + 1.0))
    hi = np.diag(prof.xi)
    z0 = np.trace(expm(-beta_omega * (hs + h_r * hi)))
    z = np.trace(expm(-beta_omega * (hs + h_r * hi) - 1j * beta_h_i * hi))
    return z / z0


def test_free_oscillator_is_geometric():
    d = gibbs_distribution(ThermalParams(0.5, 0.0, coupling_profile(0.0, 80)))
    n = np.arange(81)
    expect = (1 - math.exp(-0.5)) * np.exp(-0.5 * n)
    assert d.probs[0] == pytest.approx(1 - math.exp(-0.5), rel=1e-12)
    np.testing.assert_allclose(d.probs, expect / expect.sum(), rtol=1e-12)


def test_reference_state_shape(ref_template):
    d = gibbs_distribution(ref_template.with_h_r(7.0))
    p = d.probs
    # peaked away from the vacuum, unlike any thermal state of H_S alone
    assert 2 <= int(np.argmax(p)) <= 5
    assert p[21:].sum() < 2e-3
    # self-oracle: the direct unshifted formula
    n = np.arange(64)
    w = np.exp(-0.5 * (n + 7.0 * ref_template.profile.xi))
    np.testing.assert_allclose(p, w / w.sum(), rtol=1e-12)
    assert log_partition_z0(ref_template.with_h_r(7.0)) == pytest.approx(math.log(w.sum()), rel=1e-14)


def test_zero_temperature_limit():
    prof = coupling_profile(0.47, 63)
    # levels 7 and 8 are only 0.016 apart at h_r = 13
    params = ThermalParams(3000.0, 13.0, prof)
    energies = np.arange(64) + 13.0 * prof.xi
    d = gibbs_distribution(params)
    assert d.probs[int(np.argmin(energies))] > 1 - 1e-12


def test_truncation_error_names_the_cutoff():
    with pytest.raises(TruncationError, match="n_max"):
        gibbs_distribution(ThermalParams(0.1, 0.0, coupling_profile(0.47, 20)))
    d = gibbs_distribution(ThermalParams(0.1, 0.0, coupling_profile(0.47, 20)), allow_truncation=True)
    assert d.truncated and d.probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_zero_imaginary_field_is_one(ref_template):
    assert partition_value(ref_template.with_h_r(7.0), 0.0) == pytest.approx(1.0 + 0j, abs=1e-12)


def test_uniform_coupling_is_pure_phase():
    params = ThermalParams(0.5, 3.0, coupling_profile(0.0, 63))
    for b in (0.3, 2.0, 17.5):
        z = partition_value(params, b)
        assert abs(z) == pytest.approx(1.0, abs=1e-12)
        assert z == pytest.approx(np.exp(-1j * b), abs=1e-12)


def test_dense_oracle_sample_point(ref_template):
    z = partition_value(ref_template.with_h_r(7.0), 9.42)
    assert abs(z - dense_trace_oracle(0.5, 7.0, 0.47, 9.42, n_max=63)) <= 1e-10


@given(
    st.floats(0.3, 2.0), st.floats(0.0, 15.0), st.floats(0.1, 0.6), st.floats(-20.0, 20.0)
)
@settings(max_examples=100, deadline=None)
def test_matches_dense_oracle(beta, h_r, eta, b):
    # n_max = 100 keeps the tail check satisfied down to beta_omega = 0.3
    params = ThermalParams(beta, h_r, coupling_profile(eta, 100))
    assert abs(partition_value(params, b) - dense_trace_oracle(beta, h_r, eta, b)) <= 1e-10


@given(st.floats(0.3, 2.0), st.floats(-3.0, 15.0), st.floats(0.0, 0.8),
       st.lists(st.floats(-50.0, 50.0), min_size=1, max_size=8))
@settings(max_examples=60, deadline=None)
def test_normalization_bound_and_conjugation(beta, h_r, eta, bs):
    params = ThermalParams(beta, h_r, coupling_profile(eta, 100))
    assert gibbs_distribution(params).probs.sum() == pytest.approx(1.0, abs=1e-12)
    b = np.array(bs)
    z = partition_value(params, b)
    assert np.all(np.abs(z) <= 1 + 1e-12)
    assert np.all(np.abs(partition_value(params, -b) - np.conj(z)) <= 1e-14)


@pytest.mark.parametrize("beta,h_r,eta", [(0.5, 7.0, 0.47), (1.0, 13.0, 0.47), (0.8, 3.0, 0.3)])
def test_truncation_stability(beta, h_r, eta):
    small = ThermalParams(beta, h_r, coupling_profile(eta, 63))
    big = ThermalParams(beta, h_r, coupling_profile(eta, 127))
    b = np.linspace(-30, 30, 41)
    assert np.max(np.abs(partition_value(small, b) - partition_value(big, b))) <= 1e-9


def test_single_point_grid(ref_template):
    g = partition_grid(ref_template, (0.0, 0.0, 1), (0.0, 0.0, 1))
    assert g.values.shape == (1, 1)
    assert g.values[0, 0] == pytest.approx(1 + 0j, abs=1e-15)


def test_grid_invariants_and_columns(ref_template):
    g = partition_grid(ref_template, (0.0, 15.0, 31), (-20.0, 20.0, 81))
    assert g.values.shape == (31, 81)
    assert np.all(np.abs(g.values) <= 1 + 1e-12)
    np.testing.assert_allclose(g.values[:, 40], 1.0, atol=1e-12)
    # conjugation across the symmetric beta_h_i axis
    assert np.max(np.abs(g.values[:, ::-1] - np.conj(g.values))) <= 1e-14
    for i in (0, 14, 30):
        col = partition_value(ref_template.with_h_r(g.h_r_axis[i]), g.h_i_axis)
        np.testing.assert_allclose(g.values[i], col, atol=1e-15)


def test_grid_partitioning_is_deterministic(ref_template):
    whole = partition_grid(ref_template, (0.0, 15.0, 16), (0.0, 40.0, 21))
    top = partition_grid(ref_template, (0.0, 7.0, 8), (0.0, 40.0, 21))
    bottom = partition_grid(ref_template, (8.0, 15.0, 8), (0.0, 40.0, 21))
    np.testing.assert_array_equal(np.vstack([top.values, bottom.values]), whole.values)


def test_zero_clusters_visible_on_grid(ref_template, drive):
    # beta_h_i = Omega t over t in [0, 200 us]
    g = partition_grid(ref_template, (0.0, 15.0, 151), (0.0, drive.omega_rabi * 200e-6, 401))
    mag = np.abs(g.values)
    for h in (7.0, 13.0):
        i = int(np.argmin(np.abs(g.h_r_axis - h)))
        assert mag[i - 7 : i + 8].min() < 0.05


def test_grid_truncation_error_names_column():
    tmpl = ThermalParams(0.2, 0.0, coupling_profile(0.47, 30))
    with pytest.raises(TruncationError, match="h_r="):
        partition_grid(tmpl, (0.0, 2.0, 3), (0.0, 1.0, 2))


def test_grid_csv_round_trip(tmp_path, ref_template):
    g = partition_grid(ref_template, (0.0, 15.0, 7), (0.0, 40.0, 9))
    csv_path, sidecar = write_grid(tmp_path / "grid.csv", g)
    header = csv_path.read_text().splitlines()[0]
    assert header == "h_r,beta_h_i,re_z,im_z,abs_z"
    back = read_grid(csv_path)
    np.testing.assert_array_equal(back.values, g.values)
    np.testing.assert_array_equal(back.h_i_axis, g.h_i_axis)
    assert back.metadata["eta"] == 0.47 and back.metadata["beta_omega"] == 0.5


def test_fock_distribution_rejects_negative():
    with pytest.raises(ValueError):
        FockDistribution([0.5, -0.1, 0.6])
