import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from fellerforge.errors import CapabilityError, ParameterDomainError
from fellerforge.levy import ExponentSpec, LevyTriplet, stable_density_constant
from fellerforge.rng import RngStream
from fellerforge.sampling import (
    IncrementSampler,
    positive_stable,
    sample_increments,
    symmetric_stable,
    write_samples_csv,
)

from .conftest import cf_se

XI = np.concatenate([np.logspace(-1, 1, 12), -np.logspace(-1, 0.5, 8)])


def ecf(x, xi):
    ph = np.outer(x, xi)
    return np.cos(ph).mean(0) + 1j * np.sin(ph).mean(0)


def assert_cf_match(samples, ref, max_exceed=2):
    emp = ecf(samples, XI)
    se = cf_se(len(samples), ref)
    exceed = np.abs(emp - ref) > 3 * se + 1e-12
    assert exceed.sum() <= max_exceed, (np.abs(emp - ref) / np.maximum(se, 1e-300))


def test_stream_reproducible_and_distinct():
    a = RngStream(5, 1).generator().random(8)
    b = RngStream(5, 1).generator().random(8)
    c = RngStream(5, 2).generator().random(8)
    d = RngStream(6, 1).generator().random(8)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)


def test_child_streams_distinct():
    root = RngStream(3, 0)
    keys = {root.child(i).key for i in range(1000)}
    assert len(keys) == 1000


def test_stream_ids_wrap_to_64_bits():
    assert RngStream(2**64 + 7, -1).seed == 7
    assert RngStream(0, -1).stream_id == 2**64 - 1


@pytest.mark.parametrize("threads", [1, 2, 4])
def test_sampling_independent_of_threads(threads):
    spec = ExponentSpec.isotropic_stable(1.3)
    ref = sample_increments(spec, 1.0, 20_000, RngStream(11), threads=1)
    out = sample_increments(spec, 1.0, 20_000, RngStream(11), threads=threads)
    np.testing.assert_array_equal(ref, out)


def test_env_threads_do_not_change_samples(monkeypatch):
    spec = ExponentSpec.relativistic_stable(1.0, 1.0)
    ref = sample_increments(spec, 1.0, 10_000, RngStream(2))
    monkeypatch.setenv("FORGE_DEFAULT_THREADS", "3")
    np.testing.assert_array_equal(ref, sample_increments(spec, 1.0, 10_000, RngStream(2)))


def test_gaussian_variance():
    x = sample_increments(ExponentSpec.isotropic_stable(2.0), 1.0, 1_000_000, RngStream(0))
    assert abs(np.var(x) - 2.0) < 0.02


def test_cauchy_median_identity():
    x = sample_increments(ExponentSpec.isotropic_stable(1.0), 1.0, 1_000_000, RngStream(1))
    assert abs(np.mean(np.abs(x) <= 1.0) - 0.5) < 0.005


def test_stable_self_similarity():
    spec = ExponentSpec.isotropic_stable(1.5)
    a = sample_increments(spec, 4.0, 100_000, RngStream(1, 1))
    b = 4 ** (1 / 1.5) * sample_increments(spec, 1.0, 100_000, RngStream(1, 2))
    assert stats.ks_2samp(a, b).statistic < 0.01


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_cms_against_scipy_levy_stable(alpha):
    # scipy's S1 parameterisation with beta=0, scale 1 has CF exp(-|xi|^alpha)
    x = symmetric_stable(alpha, 4000, RngStream(9).generator())
    assert stats.ks_1samp(x, stats.levy_stable(alpha, 0.0).cdf).pvalue > 1e-3


def test_positive_stable_laplace_transform():
    # E exp(-s S) = exp(-s^rho)
    rho = 0.6
    s = positive_stable(rho, 200_000, RngStream(4).generator())
    assert np.all(s > 0)
    for lam in (0.3, 1.0, 3.0):
        est = np.exp(-lam * s).mean()
        assert abs(est - math.exp(-lam**rho)) < 4 * np.exp(-lam * s).std() / math.sqrt(len(s))


SPECS = [
    (ExponentSpec.isotropic_stable(0.7), lambda k: np.abs(k) ** 0.7),
    (ExponentSpec.isotropic_stable(1.5), lambda k: np.abs(k) ** 1.5),
    (ExponentSpec.relativistic_stable(1.0, 1.0), lambda k: np.sqrt(k**2 + 1) - 1),
    (ExponentSpec.relativistic_stable(1.5, 2.0), lambda k: (k**2 + 4) ** 0.75 - 4**0.75),
    (ExponentSpec.homographic(2.0), lambda k: 2 * k**2 / (1 + 2 * k**2)),
    (ExponentSpec.truncated_stable(0.5, 1.0),
     lambda k: (1 + k**2) ** 0.25 * np.cos(0.5 * np.arctan(np.abs(k))) - 1),
]


@pytest.mark.parametrize("spec,psi", SPECS, ids=lambda s: getattr(s, "family", ""))
@pytest.mark.parametrize("t", [0.3, 1.0])
def test_sampler_cf_matches_oracle(spec, psi, t):
    x = sample_increments(spec, t, 100_000, RngStream(21, 3))
    assert_cf_match(x, np.exp(-t * psi(XI)))


def test_generic_compound_poisson_cf():
    # finite measure: uniform jumps on [1, 2] with total mass 1
    trip = LevyTriplet(density=lambda y: np.where((y > 1) & (y < 2), 1.0, 0.0), support=2.0,
                       breakpoints=(1.0,), beta=2.0)
    x = sample_increments(ExponentSpec.generic(trip), 1.0, 100_000, RngStream(8))
    # psi = int_1^2 (1 - e^{iy xi}) dy
    k = XI
    mean_e = (np.exp(2j * k) - np.exp(1j * k)) / (1j * k)
    assert_cf_match(x, np.exp(-(1 - mean_e)))


def test_generic_stable_triplet_cf():
    a = 1.2
    c = stable_density_constant(a)
    trip = LevyTriplet(density=lambda y: c * np.abs(y) ** (-1 - a), beta=a, small_exponent=a,
                       symmetric=True)
    x = sample_increments(ExponentSpec.generic(trip), 1.0, 100_000, RngStream(8, 1))
    assert_cf_match(x, np.exp(-np.abs(XI) ** a), max_exceed=3)


def test_generic_with_drift_and_diffusion():
    trip = LevyTriplet(b=[0.5], Q=[[2.0]])
    x = sample_increments(ExponentSpec.generic(trip), 2.0, 100_000, RngStream(3))
    assert abs(x.mean() - 1.0) < 4 * math.sqrt(4.0 / 1e5)
    assert abs(x.var() - 4.0) < 0.06


def test_2d_isotropic_stable_cf():
    spec = ExponentSpec.isotropic_stable(1.3, dim=2)
    x = sample_increments(spec, 1.0, 100_000, RngStream(5))
    assert x.shape == (100_000, 2)
    for direction in (np.array([1.0, 0.0]), np.array([0.6, 0.8])):
        proj = x @ direction
        assert_cf_match(proj, np.exp(-np.abs(XI) ** 1.3))


def test_truncated_2d_is_capability_error():
    with pytest.raises(CapabilityError):
        IncrementSampler(ExponentSpec.truncated_stable(0.5, 1.0, dim=2), 1.0)


def test_bad_arguments():
    spec = ExponentSpec.isotropic_stable(1.0)
    with pytest.raises(ParameterDomainError):
        sample_increments(spec, 1.0, 0, RngStream(0))
    with pytest.raises(ParameterDomainError):
        IncrementSampler(spec, 0.0)


def test_csv_dump(tmp_path):
    x = np.array([[1.0, 2.0], [3.0, 4.5]])
    write_samples_csv(tmp_path / "s.csv", x)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "index,value_1,value_2"
    assert lines[2] == "1,3,4.5"


@given(st.integers(0, 2**63), st.integers(0, 2**63), st.integers(1, 20_000))
def test_same_stream_bitwise(seed, sid, n):
    spec = ExponentSpec.isotropic_stable(1.7)
    a = sample_increments(spec, 0.5, n, RngStream(seed, sid))
    b = sample_increments(spec, 0.5, n, RngStream(seed, sid), threads=2)
    np.testing.assert_array_equal(a, b)
