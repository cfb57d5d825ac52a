import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from oracles import expm_displacement
from photocount.states import (
    Cat,
    Coherent,
    Explicit,
    Fock,
    FockDensityMatrix,
    Mixture,
    SqueezedVacuum,
    Thermal,
    Vacuum,
    default_dim,
    displaced_fock_overlap,
    displacement_matrix,
    mean_photon_number,
    photon_number_distribution,
    to_density_matrix,
)

amplitudes = st.complex_numbers(max_magnitude=2.5, allow_nan=False, allow_infinity=False)


def state_strategy():
    return st.one_of(
        st.just(Vacuum()),
        amplitudes.map(Coherent),
        st.integers(0, 6).map(Fock),
        st.floats(0, 2).map(Thermal),
        st.floats(0, 0.8).map(SqueezedVacuum),
        amplitudes.filter(lambda a: abs(a) > 0.05).map(Cat),
    )


def test_vacuum_matrix():
    rho = to_density_matrix(Vacuum(), 4)
    assert np.array_equal(rho.elements, np.diag([1, 0, 0, 0]).astype(complex))
    assert rho.leakage == 0


def test_coherent_diagonal_is_poisson():
    rho = to_density_matrix(Coherent(1.0), 30)
    n = np.arange(30)
    expected = np.array([math.exp(-1) / math.factorial(k) for k in n])
    assert np.allclose(rho.diagonal, expected, atol=1e-15, rtol=1e-13)
    assert rho.diagonal[0] == pytest.approx(0.367879, abs=1e-6)


def test_cat_normalisation_and_series():
    a0 = 3j
    spec = Cat(a0)
    assert spec.norm == pytest.approx(1 / math.sqrt(2 * (1 + math.exp(-18))), rel=1e-15)
    rho = to_density_matrix(spec, 40)
    assert rho.trace == pytest.approx(1.0, abs=1e-10)
    # series oracle: N (|a0> + |-a0>) expanded term by term
    c = np.array([spec.norm * math.exp(-4.5) * (a0**n + (-a0) ** n) / math.sqrt(math.factorial(n))
                  for n in range(40)])
    assert np.allclose(rho.elements, np.outer(c, c.conj()), atol=1e-14)


def test_validation_errors():
    with pytest.raises(ValueError):
        to_density_matrix(Vacuum(), 0)
    with pytest.raises(ValueError):
        to_density_matrix(Fock(4), 4)
    with pytest.raises(ValueError):
        Thermal(-0.1)
    with pytest.raises(ValueError):
        SqueezedVacuum(-1.0)
    with pytest.raises(ValueError):
        Fock(-1)
    with pytest.raises(ValueError):
        Mixture(((0.5, Vacuum()), (0.4, Fock(1))))
    with pytest.raises(ValueError):
        Mixture(((1.2, Vacuum()), (-0.2, Fock(1))))


def test_photon_distribution_examples():
    assert photon_number_distribution(Thermal(2.0), 0)[0] == pytest.approx(1 / 3, rel=1e-15)
    assert np.array_equal(photon_number_distribution(Fock(1), 3), [0, 1, 0, 0])
    p = photon_number_distribution(SqueezedVacuum(0.7), 30)
    assert np.all(p[1::2] == 0)


def test_squeezed_against_matrix_exponential():
    r, big = 0.6, 120
    a = np.diag(np.sqrt(np.arange(1, big)), 1)
    S = linalg.expm(r * (a @ a - a.T @ a.T) / 2)
    amp = S[:, 0]
    rho = to_density_matrix(SqueezedVacuum(r), 40)
    assert np.allclose(rho.elements, np.outer(amp[:40], amp[:40].conj()), atol=1e-12)
    assert np.allclose(photon_number_distribution(SqueezedVacuum(r), 39), abs(amp[:40]) ** 2, atol=1e-13)
    assert mean_photon_number(SqueezedVacuum(r)) == pytest.approx(np.sinh(r) ** 2, rel=1e-12)


def test_displaced_overlap_examples():
    for m in range(4):
        for n in range(4):
            assert displaced_fock_overlap(m, n, 0) == (1 if m == n else 0)
    assert displaced_fock_overlap(0, 0, 1.0) == pytest.approx(math.exp(-0.5), abs=1e-15)
    g = 0.3 + 0.4j
    ref = expm_displacement(g, 10, big=60)
    assert abs(displaced_fock_overlap(2, 1, g) - ref[2, 1]) < 1e-12


@settings(max_examples=30, deadline=None)
@given(amplitudes, st.integers(0, 15), st.integers(0, 15))
def test_overlap_closed_form_matches_recurrence(g, m, n):
    dm = displacement_matrix(g, 16)
    assert abs(displaced_fock_overlap(m, n, g) - dm[m, n]) < 1e-12


def test_displacement_against_expm():
    g = -1.1 + 0.7j
    assert np.max(abs(displacement_matrix(g, 20) - expm_displacement(g, 20))) < 1e-12


def test_displacement_unitarity_and_inverse():
    g = 1.3 - 0.4j
    D = displacement_matrix(g, 120, 20)
    assert np.allclose((abs(D) ** 2).sum(axis=0), 1, atol=1e-10)
    Dp = displacement_matrix(g, 20, 120)
    Dm = displacement_matrix(-g, 120, 20)
    assert np.allclose(Dp @ Dm, np.eye(20), atol=1e-8)


def test_displacement_stable_at_high_photon_number():
    D = displacement_matrix(2.0, 130, 110)
    assert np.all(np.isfinite(D))
    assert abs(displaced_fock_overlap(100, 100, 2.0) - D[100, 100]) < 1e-10


@settings(max_examples=40, deadline=None)
@given(state_strategy(), st.integers(1, 30))
def test_density_matrix_invariants(spec, dim):
    if isinstance(spec, Fock) and spec.n >= dim:
        return
    rho = to_density_matrix(spec, dim)
    assert np.array_equal(rho.elements, rho.elements.conj().T)
    diag = rho.diagonal
    assert np.all(diag >= -1e-12)
    assert 1 - rho.leakage - 1e-10 <= rho.trace <= 1 + 1e-12
    assert np.linalg.eigvalsh(rho.elements).min() > -1e-10
    p = photon_number_distribution(spec, dim - 1)
    assert np.allclose(p, diag, atol=1e-12)
    assert np.all(np.cumsum(p) <= 1 + 1e-12)


def test_mixture_is_linear():
    comps = ((0.25, Coherent(1 + 1j)), (0.5, Fock(2)), (0.25, Cat(0.8)))
    rho = to_density_matrix(Mixture(comps), 25)
    ref = sum(w * to_density_matrix(c, 25).elements for w, c in comps)
    assert np.max(abs(rho.elements - ref)) < 1e-12


def test_explicit_roundtrip_and_padding():
    base = to_density_matrix(Fock(2), 3)
    rho = to_density_matrix(Explicit(base), 6)
    assert rho.dim == 6 and rho.elements[2, 2] == 1
    small = to_density_matrix(Coherent(1.0), 30).padded(3)
    assert small.leakage == pytest.approx(1 - sum(math.exp(-1) / math.factorial(k) for k in range(3)), rel=1e-10)


def test_density_matrix_immutable():
    rho = to_density_matrix(Coherent(0.5), 5)
    with pytest.raises(ValueError):
        rho.elements[0, 0] = 0
    with pytest.raises(ValueError):
        FockDensityMatrix(np.ones((2, 3)))


def test_coherent_mean_is_exact():
    a = 1.7 - 0.2j
    p = photon_number_distribution(Coherent(a), 200)
    assert abs(np.arange(201) @ p - abs(a) ** 2) < 1e-10


@pytest.mark.parametrize("spec", [Coherent(2.0), Cat(3j), Thermal(1.5), SqueezedVacuum(0.9), Coherent(8)])
def test_default_dim_meets_truncation_policy(spec):
    rho = to_density_matrix(spec, default_dim(spec))
    assert rho.leakage < 1e-8
    assert rho.trace == pytest.approx(1.0, abs=1e-10)
