import numpy as np
import pytest

from kidecomp.decompose import ki_decompose
from kidecomp.ensemble import Ensemble
from kidecomp.measures import fidelity, info_measures, von_neumann_entropy
from kidecomp.oracles import PlantSpec, haar_unitary, planted_ensemble, random_density

KET0 = np.array([[1, 0], [0, 0]], dtype=complex)
KET1 = np.array([[0, 0], [0, 1]], dtype=complex)
PLUS = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)


def test_entropy_pure_state():
    assert von_neumann_entropy(PLUS) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_entropy_maximally_mixed(d):
    assert von_neumann_entropy(np.eye(d, dtype=complex) / d) == pytest.approx(np.log2(d))


def test_entropy_two_level():
    # direct evaluation of the two-term sum
    expected = 2.0 - 0.75 * np.log2(3.0)
    got = von_neumann_entropy(np.diag([0.75, 0.25]).astype(complex))
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(0.811278, abs=1e-6)


def test_fidelity_identical():
    rng = np.random.default_rng(0)
    rho = random_density(3, rng)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)


def test_fidelity_orthogonal():
    assert fidelity(KET0, KET1) == pytest.approx(0.0, abs=1e-12)


def test_fidelity_half_overlap():
    assert fidelity(KET0, PLUS) == pytest.approx(0.5, abs=1e-12)


def test_fidelity_symmetric_random():
    rng = np.random.default_rng(1)
    for _ in range(10):
        rho, sigma = random_density(3, rng), random_density(3, rng)
        assert abs(fidelity(rho, sigma) - fidelity(sigma, rho)) <= 1e-9


def test_measures_classical_bit():
    e = Ensemble(probs=[0.5, 0.5], states=[KET0, KET1])
    m = info_measures(ki_decompose(e, seed=0), e)
    assert m.info_classical == pytest.approx(1.0, abs=1e-9)
    assert m.info_nonclassical == pytest.approx(0.0, abs=1e-9)
    assert m.info_redundant == pytest.approx(0.0, abs=1e-9)
    assert m.ebits_prepared == 0.0
    assert m.ebits_asymptotic == pytest.approx(0.0, abs=1e-9)


def test_measures_two_pure_states():
    # average state eigenvalues (1 +- 1/sqrt(2)) / 2, entropy by direct formula
    lam = np.array([(1 + 2**-0.5) / 2, (1 - 2**-0.5) / 2])
    s_expected = float(-np.sum(lam * np.log2(lam)))
    e = Ensemble(probs=[0.5, 0.5], states=[KET0, PLUS])
    m = info_measures(ki_decompose(e, seed=0), e)
    assert m.ebits_prepared == pytest.approx(1.0, abs=1e-9)
    assert m.ebits_consumed == pytest.approx(1.0, abs=1e-9)
    assert m.info_classical == pytest.approx(0.0, abs=1e-9)
    assert m.info_redundant == pytest.approx(0.0, abs=1e-9)
    assert m.info_nonclassical == pytest.approx(s_expected, abs=1e-9)
    assert m.ebits_asymptotic == pytest.approx(s_expected, abs=1e-9)
    assert m.info_nonclassical == pytest.approx(0.600876, abs=1e-6)


def test_measures_single_state():
    rng = np.random.default_rng(5)
    rho = random_density(3, rng)
    e = Ensemble(probs=[1.0], states=[rho])
    m = info_measures(ki_decompose(e, seed=0), e)
    assert m.info_classical == pytest.approx(0.0, abs=1e-8)
    assert m.info_nonclassical == pytest.approx(0.0, abs=1e-8)
    assert m.info_redundant == pytest.approx(von_neumann_entropy(rho), abs=1e-8)
    assert m.ebits_prepared == pytest.approx(0.0, abs=1e-8)
    assert m.ebits_consumed == pytest.approx(0.0, abs=1e-8)


def test_additivity_on_planted_ensembles():
    for seed in range(5):
        e, _ = planted_ensemble(PlantSpec(blocks=((2, 1), (1, 2)), num_states=3, seed=seed))
        m = info_measures(ki_decompose(e, seed=0), e)
        assert m.additivity_residual <= 1e-8


def test_pure_ensembles_have_no_redundancy():
    rng = np.random.default_rng(11)
    for _ in range(5):
        kets = [haar_unitary(3, rng)[:, 0] for _ in range(3)]
        states = [np.outer(k, k.conj()) for k in kets]
        e = Ensemble(probs=[1 / 3] * 3, states=states)
        m = info_measures(ki_decompose(e, seed=0), e)
        assert m.info_redundant == pytest.approx(0.0, abs=1e-8)


def test_cost_ordering():
    for seed in range(4):
        e, _ = planted_ensemble(PlantSpec(blocks=((2, 1), (1, 1)), num_states=3, seed=seed))
        m = info_measures(ki_decompose(e, seed=0), e)
        assert -1e-12 <= m.ebits_asymptotic <= m.ebits_consumed + 1e-12
        assert m.ebits_consumed <= m.ebits_prepared + 1e-12
        assert m.ebits_prepared <= np.log2(e.dim) + 1e-12
        assert m.info_passive == pytest.approx(m.info_classical + m.info_nonclassical)
        assert m.hybrid_qubit_rate == m.info_nonclassical
        assert m.hybrid_bit_rate == m.info_classical
