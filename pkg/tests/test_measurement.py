import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm, logm

from eik import measurement as ms
from eik.errors import (
    IncompleteKraus,
    Infeasible,
    SupportViolation,
    ZeroEvidence,
    ZeroPriorOutcome,
)
from eik.linalg import kron
from eik.qmaxent import QuantumConstraintSet
from helpers import I2, PX, PZ, rand_density, rand_kraus, rand_pure, rand_simplex, rand_unitary

seeds = st.integers(0, 2**32 - 1)
PLUS = np.array([1, 1]) / math.sqrt(2)
MINUS = np.array([1, -1]) / math.sqrt(2)
E1 = 0.75 * np.outer(PLUS, PLUS) + 0.25 * np.outer(MINUS, MINUS)
HADAMARD = np.column_stack([PLUS, MINUS])


def brute_force_bayes(a, phi):
    n = phi.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for p in range(n):
        for q in range(n):
            for r in range(n):
                for s in range(n):
                    out[p, q] += a[p, r] * phi[r, s] * np.conj(a[q, s])
    return out / np.trace(out).real


def random_instance(rng):
    n, k = rng.integers(2, 5), rng.integers(2, 5)
    kraus = ms.KrausModel(rand_kraus(rng, n, k))
    phi = rand_density(rng, n, rank=rng.integers(1, n + 1))
    return kraus, phi


class TestTypes:
    def test_incomplete_kraus(self):
        with pytest.raises(IncompleteKraus):
            ms.KrausModel([np.eye(2) * 0.5])

    def test_from_povm_principal_root(self):
        k = ms.KrausModel.from_povm([E1, np.eye(2) - E1])
        for a, e in zip(k.operators, [E1, np.eye(2) - E1]):
            assert np.allclose(a, a.conj().T)
            assert np.allclose(a @ a, e)

    def test_projector_basis_validation(self):
        with pytest.raises(Exception):
            ms.ProjectorBasis([np.diag([1.0, 0.0]), np.diag([1.0, 0.0])])


class TestLuders:
    def test_diagonal_unchanged(self):
        rho = np.diag([0.3, 0.7])
        assert np.allclose(ms.luders_decohere(rho, ms.ProjectorBasis.computational(2)), rho)

    def test_plus_state(self):
        out = ms.luders_decohere(np.outer(PLUS, PLUS), ms.ProjectorBasis.computational(2))
        assert np.allclose(out, I2 / 2)

    @given(seeds, st.integers(2, 5))
    def test_entrywise(self, seed, n):
        rng = np.random.default_rng(seed)
        rho = rand_density(rng, n)
        out = ms.luders_decohere(rho, ms.ProjectorBasis.computational(n))
        assert np.max(np.abs(np.diag(out) - np.diag(rho))) <= 1e-15
        assert np.max(np.abs(out - np.diag(np.diag(out)))) <= 1e-15
        assert abs(np.trace(out) - 1) <= 1e-12

    def test_rotated_basis_keeps_probabilities(self, rng):
        u = rand_unitary(rng, 3)
        rho = rand_density(rng, 3)
        out = ms.luders_decohere(rho, ms.ProjectorBasis.from_unitary(u))
        probs = np.einsum("ij,jk,ki->i", u.conj().T, rho, u).real
        assert np.allclose(np.einsum("ij,jk,ki->i", u.conj().T, out, u).real, probs, atol=1e-13)


class TestCollapse:
    def test_simple(self):
        assert np.allclose(ms.simple_collapse(np.diag([0.5, 0.5]), 0), np.diag([1, 0]))

    def test_screen_mixture(self, rng):
        p = rand_simplex(rng, 6)
        out = ms.simple_collapse(np.diag(p), 4)
        want = np.zeros((6, 6))
        want[4, 4] = 1
        assert np.allclose(out, want)

    def test_zero_prior_outcome(self):
        with pytest.raises(ZeroPriorOutcome):
            ms.simple_collapse(np.diag([1.0, 0.0]), 1)

    def test_partial_delta_is_simple(self):
        prior = np.diag([0.2, 0.3, 0.5])
        assert np.allclose(ms.partial_collapse(prior, [0, 1, 0]), ms.simple_collapse(prior, 1))

    def test_partial_no_information(self):
        prior = np.diag([0.2, 0.3, 0.5])
        assert np.allclose(ms.partial_collapse(prior, [0.2, 0.3, 0.5]), prior)

    def test_partial_support_violation(self):
        with pytest.raises(SupportViolation):
            ms.partial_collapse(np.diag([0.5, 0.5, 0.0]), [0.2, 0.3, 0.5])

    @given(seeds, st.integers(2, 5))
    def test_partial_maxent_cross_check(self, seed, n):
        rng = np.random.default_rng(seed)
        prior = np.diag(rand_simplex(rng, n))
        d = rand_simplex(rng, n)
        closed = ms.partial_collapse(prior, d, cross_check=False)
        via = ms.maxent_data_update(prior, ms.ProjectorBasis.computational(n).projectors, d)
        assert np.max(np.abs(closed - via)) <= 1e-8

    @given(seeds)
    def test_partial_affine(self, seed):
        rng = np.random.default_rng(seed)
        prior = np.diag(rand_simplex(rng, 4))
        d1, d2, lam = rand_simplex(rng, 4), rand_simplex(rng, 4), rng.random()
        mix = ms.partial_collapse(prior, lam * d1 + (1 - lam) * d2, cross_check=False)
        sep = lam * ms.partial_collapse(prior, d1, False) + (1 - lam) * ms.partial_collapse(prior, d2, False)
        assert np.max(np.abs(mix - sep)) <= 1e-12


class TestDecoheredJoint:
    def test_projective(self, rng):
        phi = rand_density(rng, 2)
        kraus = ms.KrausModel([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
        joint = ms.build_decohered_joint(phi, kraus)
        for x, b in joint.blocks:
            p = kraus.operators[x]
            assert np.allclose(b, p @ phi @ p)

    def test_biased_sigma_x_povm(self):
        joint = ms.build_decohered_joint(I2 / 2, ms.KrausModel.from_povm([E1, np.eye(2) - E1]))
        assert np.allclose(joint.outcome_probs(), [0.5, 0.5])

    def test_zero_blocks_dropped(self):
        kraus = ms.KrausModel([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
        joint = ms.build_decohered_joint(np.diag([1.0, 0.0]), kraus)
        assert [x for x, _ in joint.blocks] == [0]

    @given(seeds)
    def test_born_rule(self, seed):
        rng = np.random.default_rng(seed)
        kraus, phi = random_instance(rng)
        joint = ms.build_decohered_joint(phi, kraus)
        born = np.array([np.trace(e @ phi).real for e in kraus.effects()])
        born = np.where(born < ms.BLOCK_DROP, 0.0, born)
        assert np.max(np.abs(joint.outcome_probs() - born)) <= 1e-12
        assert abs(joint.outcome_probs().sum() - 1) <= 1e-12


class TestQuantumBayes:
    def test_projective_diagonal_is_classical(self, rng):
        p = rand_simplex(rng, 3)
        kraus = ms.KrausModel([np.diag([1.0, 1.0, 0.0]), np.diag([0.0, 0.0, 1.0])])
        post = ms.quantum_bayes(ms.build_decohered_joint(np.diag(p), kraus), 0)
        assert np.allclose(np.diag(post).real, [p[0], p[1], 0] / (p[0] + p[1]))

    def test_biased_sigma_x_povm_outcome(self):
        joint = ms.build_decohered_joint(I2 / 2, ms.KrausModel.from_povm([E1, np.eye(2) - E1]))
        post = ms.quantum_bayes(joint, 0)
        # diagonal in the |+>, |-> basis with weights 3/4, 1/4
        assert np.allclose(HADAMARD.T @ post @ HADAMARD, np.diag([0.75, 0.25]), atol=1e-12)

    def test_pure_stays_pure(self, rng):
        rho, v = rand_pure(rng, 3)
        kraus = ms.KrausModel(rand_kraus(rng, 3, 2))
        post = ms.quantum_bayes(ms.build_decohered_joint(rho, kraus), 1)
        w = kraus.operators[1] @ v
        assert np.allclose(post, np.outer(w, w.conj()) / np.vdot(w, w).real, atol=1e-12)
        assert np.allclose(post @ post, post, atol=1e-12)

    def test_zero_evidence(self):
        kraus = ms.KrausModel([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
        with pytest.raises(ZeroEvidence):
            ms.quantum_bayes(ms.build_decohered_joint(np.diag([1.0, 0.0]), kraus), 1)

    def test_maxent_route_random(self, rng):
        for _ in range(200):
            kraus, phi = random_instance(rng)
            joint = ms.build_decohered_joint(phi, kraus)
            x = joint.blocks[rng.integers(len(joint.blocks))][0]
            closed = ms.quantum_bayes(joint, x)
            assert np.max(np.abs(closed - ms.quantum_bayes_maxent(joint, x))) <= 1e-8
            assert np.max(np.abs(closed - brute_force_bayes(kraus.operators[x], phi))) <= 1e-8


class TestQuantumJeffreys:
    def test_certainty_limit(self, rng):
        kraus, phi = random_instance(rng)
        joint = ms.build_decohered_joint(phi, kraus)
        x = joint.blocks[0][0]
        d = np.zeros(kraus.n_outcomes)
        d[x] = 1
        assert np.allclose(ms.quantum_jeffreys(joint, d), ms.quantum_bayes(joint, x), atol=1e-12)

    def test_no_information(self, rng):
        kraus, phi = random_instance(rng)
        joint = ms.build_decohered_joint(phi, kraus)
        assert np.allclose(ms.quantum_jeffreys(joint, joint.outcome_probs()), joint.marginal(), atol=1e-12)

    def test_weighted_sum_oracle(self, rng):
        kraus = ms.KrausModel(rand_kraus(rng, 3, 3))
        phi = rand_density(rng, 3)
        joint = ms.build_decohered_joint(phi, kraus)
        d = rand_simplex(rng, 3)
        oracle = np.zeros((3, 3), dtype=complex)
        for x, a in enumerate(kraus.operators):
            block = a @ phi @ a.conj().T
            oracle += d[x] * block / np.trace(a.conj().T @ a @ phi).real
        assert np.max(np.abs(ms.quantum_jeffreys(joint, d) - oracle)) <= 1e-12

    def test_support_violation(self):
        kraus = ms.KrausModel([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
        joint = ms.build_decohered_joint(np.diag([1.0, 0.0]), kraus)
        with pytest.raises(SupportViolation):
            ms.quantum_jeffreys(joint, [0.5, 0.5])

    @given(seeds)
    def test_affine_in_data(self, seed):
        rng = np.random.default_rng(seed)
        kraus = ms.KrausModel(rand_kraus(rng, 3, 3))
        joint = ms.build_decohered_joint(rand_density(rng, 3), kraus)
        d1, d2, lam = rand_simplex(rng, 3), rand_simplex(rng, 3), rng.random()
        mix = ms.quantum_jeffreys(joint, lam * d1 + (1 - lam) * d2)
        sep = lam * ms.quantum_jeffreys(joint, d1) + (1 - lam) * ms.quantum_jeffreys(joint, d2)
        assert np.max(np.abs(mix - sep)) <= 1e-12

    @given(seeds)
    def test_maxent_route(self, seed):
        rng = np.random.default_rng(seed)
        kraus, phi = random_instance(rng)
        joint = ms.build_decohered_joint(phi, kraus)
        d = np.where(joint.outcome_probs() > 0, rand_simplex(rng, kraus.n_outcomes), 0.0)
        d /= d.sum()
        assert np.max(np.abs(ms.quantum_jeffreys(joint, d) - ms.quantum_jeffreys_maxent(joint, d))) <= 1e-8


class TestThermal:
    def projective_joint(self, rng, n=2):
        kraus = ms.KrausModel([np.diag(e) for e in np.eye(n)])
        return ms.build_decohered_joint(rand_density(rng, n), kraus)

    def test_unbiased_box(self, rng):
        kraus = ms.KrausModel(rand_kraus(rng, 3, 3))
        joint = ms.build_decohered_joint(rand_density(rng, 3), kraus)
        eps = np.array([0.0, 1.0, 2.5])
        beta, post = ms.thermal_jeffreys(joint, eps, joint.outcome_probs() @ eps)
        assert abs(beta) <= 1e-10
        assert np.allclose(post, ms.quantum_jeffreys(joint, joint.outcome_probs()), atol=1e-10)

    def test_cold_limit(self, rng):
        kraus = ms.KrausModel(rand_kraus(rng, 3, 3))
        joint = ms.build_decohered_joint(rand_density(rng, 3), kraus)
        beta, post = ms.thermal_jeffreys(joint, [0.0, 1.0, 2.0], 1e-6)
        assert beta < -10
        assert np.allclose(post, ms.quantum_bayes(joint, 0), atol=1e-5)

    @given(seeds, st.floats(0.01, 0.99))
    def test_logistic_oracle(self, seed, target):
        joint = self.projective_joint(np.random.default_rng(seed))
        phi0, phi1 = joint.outcome_probs()
        beta, post = ms.thermal_jeffreys(joint, [0.0, 1.0], target)
        assert beta == pytest.approx(math.log(target * phi0 / ((1 - target) * phi1)), abs=1e-8)
        assert np.diag(post).real == pytest.approx([1 - target, target], abs=1e-8)

    def test_infeasible(self, rng):
        with pytest.raises(Infeasible):
            ms.thermal_jeffreys(self.projective_joint(rng), [0.0, 1.0], 1.0)


class TestCanonicalRule:
    def test_beta_zero_is_jeffreys(self, rng):
        kraus, phi = random_instance(rng)
        joint = ms.build_decohered_joint(phi, kraus)
        d = joint.outcome_probs()
        f = rand_density(rng, kraus.dim_theta)
        assert np.max(np.abs(ms.canonical_modified_rule(joint, f, 0.0, d) - ms.quantum_jeffreys(joint, d))) <= 1e-10

    def test_commuting_tilt(self, rng):
        p = rand_simplex(rng, 3)
        kraus = ms.KrausModel([np.diag([1.0, 1.0, 0.0]), np.diag([0.0, 0.0, 1.0])])
        joint = ms.build_decohered_joint(np.diag(p), kraus)
        f = np.array([0.3, -1.2, 2.0])
        out = ms.canonical_modified_rule(joint, np.diag(f), 0.7, [1.0, 0.0])
        w = np.array([p[0], p[1], 0.0]) * np.exp(0.7 * f)
        assert np.allclose(np.diag(out).real, w / w.sum(), atol=1e-12)
        assert np.max(np.abs(out - np.diag(np.diag(out)))) <= 1e-12

    def test_block_expm_oracle(self, rng):
        kraus = ms.KrausModel(rand_kraus(rng, 3, 2))
        phi = rand_density(rng, 3)
        joint = ms.build_decohered_joint(phi, kraus)
        f = 0.5 * (lambda m: m + m.conj().T)(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
        d = rand_simplex(rng, 2)
        beta = -0.8
        oracle = np.zeros((3, 3), dtype=complex)
        for x, a in enumerate(kraus.operators):
            m = expm(beta * f + logm(a @ phi @ a.conj().T))
            oracle += d[x] * m / np.trace(m).real
        assert np.max(np.abs(ms.canonical_modified_rule(joint, f, beta, d) - oracle)) <= 1e-8

    def test_rank_deficient_block_stays_on_support(self):
        kraus = ms.KrausModel([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
        joint = ms.build_decohered_joint(np.diag([0.5, 0.5]), kraus)
        out = ms.canonical_modified_rule(joint, PX, 2.0, [1.0, 0.0])
        assert np.allclose(out, np.diag([1.0, 0.0]))


class TestOrderSymmetry:
    def test_product(self, rng):
        rho = kron(rand_density(rng, 2), rand_density(rng, 3))
        assert ms.order_symmetry_check(rho, (2, 3)) == 0.0

    def test_bell(self):
        v = np.array([1, 0, 0, 1]) / math.sqrt(2)
        rho = np.outer(v, v)
        assert ms.order_symmetry_check(rho, (2, 2)) == 0.0
        px = [np.kron(np.diag(e), I2) for e in np.eye(2)]
        dec = sum(p @ rho @ p for p in px)
        assert np.allclose(np.diag(dec), [0.5, 0, 0, 0.5])

    def test_random_entangled(self, rng):
        for _ in range(100):
            rho, _ = rand_pure(rng, 6)
            assert ms.order_symmetry_check(rho, (2, 3)) <= 1e-12


class TestSequential:
    def test_same_constraints(self):
        c = QuantumConstraintSet([PZ], [0.4])
        rep = ms.sequential_vs_simultaneous(I2 / 2, c, c)
        assert max(rep.distances.values()) <= 1e-8

    def test_commuting_orders_agree(self):
        za, zb = kron(PZ, I2), kron(I2, PZ)
        rep = ms.sequential_vs_simultaneous(np.eye(4) / 4, QuantumConstraintSet([za], [0.2]), QuantumConstraintSet([zb], [-0.6]))
        assert max(rep.distances.values()) <= 1e-8
        assert np.allclose(rep.rho_3, kron(np.diag([0.6, 0.4]), np.diag([0.2, 0.8])), atol=1e-9)

    def test_noncommuting(self):
        rep = ms.sequential_vs_simultaneous(I2 / 2, QuantumConstraintSet([PZ], [0.5]), QuantumConstraintSet([PX], [0.5]))
        assert min(rep.distances.values()) > 1e-3
        assert max(abs(rep.residuals["3"]["cs1"][0]), abs(rep.residuals["3"]["cs2"][0])) <= 1e-8
        assert abs(rep.residuals["12"]["cs2"][0]) <= 1e-8
        assert abs(rep.residuals["12"]["cs1"][0]) > 1e-3
