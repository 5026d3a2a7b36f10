"""Measurement updates of density matrices: decoherence, collapse, quantum Bayes and Jeffreys rules.

Each rule has a closed form; the MaxEnt route (update the decohered joint
prior under a data constraint, then marginalize) is provided alongside so
the two can be cross-checked.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .classical import check_distribution
from .errors import (
    DimensionMismatch,
    IncompleteKraus,
    Infeasible,
    InvalidState,
    SolverFailure,
    SupportViolation,
    ZeroEvidence,
    ZeroPriorOutcome,
)
from .linalg import as_matrix, check_density, hermitize, partial_trace, support_basis
from .qmaxent import QuantumConstraintSet, qmaxent_update

BLOCK_DROP = 1e-14
CROSS_CHECK_TOL = 1e-8


@dataclass(frozen=True)
class ProjectorBasis:
    projectors: tuple

    def __post_init__(self):
        ps = tuple(hermitize(p) for p in self.projectors)
        n = ps[0].shape[0]
        for i, p in enumerate(ps):
            for j, q in enumerate(ps):
                want = p if i == j else np.zeros_like(p)
                if np.max(np.abs(p @ q - want)) > 1e-10:
                    raise InvalidState("projectors are not mutually orthogonal idempotents")
        if np.max(np.abs(sum(ps) - np.eye(n))) > 1e-10:
            raise InvalidState("projectors do not sum to the identity")
        object.__setattr__(self, "projectors", ps)

    @property
    def dim(self):
        return self.projectors[0].shape[0]

    @classmethod
    def from_unitary(cls, u):
        u = as_matrix(u)
        return cls(tuple(np.outer(u[:, i], u[:, i].conj()) for i in range(u.shape[1])))

    @classmethod
    def computational(cls, n):
        return cls.from_unitary(np.eye(n))


@dataclass(frozen=True)
class KrausModel:
    operators: tuple

    def __post_init__(self):
        ops = tuple(as_matrix(a) for a in self.operators)
        if not ops:
            raise IncompleteKraus("no Kraus operators given")
        n = ops[0].shape[0]
        if any(a.shape != (n, n) for a in ops):
            raise DimensionMismatch("Kraus operators differ in shape")
        total = sum(a.conj().T @ a for a in ops)
        dev = float(np.max(np.abs(total - np.eye(n))))
        if dev > 1e-10:
            raise IncompleteKraus(f"sum of A^dagger A deviates from identity by {dev:.3e}")
        object.__setattr__(self, "operators", ops)

    @property
    def dim_theta(self):
        return self.operators[0].shape[0]

    @property
    def n_outcomes(self):
        return len(self.operators)

    def effects(self):
        return [a.conj().T @ a for a in self.operators]

    @classmethod
    def from_povm(cls, effects):
        """Kraus operators A_x = sqrt(E_x), the principal (Hermitian) square root."""
        ops = []
        for e in effects:
            w, v = np.linalg.eigh(hermitize(e))
            ops.append((v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T)
        return cls(tuple(ops))


@dataclass(frozen=True)
class DecoheredJointPrior:
    """Block-diagonal joint prior sum_x |x><x| (x) A_x phi A_x^dagger."""

    blocks: tuple  # of (outcome index, block matrix)
    dims: tuple  # (n_x, n_theta)

    def block(self, x):
        for k, b in self.blocks:
            if k == x:
                return b
        return None

    def outcome_probs(self):
        p = np.zeros(self.dims[0])
        for k, b in self.blocks:
            p[k] = np.trace(b).real
        return p

    def matrix(self):
        n_x, n_t = self.dims
        out = np.zeros((n_x * n_t, n_x * n_t), dtype=complex)
        for k, b in self.blocks:
            out[k * n_t:(k + 1) * n_t, k * n_t:(k + 1) * n_t] = b
        return out

    def marginal(self):
        return sum(b for _, b in self.blocks)


def luders_decohere(rho, basis):
    r = hermitize(rho)
    if r.shape[0] != basis.dim:
        raise DimensionMismatch("state and projector basis differ in dimension")
    return sum(p @ r @ p for p in basis.projectors)


def maxent_data_update(prior, projectors, data, tol=1e-10):
    """MaxEnt update of a prior commuting with the projectors under Tr(P_x rho) = data_x.

    Outcomes with zero data weight are removed by compressing the prior off
    their projectors (the limit of an infinitely negative multiplier); one
    remaining constraint is redundant with normalization and is dropped.
    """
    phi = check_density(prior)
    ps = [hermitize(p) for p in projectors]
    data = check_distribution(data)
    for p in ps:
        if np.max(np.abs(p @ phi - phi @ p)) > 1e-10:
            raise ValueError("prior must commute with the data projectors")
    probs = np.array([np.trace(p @ phi).real for p in ps])
    if np.any((data > 0) & (probs <= BLOCK_DROP)):
        raise SupportViolation("data puts weight on outcomes the prior excludes")
    keep = [i for i in range(len(ps)) if data[i] > 0]
    q = sum(ps[i] for i in keep)
    restricted = q @ phi @ q
    restricted = restricted / np.trace(restricted).real
    cons = QuantumConstraintSet([ps[i] for i in keep[:-1]], data[keep[:-1]])
    post, _ = qmaxent_update(restricted, cons, tol=tol)
    return post


def _require_diagonal(rho):
    r = check_density(rho)
    if np.max(np.abs(r - np.diag(np.diag(r)))) > 1e-12:
        raise InvalidState("prior must be diagonal in the detector basis")
    return r


def simple_collapse(prior_decohered, detected_x, cross_check=True):
    """Certain detection of x' maps a decohered prior to |x'><x'|."""
    r = _require_diagonal(prior_decohered)
    n = r.shape[0]
    if r[detected_x, detected_x].real <= 0:
        raise ZeroPriorOutcome(f"outcome {detected_x} has zero prior probability")
    out = np.zeros((n, n), dtype=complex)
    out[detected_x, detected_x] = 1.0
    if cross_check:
        delta = np.zeros(n)
        delta[detected_x] = 1.0
        _cross(out, maxent_data_update(r, ProjectorBasis.computational(n).projectors, delta))
    return out


def partial_collapse(prior_decohered, data_dist, cross_check=True):
    """Uncertain detection: sum_x rho_D(x) |x><x|."""
    r = _require_diagonal(prior_decohered)
    d = check_distribution(data_dist)
    if d.size != r.shape[0]:
        raise DimensionMismatch("data distribution length differs from the state dimension")
    if np.any((d > 0) & (np.diag(r).real <= 0)):
        raise SupportViolation("data puts weight on outcomes with zero prior probability")
    out = np.diag(d).astype(complex)
    if cross_check:
        _cross(out, maxent_data_update(r, ProjectorBasis.computational(r.shape[0]).projectors, d))
    return out


def _cross(closed, via_maxent):
    dev = float(np.max(np.abs(closed - via_maxent)))
    if dev > CROSS_CHECK_TOL:
        raise SolverFailure(f"closed form and MaxEnt route disagree by {dev:.3e}")


def build_decohered_joint(prior_theta, kraus):
    phi = check_density(prior_theta)
    if phi.shape[0] != kraus.dim_theta:
        raise DimensionMismatch("prior and Kraus operators differ in dimension")
    blocks = []
    for x, a in enumerate(kraus.operators):
        b = a @ phi @ a.conj().T
        b = 0.5 * (b + b.conj().T)
        if np.trace(b).real >= BLOCK_DROP:
            blocks.append((x, b))
    return DecoheredJointPrior(tuple(blocks), (kraus.n_outcomes, kraus.dim_theta))


def quantum_bayes(joint, detected_x):
    """A_x phi A_x^dagger / Tr(A_x phi A_x^dagger)."""
    b = joint.block(detected_x)
    if b is None:
        raise ZeroEvidence(f"outcome {detected_x} has zero prior probability")
    return b / np.trace(b).real


def _x_projectors(dims):
    n_x, n_t = dims
    out = []
    for x in range(n_x):
        e = np.zeros((n_x, n_x))
        e[x, x] = 1.0
        out.append(np.kron(e, np.eye(n_t)))
    return out


def quantum_bayes_maxent(joint, detected_x, tol=1e-10):
    """Quantum Bayes rule obtained by MaxEnt on the joint, then tracing out x."""
    if joint.block(detected_x) is None:
        raise ZeroEvidence(f"outcome {detected_x} has zero prior probability")
    delta = np.zeros(joint.dims[0])
    delta[detected_x] = 1.0
    post = maxent_data_update(joint.matrix(), _x_projectors(joint.dims), delta, tol=tol)
    return partial_trace(post, joint.dims, over="A")


def _check_data_support(joint, data):
    d = check_distribution(data)
    if d.size != joint.dims[0]:
        raise DimensionMismatch("data distribution length differs from the number of outcomes")
    phi_x = joint.outcome_probs()
    if np.any((d > 0) & (phi_x <= 0)):
        raise SupportViolation("data puts weight on outcomes with zero prior probability")
    return d, phi_x


def quantum_jeffreys(joint, data_dist):
    """sum_x rho_D(x) A_x phi A_x^dagger / phi(x)."""
    d, phi_x = _check_data_support(joint, data_dist)
    n_t = joint.dims[1]
    out = np.zeros((n_t, n_t), dtype=complex)
    for x, b in joint.blocks:
        if d[x] > 0:
            out += d[x] * b / phi_x[x]
    return out


def quantum_jeffreys_maxent(joint, data_dist, tol=1e-10):
    d, _ = _check_data_support(joint, data_dist)
    post = maxent_data_update(joint.matrix(), _x_projectors(joint.dims), d, tol=tol)
    return partial_trace(post, joint.dims, over="A")


def thermal_weights(phi_x, energies, beta):
    """e^{beta eps_n} phi_n / Z, computed in log space."""
    on = phi_x > 0
    logw = np.full(phi_x.shape, -np.inf)
    logw[on] = beta * energies[on] + np.log(phi_x[on])
    logw -= logw[on].max()
    w = np.exp(logw)
    return w / w.sum()


def thermal_jeffreys(joint, energies, target_energy):
    """Jeffreys update with the pointer outcomes weighted by a thermal tilt.

    beta solves sum_n eps_n e^{beta eps_n} phi_n / Z = target_energy, with
    Z = sum_n e^{beta eps_n} phi_n. Returns (beta, posterior).
    """
    eps = np.asarray(energies, dtype=float)
    phi_x = joint.outcome_probs()
    if eps.size != phi_x.size:
        raise DimensionMismatch("one energy per outcome is required")
    on = phi_x > 0
    lo, hi = eps[on].min(), eps[on].max()
    if not (lo < target_energy < hi):
        raise Infeasible(f"target energy {target_energy} outside the open range ({lo}, {hi})")

    def gap(beta):
        return thermal_weights(phi_x, eps, beta) @ eps - target_energy

    a, b = -1.0, 1.0
    while gap(a) > 0:
        a *= 2
    while gap(b) < 0:
        b *= 2
    beta = brentq(gap, a, b, xtol=1e-15, rtol=1e-15, maxiter=500)
    w = thermal_weights(phi_x, eps, beta)
    n_t = joint.dims[1]
    out = np.zeros((n_t, n_t), dtype=complex)
    for x, blk in joint.blocks:
        out += w[x] * blk / phi_x[x]
    return float(beta), out


def _tilted_block(block, f, beta):
    """exp(beta f + log block) computed inside the block's support."""
    u, w = support_basis(block)
    c = beta * (u.conj().T @ f @ u) + np.diag(np.log(w))
    c = 0.5 * (c + c.conj().T)
    lam, v = np.linalg.eigh(c)
    m = (v * np.exp(lam)) @ v.conj().T
    return u @ m @ u.conj().T


def canonical_modified_rule(joint, f_theta, beta, data_dist):
    """sum_x rho_D(x)/zeta(x) exp(beta f + log(A_x phi A_x^dagger)), zeta the block normalizer."""
    d, _ = _check_data_support(joint, data_dist)
    f = hermitize(f_theta)
    n_t = joint.dims[1]
    if f.shape != (n_t, n_t):
        raise DimensionMismatch("f_theta has the wrong dimension")
    out = np.zeros((n_t, n_t), dtype=complex)
    for x, b in joint.blocks:
        if d[x] > 0:
            m = _tilted_block(b, f, beta)
            out += d[x] * m / np.trace(m).real
    return 0.5 * (out + out.conj().T)


def order_symmetry_check(joint_state, dims):
    """Max difference of the product-basis diagonals after decohering in x versus in theta."""
    rho = check_density(joint_state)
    n_x, n_t = dims
    if rho.shape[0] != n_x * n_t:
        raise DimensionMismatch("joint dimension does not match dims")
    px = [np.kron(np.diag(e), np.eye(n_t)) for e in np.eye(n_x)]
    pt = [np.kron(np.eye(n_x), np.diag(e)) for e in np.eye(n_t)]
    dec_x = sum(p @ rho @ p for p in px)
    dec_t = sum(p @ rho @ p for p in pt)
    return float(np.max(np.abs(np.diag(dec_x) - np.diag(dec_t))))


@dataclass
class SequentialReport:
    rho_12: np.ndarray
    rho_21: np.ndarray
    rho_3: np.ndarray
    distances: dict
    residuals: dict


def _merge(cs1, cs2):
    return QuantumConstraintSet(cs1.observables + cs2.observables, np.concatenate([cs1.targets, cs2.targets]))


def sequential_vs_simultaneous(prior, cs1, cs2, tol=1e-10):
    """Compare updating on cs1 then cs2, cs2 then cs1, and on both at once."""
    rho_1, _ = qmaxent_update(prior, cs1, tol=tol)
    rho_12, _ = qmaxent_update(rho_1, cs2, tol=tol)
    rho_2, _ = qmaxent_update(prior, cs2, tol=tol)
    rho_21, _ = qmaxent_update(rho_2, cs1, tol=tol)
    rho_3, _ = qmaxent_update(prior, _merge(cs1, cs2), tol=tol)

    def dist(a, b):
        return float(np.max(np.abs(a - b)))

    distances = {"12-21": dist(rho_12, rho_21), "12-3": dist(rho_12, rho_3), "21-3": dist(rho_21, rho_3)}
    residuals = {}
    for name, r in (("12", rho_12), ("21", rho_21), ("3", rho_3)):
        residuals[name] = {"cs1": cs1.residuals(r), "cs2": cs2.residuals(r)}
    return SequentialReport(rho_12, rho_21, rho_3, distances, residuals)
