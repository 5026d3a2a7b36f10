"""Maximum-entropy updating of discrete distributions under moment and data constraints."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import (
    Infeasible,
    InvalidState,
    LengthMismatch,
    NonConvergence,
    SupportViolation,
    ZeroEvidence,
)

FACE_TOL = 1e-12


@dataclass(frozen=True)
class MomentConstraint:
    observable: np.ndarray
    target: float

    def __post_init__(self):
        object.__setattr__(self, "observable", np.asarray(self.observable, dtype=float))
        object.__setattr__(self, "target", float(self.target))


def check_distribution(p, tol=1e-10):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise InvalidState("distribution must be a non-empty vector")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InvalidState("distribution has negative or non-finite weights")
    if abs(p.sum() - 1.0) > tol:
        raise InvalidState(f"distribution sums to {p.sum():.12f}")
    return p


def check_joint(table, tol=1e-10):
    t = np.asarray(table, dtype=float)
    if t.ndim != 2:
        raise InvalidState("joint must be a 2-D table")
    check_distribution(t.ravel(), tol)
    return t


def tilt(prior, observables, alpha):
    """prior * exp(alpha . A) / Z and ln Z, computed stably."""
    prior = np.asarray(prior, dtype=float)
    a = np.atleast_2d(np.asarray(observables, dtype=float))
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    on = prior > 0
    expo = np.full(prior.shape, -np.inf)
    expo[on] = np.log(prior[on]) + alpha @ a[:, on]
    shift = expo[on].max()
    w = np.exp(expo - shift)
    z = w.sum()
    return w / z, float(np.log(z) + shift)


def _feasible_face(prior, a, t):
    """Outcomes that carry positive weight in some distribution meeting A w = t.

    Raises Infeasible if no distribution on supp(prior) meets the targets.
    """
    idx = np.flatnonzero(prior > 0)
    n = idx.size
    a_eq = np.vstack([a[:, idx], np.ones(n)])
    b_eq = np.concatenate([t, [1.0]])
    scale = np.maximum(1.0, np.abs(a_eq).max(axis=1))
    a_eq = a_eq / scale[:, None]
    b_eq = b_eq / scale

    def solve(c):
        return linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")

    res = solve(np.zeros(n))
    if res.status != 0:
        raise Infeasible("targets lie outside the attainable set on the prior support")
    positive = res.x > FACE_TOL
    unknown = ~positive
    excluded = np.zeros(n, bool)
    while np.any(unknown):
        i = int(np.flatnonzero(unknown)[0])
        c = np.zeros(n)
        c[i] = -1.0
        r = solve(c)
        if r.status != 0 or r.x[i] <= FACE_TOL:
            excluded[i] = True
            unknown[i] = False
            continue
        positive |= r.x > FACE_TOL
        unknown &= ~positive
    face = np.zeros(prior.shape, bool)
    face[idx[positive]] = True
    return face


def _newton(prior, a, t, tol, max_iter):
    k = a.shape[0]
    alpha = np.zeros(k)

    def state(al):
        p, log_z = tilt(prior, a, al)
        mean = a @ p
        return p, log_z, mean

    p, log_z, mean = state(alpha)
    g = log_z - alpha @ t
    resid = mean - t
    for it in range(max_iter):
        if np.max(np.abs(resid)) <= tol:
            return alpha, p, it
        centred = a - mean[:, None]
        hess = (centred * p) @ centred.T
        step = np.linalg.lstsq(hess, -resid, rcond=1e-13)[0]
        slope = resid @ step
        s = 1.0
        accepted = False
        for _ in range(60):
            trial = alpha + s * step
            pt, lzt, mt = state(trial)
            gt = lzt - trial @ t
            rt = mt - t
            if gt <= g + 1e-4 * s * slope or np.max(np.abs(rt)) < np.max(np.abs(resid)):
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        alpha, p, g, mean, resid = trial, pt, gt, mt, rt
    if np.max(np.abs(resid)) <= tol:
        return alpha, p, max_iter
    raise NonConvergence("dual Newton solve did not converge", residuals=resid, iterations=max_iter)


def _bisect_single(prior, obs, target, tol, max_iter=400):
    def mean(al):
        return obs @ tilt(prior, obs[None, :], [al])[0]

    lo, hi = -1.0, 1.0
    while mean(lo) > target:
        lo *= 2
        if lo < -1e6:
            raise NonConvergence("could not bracket the multiplier")
    while mean(hi) < target:
        hi *= 2
        if hi > 1e6:
            raise NonConvergence("could not bracket the multiplier")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mean(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(mid)):
            break
    al = 0.5 * (lo + hi)
    p = tilt(prior, obs[None, :], [al])[0]
    return np.array([al]), p


def maxent_update(prior, constraints, tol=1e-10, max_iter=200):
    """Select the distribution of maximum relative entropy meeting the moment constraints.

    Returns (posterior, multipliers) with posterior_i proportional to
    prior_i * exp(sum_k alpha_k A_k(i)). Targets on the boundary of the
    attainable set are handled by restricting to the face of outcomes that
    can still carry weight; for a single constraint the multiplier is then
    reported as +-inf.
    """
    prior = check_distribution(prior)
    constraints = list(constraints)
    if not constraints:
        return prior.copy(), np.zeros(0)
    a = np.vstack([c.observable for c in constraints])
    if a.shape[1] != prior.size:
        raise LengthMismatch(f"observable length {a.shape[1]} != prior length {prior.size}")
    t = np.array([c.target for c in constraints])
    face = _feasible_face(prior, a, t)
    support = prior > 0
    restricted = np.where(face, prior, 0.0)
    restricted = restricted / restricted.sum()
    try:
        alpha, post, _ = _newton(restricted, a, t, tol, max_iter)
    except NonConvergence:
        if len(constraints) != 1:
            raise
        alpha, post = _bisect_single(restricted, a[0], t[0], tol)
        if abs(a[0] @ post - t[0]) > tol:
            raise
    if len(constraints) == 1 and np.any(support & ~face):
        # boundary target: the multiplier runs off to infinity
        direction = np.sign(a[0][face].mean() - a[0][support].mean())
        alpha = np.array([np.inf * direction if direction != 0 else 0.0])
    return post, alpha


def mean_of_multiplier(prior, observable, alpha):
    """<A> under the tilted prior at multiplier alpha (single constraint)."""
    obs = np.asarray(observable, dtype=float)
    return float(obs @ tilt(prior, obs[None, :], [alpha])[0])


def _row_indicators(n_x, n_theta):
    ind = np.zeros((n_x, n_x * n_theta))
    for x in range(n_x):
        ind[x, x * n_theta:(x + 1) * n_theta] = 1.0
    return ind


def bayes_from_maxent(joint_prior, observed_x, tol=1e-13):
    """Posterior over theta after learning x = observed_x, obtained as a MaxEnt update."""
    joint = check_joint(joint_prior)
    n_x, n_t = joint.shape
    if joint[observed_x].sum() <= 0:
        raise ZeroEvidence(f"outcome {observed_x} has zero prior probability")
    delta = np.zeros(n_x)
    delta[observed_x] = 1.0
    return _data_update(joint, delta, tol)


def jeffreys_from_maxent(joint_prior, data_marginal, tol=1e-13):
    """Posterior over theta when the x-marginal is constrained to data_marginal."""
    joint = check_joint(joint_prior)
    rho_d = check_distribution(data_marginal)
    if rho_d.size != joint.shape[0]:
        raise LengthMismatch("data marginal length does not match the joint's x dimension")
    phi_x = joint.sum(axis=1)
    if np.any((rho_d > 0) & (phi_x <= 0)):
        raise SupportViolation("data marginal puts weight on outcomes with zero prior probability")
    return _data_update(joint, rho_d, tol)


def _data_update(joint, rho_d, tol):
    n_x, n_t = joint.shape
    ind = _row_indicators(n_x, n_t)
    cons = [MomentConstraint(ind[x], rho_d[x]) for x in range(n_x)]
    post, _ = maxent_update(joint.ravel(), cons, tol=tol)
    return post.reshape(n_x, n_t).sum(axis=0)


def bayes_direct(joint_prior, observed_x):
    joint = np.asarray(joint_prior, dtype=float)
    row = joint[observed_x]
    if row.sum() <= 0:
        raise ZeroEvidence(f"outcome {observed_x} has zero prior probability")
    return row / row.sum()


def jeffreys_direct(joint_prior, data_marginal):
    joint = np.asarray(joint_prior, dtype=float)
    rho_d = np.asarray(data_marginal, dtype=float)
    phi_x = joint.sum(axis=1)
    if np.any((rho_d > 0) & (phi_x <= 0)):
        raise SupportViolation("data marginal puts weight on outcomes with zero prior probability")
    on = phi_x > 0
    return (rho_d[on] / phi_x[on]) @ joint[on]
