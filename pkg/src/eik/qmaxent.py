"""Quantum maximum-entropy updating of density matrices.

The posterior has the form rho = exp(sum_i alpha_i A_i + ln phi) / Z. All
solves happen inside the support of the prior: observables are compressed
to that subspace, solved there and embedded back with zeros, so a prior
can never be updated outside the eigenspace it spans.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, Infeasible, NonConvergence
from .linalg import (
    SUPPORT_CUTOFF,
    check_density,
    hermitize,
    matrix_log_on_support,
    support_basis,
)

BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class QuantumConstraintSet:
    observables: tuple
    targets: np.ndarray

    def __post_init__(self):
        obs = tuple(hermitize(a) for a in self.observables)
        tg = np.atleast_1d(np.asarray(self.targets, dtype=float))
        if len(obs) != tg.size:
            raise DimensionMismatch(f"{len(obs)} observables but {tg.size} targets")
        if len({a.shape for a in obs}) > 1:
            raise DimensionMismatch("observables have different dimensions")
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "targets", tg)

    def __len__(self):
        return len(self.observables)

    @classmethod
    def empty(cls):
        return cls((), np.zeros(0))

    def residuals(self, rho):
        return np.array([np.trace(a @ rho).real for a in self.observables]) - self.targets


@dataclass(frozen=True)
class DualSolution:
    multipliers: np.ndarray
    log_partition: float
    residuals: np.ndarray
    iterations: int
    history: list = field(default_factory=list, repr=False)


def _spectral_state(exponent):
    """Eigen-data of exp(C)/Z with the exponent shifted by its largest eigenvalue."""
    lam, v = np.linalg.eigh(exponent)
    top = lam[-1]
    e = np.exp(lam - top)
    z = e.sum()
    return lam, v, e / z, float(top + np.log(z))


def _kubo_weights(lam, p):
    # K_kl = (p_k - p_l) / (lam_k - lam_l), with K_kk = p_k
    lam_k, lam_l = lam[:, None], lam[None, :]
    p_lo = np.where(lam_k <= lam_l, p[:, None], p[None, :])
    p_hi = np.where(lam_k <= lam_l, p[None, :], p[:, None])
    delta = np.abs(lam_k - lam_l)
    small = delta < 1e-12
    near = delta < 1.0
    safe = np.where(small, 1.0, delta)
    close = p_lo * np.where(small, 1.0 + 0.5 * delta, np.expm1(np.where(near, safe, 0.0)) / safe)
    return np.where(near, close, (p_hi - p_lo) / safe)


class _CompressedProblem:
    """Dual of the MaxEnt problem expressed in the prior's support basis."""

    def __init__(self, prior, observables, cutoff):
        u, w = support_basis(prior, cutoff)
        self.u = u
        self.log_prior = np.diag(np.log(w)).astype(complex)
        self.obs = [u.conj().T @ a @ u for a in observables]
        self.obs = [0.5 * (a + a.conj().T) for a in self.obs]

    def exponent(self, alpha):
        c = self.log_prior.copy()
        for al, a in zip(alpha, self.obs):
            c = c + al * a
        return c

    def evaluate(self, alpha, with_hessian=False):
        lam, v, p, log_z = _spectral_state(self.exponent(alpha))
        rot = [v.conj().T @ a @ v for a in self.obs]
        mean = np.array([np.dot(p, np.diag(a).real) for a in rot])
        hess = None
        if with_hessian:
            k = _kubo_weights(lam, p)
            n = len(rot)
            hess = np.empty((n, n))
            for i in range(n):
                for j in range(i, n):
                    val = np.sum(k * (rot[i] * rot[j].T).real) - mean[i] * mean[j]
                    hess[i, j] = hess[j, i] = val
        rho = (v * p) @ v.conj().T
        return mean, log_z, hess, rho

    def embed(self, rho_small):
        r = self.u @ rho_small @ self.u.conj().T
        return 0.5 * (r + r.conj().T)


def _boundary_posterior(problem, index, side):
    """MaxEnt limit when a single target sits at an extreme eigenvalue."""
    a = problem.obs[index]
    w, v = np.linalg.eigh(a)
    ext = w[0] if side < 0 else w[-1]
    q = v[:, np.abs(w - ext) <= BOUNDARY_TOL * max(1.0, abs(ext))]
    c = q.conj().T @ problem.log_prior @ q
    lam, vv, p, _ = _spectral_state(0.5 * (c + c.conj().T))
    small = q @ ((vv * p) @ vv.conj().T) @ q.conj().T
    return problem.embed(small)


def _check_ranges(problem, targets):
    for i, (a, t) in enumerate(zip(problem.obs, targets)):
        w = np.linalg.eigvalsh(a)
        lo, hi = w[0], w[-1]
        scale = BOUNDARY_TOL * max(1.0, abs(lo), abs(hi))
        if hi - lo <= scale:
            if abs(t - lo) <= scale:
                continue
            raise Infeasible(
                f"constraint {i}: observable is constant {lo:.6g} on the prior support, target {t:.6g}"
            )
        if t < lo - scale or t > hi + scale:
            raise Infeasible(
                f"constraint {i}: target {t:.6g} outside attainable range [{lo:.6g}, {hi:.6g}] on the prior support"
            )
        if abs(t - lo) <= scale or abs(t - hi) <= scale:
            side = -1 if abs(t - lo) <= scale else 1
            raise Infeasible(
                f"constraint {i}: target {t:.6g} sits on the boundary of the attainable range; "
                "it requires an infinitely large Lagrange multiplier",
                diagnostic=_boundary_posterior(problem, i, side),
            )


MAX_STEP = 10.0


def _newton_step(hess, resid):
    """Newton direction with an eigenvalue floor and a step-length cap."""
    w, v = np.linalg.eigh(hess)
    floor = 1e-10 * max(w[-1], 1e-300)
    coef = v.T @ resid
    # exactly redundant directions carry no residual; leave them alone
    keep = np.abs(coef) > 1e-14 * max(1.0, np.max(np.abs(coef)))
    step = -v @ np.where(keep, coef / np.maximum(w, floor), 0.0)
    norm = np.linalg.norm(step)
    if norm > MAX_STEP:
        step *= MAX_STEP / norm
    return step


def _diverging(alpha, history, window=20):
    # multipliers running away while the residual stalls: the dual is unbounded
    return (
        len(history) > window
        and np.max(np.abs(alpha)) > 10
        and history[-1] > 0.99 * history[-1 - window]
    )


def _solve_dual(problem, targets, tol, max_iter):
    n = len(targets)
    alpha = np.zeros(n)
    mean, log_z, hess, rho = problem.evaluate(alpha, with_hessian=True)
    resid = mean - targets
    g = log_z - alpha @ targets
    history = [float(np.max(np.abs(resid)))]
    it = 0
    while it < max_iter:
        if np.max(np.abs(resid)) <= tol:
            break
        it += 1
        step = _newton_step(hess, resid)
        slope = resid @ step
        if slope >= 0:
            step = -resid
            slope = -resid @ resid
        s = 1.0
        accepted = False
        for _ in range(60):
            trial = alpha + s * step
            m_t, lz_t, h_t, r_t = problem.evaluate(trial, with_hessian=True)
            res_t = m_t - targets
            g_t = lz_t - trial @ targets
            if g_t <= g + 1e-4 * s * slope:
                accepted = True
                break
            # at round-off level g no longer resolves progress; fall back on the residual
            if abs(g_t - g) <= 1e-13 * max(1.0, abs(g)) and np.max(np.abs(res_t)) < np.max(np.abs(resid)):
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        alpha, mean, log_z, hess, rho, resid, g = trial, m_t, lz_t, h_t, r_t, res_t, g_t
        history.append(float(np.max(np.abs(resid))))
        if _diverging(alpha, history):
            break
    return alpha, log_z, resid, rho, it, history


def qmaxent_update(prior, constraints, tol=1e-8, max_iter=200, cutoff=SUPPORT_CUTOFF):
    """Quantum MaxEnt update of a prior density matrix.

    Returns (posterior, DualSolution). The sign convention is
    <A_i> = +d ln Z / d alpha_i, consistent with positive multipliers in
    the exponent.
    """
    phi = check_density(prior)
    if constraints is None or len(constraints) == 0:
        return phi.copy(), DualSolution(np.zeros(0), 0.0, np.zeros(0), 0)
    if constraints.observables[0].shape != phi.shape:
        raise DimensionMismatch("observables and prior differ in dimension")
    problem = _CompressedProblem(phi, constraints.observables, cutoff)
    _check_ranges(problem, constraints.targets)
    alpha, log_z, resid, rho, it, history = _solve_dual(problem, constraints.targets, tol, max_iter)
    if np.max(np.abs(resid)) > tol:
        if _diverging(alpha, history):
            raise Infeasible(
                "dual solve diverged: targets appear to lie outside the joint attainable set "
                "(an infinitely large Lagrange multiplier would be required)",
            )
        raise NonConvergence(
            f"dual solve stopped with max residual {np.max(np.abs(resid)):.3e}",
            residuals=resid,
            iterations=it,
        )
    post = problem.embed(rho)
    return post, DualSolution(alpha, log_z, resid, it, history)


def log_partition(prior, observables, alpha, cutoff=SUPPORT_CUTOFF):
    """ln Tr exp(sum alpha_i P A_i P + ln phi) on the prior support."""
    problem = _CompressedProblem(check_density(prior), [hermitize(a) for a in observables], cutoff)
    return problem.evaluate(np.atleast_1d(alpha))[1]


def expectations(prior, observables, alpha, cutoff=SUPPORT_CUTOFF):
    problem = _CompressedProblem(check_density(prior), [hermitize(a) for a in observables], cutoff)
    return problem.evaluate(np.atleast_1d(alpha))[0]


def dual_hessian(prior, observables, alpha, cutoff=SUPPORT_CUTOFF):
    """Exact Jacobian d<A_i>/d alpha_j (the Kubo-Mori covariance)."""
    problem = _CompressedProblem(check_density(prior), [hermitize(a) for a in observables], cutoff)
    return problem.evaluate(np.atleast_1d(alpha), with_hessian=True)[2]


def tilted_state(prior, observables, alpha, cutoff=SUPPORT_CUTOFF):
    """exp(sum alpha_i P A_i P + ln phi)/Z at fixed multipliers, embedded in full space."""
    problem = _CompressedProblem(check_density(prior), [hermitize(a) for a in observables], cutoff)
    return problem.embed(problem.evaluate(np.atleast_1d(alpha))[3])


def check_pdmt(prior, posterior, cutoff=SUPPORT_CUTOFF):
    """Return (ok, off_support_mass) with mass = max |(I-P) rho (I-P)|."""
    phi = hermitize(prior)
    rho = hermitize(posterior)
    if phi.shape != rho.shape:
        raise DimensionMismatch("prior and posterior differ in dimension")
    _, proj = matrix_log_on_support(phi, cutoff)
    q = np.eye(phi.shape[0]) - proj
    mass = float(np.max(np.abs(q @ rho @ q)))
    return mass <= cutoff, mass


def regularize_prior(prior, epsilon, cutoff=SUPPORT_CUTOFF):
    phi = check_density(prior)
    _, proj = matrix_log_on_support(phi, cutoff)
    reg = phi + epsilon * (np.eye(phi.shape[0]) - proj)
    return reg / np.trace(reg).real


def epsilon_prior_sweep(prior, constraints, epsilons, multipliers=None, tol=1e-8):
    """Posteriors computed from the regularized priors normalize(phi + eps (I - P)).

    With multipliers=None each regularized problem is solved afresh; otherwise
    the given multipliers are held fixed and only the prior changes.
    """
    eps = np.asarray(epsilons, dtype=float)
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("epsilons must be positive and strictly descending")
    out = []
    for e in eps:
        phi_e = regularize_prior(prior, e)
        cut = min(SUPPORT_CUTOFF, 1e-3 * e)
        if multipliers is None:
            out.append(qmaxent_update(phi_e, constraints, tol=tol, cutoff=cut)[0])
        else:
            out.append(tilted_state(phi_e, constraints.observables, multipliers, cutoff=cut))
    return out


def spin_2x2_analytic(a, b, c, target):
    """Closed-form 2x2 update of diag(a, b) under <c1 I + c.sigma> = target.

    The multiplier solves F(alpha) = target with
    F = c1 + tanh(dl)/(2 dl) (2 alpha |c|^2 + cz ln(a/b)), where
    dl = |alpha c + (0, 0, ln(a/b)/2)|. F is monotone, so bisection is used.
    Returns (alpha, posterior).
    """
    if a <= 0 or b <= 0 or abs(a + b - 1) > 1e-10:
        raise ValueError("a and b must be positive and sum to 1")
    c1, cx, cy, cz = (float(v) for v in c)
    cvec = np.array([cx, cy, cz])
    cnorm = float(np.linalg.norm(cvec))
    half_log = 0.5 * np.log(a / b)
    if cnorm == 0 or not (c1 - cnorm < target < c1 + cnorm):
        raise Infeasible(
            f"target {target} outside the open attainable range ({c1 - cnorm}, {c1 + cnorm})"
        )

    def bloch(alpha):
        n = alpha * cvec + np.array([0.0, 0.0, half_log])
        dl = float(np.linalg.norm(n))
        return n, dl

    def expect(alpha):
        n, dl = bloch(alpha)
        ratio = 0.5 if dl < 1e-300 else np.tanh(dl) / (2 * dl)
        return c1 + ratio * (2 * alpha * cnorm ** 2 + cz * 2 * half_log)

    lo, hi = -1.0, 1.0
    while expect(lo) > target:
        lo *= 2
    while expect(hi) < target:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if expect(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * max(1.0, abs(mid)):
            break
    alpha = 0.5 * (lo + hi)
    n, dl = bloch(alpha)
    sig = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]
    if dl < 1e-300:
        post = 0.5 * np.eye(2, dtype=complex)
    else:
        r = np.tanh(dl) * n / dl
        post = 0.5 * (np.eye(2) + sum(ri * s for ri, s in zip(r, sig)))
    return alpha, np.asarray(post, dtype=complex)
