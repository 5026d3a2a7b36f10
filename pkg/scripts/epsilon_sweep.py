"""Distance between regularized-prior posteriors and the support-restricted posterior.

Shows the monotone but slow (logarithmic) approach as the regularizer epsilon
shrinks, for a random rank-deficient prior and one feasible constraint.
"""

import argparse

import numpy as np

from eik import qmaxent as qm
from eik.linalg import support_basis


def random_problem(rng, n, rank):
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    phi = g @ g.conj().T
    phi /= np.trace(phi).real
    u, _ = support_basis(phi)
    w = rng.normal(size=(rank, rank)) + 1j * rng.normal(size=(rank, rank))
    w = w @ w.conj().T
    witness = u @ (w / np.trace(w).real) @ u.conj().T
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    a = 0.5 * (a + a.conj().T)
    return phi, qm.QuantumConstraintSet([a], [np.trace(a @ witness).real])


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--rank", type=int, default=2)
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)
    phi, cs = random_problem(rng, args.dim, args.rank)
    ref, _ = qm.qmaxent_update(phi, cs, tol=1e-12)
    eps = 10.0 ** -np.arange(2, 15, 2)
    print("epsilon,max_abs_deviation,deviation_times_log_inv_eps")
    for e, post in zip(eps, qm.epsilon_prior_sweep(phi, cs, eps, tol=1e-12)):
        d = np.max(np.abs(post - ref))
        print(f"{e:.0e},{d:.4e},{d * np.log(1 / e):.4f}")
