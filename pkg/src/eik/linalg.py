"""Dense Hermitian linear algebra: spectra, matrix functions, partial traces, relative entropies."""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidState,
    LengthMismatch,
    MatrixOverflow,
    NonHermitianInput,
    ZeroState,
)

HERMITIAN_TOL = 1e-12
SUPPORT_CUTOFF = 1e-12
EXP_LIMIT = 700.0


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    unitary: np.ndarray

    def reconstruct(self):
        u = self.unitary
        return (u * self.eigenvalues) @ u.conj().T


def as_matrix(a):
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidState("matrix has non-finite entries")
    return m


def hermitize(h, tol=HERMITIAN_TOL):
    """Return (H + H^dagger)/2, rejecting inputs that are not Hermitian within tol."""
    m = as_matrix(h)
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if dev > tol * scale:
        raise NonHermitianInput(f"matrix deviates from Hermitian by {dev:.3e}")
    return 0.5 * (m + m.conj().T)


def is_hermitian(h, tol=HERMITIAN_TOL):
    try:
        hermitize(h, tol)
    except NonHermitianInput:
        return False
    return True


def check_density(rho, tol=1e-10):
    """Validate and return a symmetrized density matrix."""
    r = hermitize(rho)
    w = np.linalg.eigvalsh(r)
    if w.size and w[0] < -tol:
        raise InvalidState(f"density matrix has negative eigenvalue {w[0]:.3e}")
    if abs(np.trace(r).real - 1.0) > tol:
        raise InvalidState(f"density matrix trace {np.trace(r).real:.12f} != 1")
    return r


def _phase_fix(v):
    # make the largest-modulus component of each column real positive
    idx = np.argmax(np.abs(v) > np.abs(v).max(axis=0) * (1 - 1e-9), axis=0)
    ph = v[idx, np.arange(v.shape[1])]
    ph = ph / np.abs(ph)
    return v / ph


def hermitian_eig(h, tol=HERMITIAN_TOL):
    """Ascending spectral decomposition with reproducible eigenvector phases.

    Degenerate eigenvalues (within 1e-10) are ordered by the lexicographic
    order of their phase-fixed eigenvectors.
    """
    m = hermitize(h, tol)
    w, v = np.linalg.eigh(m)
    v = _phase_fix(v)
    n = len(w)
    keys = []
    for i in range(n):
        col = v[:, i]
        keys.append((round(w[i] / 1e-10),) + tuple(np.round(np.concatenate([col.real, col.imag]), 10)))
    order = sorted(range(n), key=lambda i: keys[i])
    return SpectralDecomposition(w[order], v[:, order])


def matrix_exp(h):
    """exp(H) for Hermitian H via its spectral decomposition."""
    sd = hermitian_eig(h)
    if sd.eigenvalues.size and sd.eigenvalues.max() > EXP_LIMIT:
        raise MatrixOverflow(
            f"largest eigenvalue {sd.eigenvalues.max():.1f} exceeds {EXP_LIMIT}; rescale the exponent"
        )
    u = sd.unitary
    out = (u * np.exp(sd.eigenvalues)) @ u.conj().T
    return 0.5 * (out + out.conj().T)


def support_projector(rho, cutoff=SUPPORT_CUTOFF):
    sd = hermitian_eig(rho)
    keep = sd.eigenvalues > cutoff
    u = sd.unitary[:, keep]
    return u @ u.conj().T


def support_basis(rho, cutoff=SUPPORT_CUTOFF):
    """Orthonormal columns spanning the support, with the eigenvalues they carry."""
    sd = hermitian_eig(rho)
    keep = sd.eigenvalues > cutoff
    return sd.unitary[:, keep], sd.eigenvalues[keep]


def matrix_log_on_support(rho, cutoff=SUPPORT_CUTOFF):
    """Logarithm restricted to eigenvalues above cutoff.

    Returns (L, P) with L = sum ln(l_i)|v_i><v_i| and P the support projector.
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    u, w = support_basis(rho, cutoff)
    if w.size == 0:
        raise ZeroState("all eigenvalues are at or below the support cutoff")
    log_m = (u * np.log(w)) @ u.conj().T
    return 0.5 * (log_m + log_m.conj().T), u @ u.conj().T


def kron(a, b):
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(rho_ab, dims, over="B"):
    """Trace out factor 'A' or 'B' of a bipartite operator with dims (d_A, d_B)."""
    da, db = (int(d) for d in dims)
    m = as_matrix(rho_ab)
    if m.shape[0] != da * db:
        raise DimensionMismatch(f"matrix dim {m.shape[0]} != {da}*{db}")
    t = m.reshape(da, db, da, db)
    if over == "B":
        return np.einsum("ijkj->ik", t)
    if over == "A":
        return np.einsum("ijil->jl", t)
    raise ValueError("over must be 'A' or 'B'")


def _entropy_terms(w):
    w = np.where(w > SUPPORT_CUTOFF, w, 0.0)
    out = np.zeros_like(w)
    nz = w > 0
    out[nz] = w[nz] * np.log(w[nz])
    return out.sum()


def umegaki_entropy(rho, phi, cutoff=SUPPORT_CUTOFF, support_tol=1e-10):
    """Quantum relative entropy -Tr(rho log rho - rho log phi); always <= 0.

    Returns -inf when rho places more than support_tol weight outside supp(phi).
    """
    r = hermitize(rho)
    p = hermitize(phi)
    if r.shape != p.shape:
        raise DimensionMismatch(f"shapes {r.shape} and {p.shape} differ")
    log_phi, proj = matrix_log_on_support(p, cutoff)
    off = float(np.trace(r).real - np.trace(proj @ r).real)
    if off > support_tol:
        return -np.inf
    w = np.linalg.eigvalsh(r)
    return float(-(_entropy_terms(w) - np.trace(r @ log_phi).real))


def classical_relative_entropy(p, q):
    """-sum p log(p/q) with 0 log 0 = 0; -inf on support violation."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise LengthMismatch(f"lengths {p.shape} and {q.shape} differ")
    nz = p > 0
    if np.any(q[nz] <= 0):
        return -np.inf
    return float(-np.sum(p[nz] * np.log(p[nz] / q[nz])))


def matrix_to_json(m):
    m = np.asarray(m, dtype=complex)
    return {"dim": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj):
    """Parse {"dim", "re", "im"}; "im" may be omitted for real matrices."""
    n = int(obj["dim"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros((n, n))), dtype=float)
    if re.shape != (n, n) or im.shape != (n, n):
        raise DimensionMismatch(f"matrix entries do not match dim {n}")
    return as_matrix(re + 1j * im)


PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
