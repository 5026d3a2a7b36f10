"""Pointer-coupled measurement inference, weak values and Stern-Gerlach spin inference (hbar = 1)."""

import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import LatticeGrid
from .errors import (
    DegenerateCorrespondence,
    DimensionMismatch,
    GridTooSmall,
    InsufficientSamples,
    InvalidState,
    OrthogonalPostselection,
    RegimeViolation,
    ZeroLikelihood,
    ZeroSignalMass,
)
from .linalg import hermitize

POINTER_SPAN = 8.0
REGIME_FACTOR = 5.0


@dataclass(frozen=True)
class SystemPrep:
    amplitudes: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        e = np.asarray(self.eigenvalues, dtype=float)
        if a.shape != e.shape or a.ndim != 1:
            raise DimensionMismatch("one amplitude per eigenvalue is required")
        if abs(np.sum(np.abs(a) ** 2) - 1) > 1e-10:
            raise InvalidState("system amplitudes are not normalized")
        if np.unique(e).size != e.size:
            raise InvalidState("eigenvalues must be distinct")
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "eigenvalues", e)

    @property
    def probabilities(self):
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class PostselectionSpec:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if abs(np.sum(np.abs(a) ** 2) - 1) > 1e-10:
            raise InvalidState("postselected amplitudes are not normalized")
        object.__setattr__(self, "amplitudes", a)


@dataclass(frozen=True)
class PointerModel:
    delta: float
    grid: LatticeGrid

    def __post_init__(self):
        if self.delta <= 0:
            raise InvalidState("pointer width must be positive")

    @classmethod
    def for_system(cls, sys, delta, points_per_delta=20, extra=0.0):
        """Grid covering every eigenvalue with 8 widths of margin (plus `extra`)."""
        lo = sys.eigenvalues.min() - POINTER_SPAN * delta - extra
        hi = sys.eigenvalues.max() + POINTER_SPAN * delta + extra
        dx = delta / points_per_delta
        n = max(8, int(np.ceil((hi - lo) / dx)) + 1)
        return cls(float(delta), LatticeGrid(n, dx, lo))

    def covers(self, values):
        x = self.grid.x
        return x[0] <= np.min(values) - POINTER_SPAN * self.delta + 1e-9 * self.delta and x[-1] >= np.max(
            values
        ) + POINTER_SPAN * self.delta - 1e-9 * self.delta


@dataclass(frozen=True)
class AmplificationLikelihood:
    """q(D|d): rows indexed by pointer grid point d, columns by macroscopic signal D."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != 2 or np.any(t < 0):
            raise InvalidState("amplification table must be a nonnegative matrix")
        if np.max(np.abs(t.sum(axis=1) - 1)) > 1e-10:
            raise InvalidState("each row of the amplification table must sum to 1")
        object.__setattr__(self, "table", t)

    @classmethod
    def identity(cls, n_d):
        return cls(np.eye(n_d))

    @classmethod
    def pixels(cls, grid, edges):
        """Deterministic binning of pointer positions into pixels bounded by `edges`."""
        idx = np.clip(np.searchsorted(edges, grid.x, side="right") - 1, 0, len(edges) - 2)
        t = np.zeros((grid.n_points, len(edges) - 1))
        t[np.arange(grid.n_points), idx] = 1.0
        return cls(t)

    @classmethod
    def uninformative(cls, n_d, n_signals):
        return cls(np.full((n_d, n_signals), 1.0 / n_signals))


@dataclass(frozen=True)
class JointAmplitude:
    """Psi_f(n, d) = alpha_n g(d - a_n) on the pointer grid, rows normalized to |alpha_n|^2."""

    table: np.ndarray
    sys: SystemPrep
    pointer: PointerModel

    @property
    def pointer_marginal(self):
        return np.sum(np.abs(self.table) ** 2, axis=0)


def pointer_wavefunction(d, center, delta):
    return (2 * np.pi * delta ** 2) ** -0.25 * np.exp(-((d - center) ** 2) / (4 * delta ** 2))


def entangle_pointer(sys, pointer):
    if not pointer.covers(sys.eigenvalues):
        raise GridTooSmall("pointer grid must extend 8 widths beyond the extreme eigenvalues")
    d = pointer.grid.x
    rows = []
    for alpha, a in zip(sys.amplitudes, sys.eigenvalues):
        g = pointer_wavefunction(d, a, pointer.delta)
        g = g / np.sqrt(np.sum(g ** 2) * pointer.grid.dx)
        rows.append(alpha * g)
    return JointAmplitude(np.array(rows) * np.sqrt(pointer.grid.dx), sys, pointer)


def posterior_given_detection(joint, d_obs):
    """P(a_n | D) proportional to |alpha_n|^2 exp(-(D - a_n)^2 / 2 Delta^2)."""
    sys, delta = joint.sys, joint.pointer.delta
    w = sys.probabilities * np.exp(-((d_obs - sys.eigenvalues) ** 2) / (2 * delta ** 2))
    z = w.sum()
    if not z > 0:
        raise ZeroLikelihood(f"detection at {d_obs} has zero likelihood under every eigenvalue")
    return w / z


def posterior_noisy_detector(joint, amp, signal):
    """P_J(a_n) = sum_d P(a_n|d) q(d|D), with q(d|D) from Bayes on the amplification table."""
    q = amp.table
    if q.shape[0] != joint.pointer.grid.n_points:
        raise DimensionMismatch("amplification rows must match the pointer grid")
    col = q[:, signal] * joint.pointer_marginal
    if not col.sum() > 0:
        raise ZeroSignalMass(f"signal {signal} has zero probability")
    q_d = col / col.sum()
    per_d = np.abs(joint.table) ** 2
    tot = per_d.sum(axis=0)
    safe = np.where(tot > 0, tot, 1.0)
    post_n_given_d = per_d / safe
    return post_n_given_d @ q_d


def weak_value(sys, observable, post):
    """<Psi'|A|Psi> / <Psi'|Psi>."""
    a = hermitize(observable)
    overlap = np.vdot(post.amplitudes, sys.amplitudes)
    if abs(overlap) <= 1e-12:
        raise OrthogonalPostselection("postselected state is orthogonal to the prepared state")
    return complex(np.vdot(post.amplitudes, a @ sys.amplitudes) / overlap)


@dataclass
class WeakReadout:
    weak_value: complex
    d_grid: np.ndarray
    position_pdf: np.ndarray
    position_mean: float
    q_grid: np.ndarray
    momentum_pdf: np.ndarray
    momentum_mean: float
    predicted_position: float
    predicted_momentum: float
    regime_ok: bool


def postselected_pointer(sys, post, pointer):
    """Pointer amplitude after postselection: sum_n conj(alpha'_n) alpha_n g(d - a_n)."""
    c = np.conj(post.amplitudes) * sys.amplitudes
    d = pointer.grid.x
    return sum(cn * pointer_wavefunction(d, a, pointer.delta) for cn, a in zip(c, sys.eigenvalues))


def _pdf_on_grid(values, dx):
    p = np.abs(values) ** 2
    return p / (p.sum() * dx)


def weak_value_pointer_distributions(sys, post, pointer, c=1.0, q_points=4001):
    """Exact postselected pointer distributions for position and momentum readout.

    The momentum readout variable q = p / c has amplitude
    sum_n conj(alpha'_n) alpha_n exp(-Delta^2 p^2) exp(i p a_n). First-order
    predictions are Re A_w for the position mean and -Im A_w / (2 c Delta^2)
    for the q mean; a RegimeViolation warning is issued when
    Delta < 5 max|a_n| |A_w|.
    """
    if c == 0:
        raise InvalidState("momentum readout constant must be nonzero")
    aw = weak_value(sys, np.diag(sys.eigenvalues), post)
    delta = pointer.delta
    regime_ok = delta >= REGIME_FACTOR * np.max(np.abs(sys.eigenvalues)) * abs(aw)
    if not regime_ok:
        warnings.warn(
            f"pointer width {delta} below the weak-regime bound "
            f"{REGIME_FACTOR * np.max(np.abs(sys.eigenvalues)) * abs(aw):.4g}; first-order predictions unreliable",
            RegimeViolation,
            stacklevel=2,
        )
    phi_d = postselected_pointer(sys, post, pointer)
    if not np.any(np.abs(phi_d) > 0):
        raise OrthogonalPostselection("postselected pointer amplitude vanishes")
    dx = pointer.grid.dx
    pos = _pdf_on_grid(phi_d, dx)
    d = pointer.grid.x
    pos_mean = float(np.sum(pos * d) * dx)

    coef = np.conj(post.amplitudes) * sys.amplitudes
    pred_q = -aw.imag / (2 * c * delta ** 2)
    width = 1.0 / (2 * abs(c) * delta)
    span = POINTER_SPAN * width + 2 * abs(pred_q) + np.max(np.abs(sys.eigenvalues)) / (abs(c) * delta ** 2)
    q = np.linspace(-span, span, q_points)
    p = c * q
    amp = np.exp(-(delta ** 2) * p ** 2) * (np.exp(1j * np.outer(p, sys.eigenvalues)) @ coef)
    dq = q[1] - q[0]
    mom = _pdf_on_grid(amp, dq)
    mom_mean = float(np.sum(mom * q) * dq)
    return WeakReadout(aw, d, pos, pos_mean, q, mom, mom_mean, aw.real, pred_q, bool(regime_ok))


def sample_from_pdf(grid_x, pdf, n, rng):
    """Inverse-CDF draws from a density tabulated at cell centres, uniform within each cell."""
    dx = grid_x[1] - grid_x[0]
    mass = pdf * dx
    cdf = np.cumsum(mass)
    cdf /= cdf[-1]
    u = rng.random(n)
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, len(cdf) - 1)
    prev = np.where(idx > 0, cdf[np.maximum(idx - 1, 0)], 0.0)
    cell = np.where(cdf[idx] > prev, (u - prev) / (cdf[idx] - prev), 0.5)
    return grid_x[idx] - 0.5 * dx + cell * dx


def estimate_weak_value_from_samples(samples, pointer, c=None):
    """(estimate, standard error) from pointer readouts.

    c=None treats the samples as position readouts and estimates Re A_w as
    their mean. Otherwise they are momentum readouts q and Im A_w is
    estimated as -2 c Delta^2 mean(q). The standard error is Delta/sqrt(N)
    in both cases.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise InsufficientSamples("at least two samples are required")
    stderr = pointer.delta / np.sqrt(n)
    if c is None:
        return float(x.mean()), float(stderr)
    return float(-2 * c * pointer.delta ** 2 * x.mean()), float(stderr)


def sample_joint(sys, pointer, n, rng):
    """Draw (eigen-index, pointer reading) pairs from the unselected entangled state."""
    idx = rng.choice(sys.eigenvalues.size, size=n, p=sys.probabilities / sys.probabilities.sum())
    d = sys.eigenvalues[idx] + pointer.delta * rng.standard_normal(n)
    return idx, d


def stern_gerlach_posterior(alpha_pm, lam, delta, t, m, z):
    """P(+-|z) for a spin whose z-readout drifts by +-lam Delta t/m and spreads by 1 + 4 Delta^4 t^2/m^2."""
    a = np.asarray(alpha_pm, dtype=complex)
    if a.shape != (2,):
        raise DimensionMismatch("alpha_pm must hold two amplitudes")
    if delta <= 0 or m <= 0:
        raise InvalidState("delta and m must be positive")
    s = 1 + 4 * delta ** 4 * t ** 2 / m ** 2
    shift = lam * delta * t / m
    expo = -2 * delta ** 2 / s * (z - np.array([shift, -shift])) ** 2
    with np.errstate(divide="ignore"):
        logw = np.log(np.abs(a) ** 2) + expo
    logw = logw - np.max(logw)
    w = np.exp(logw)
    return w / w.sum()


def unitary_device_remap(grid, amplitudes, c):
    """Map a density over a to the device coordinate x with a = c x.

    Returns (x_grid, rho_x) where rho_x(x) = |c| |psi(c x)|^2, so the
    total probability is unchanged.
    """
    if c == 0 or not np.isfinite(c):
        raise DegenerateCorrespondence("correspondence constant must be finite and nonzero")
    psi = np.asarray(amplitudes, dtype=complex)
    if psi.shape != (grid.n_points,):
        raise DimensionMismatch("amplitudes must match the grid")
    rho_a = np.abs(psi) ** 2
    xs = grid.x / c
    rho_x = abs(c) * rho_a
    if c < 0:
        xs, rho_x = xs[::-1], rho_x[::-1]
    return LatticeGrid(grid.n_points, grid.dx / abs(c), float(xs[0])), rho_x
