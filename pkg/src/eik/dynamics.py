"""1-D entropic dynamics on a periodic lattice.

Probability moves by a short-step Gaussian kernel whose drift comes from the
phase field; the resulting Fokker-Planck flow paired with its Hamiltonian
partner is the Schroedinger equation, which is integrated with a
norm-preserving Crank-Nicolson (implicit midpoint) scheme.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .classical import check_distribution
from .errors import (
    DimensionMismatch,
    DimensionTooLarge,
    InvalidState,
    NodeEncountered,
    SolverFailure,
    StabilityViolation,
)

NODE_THRESHOLD = 1e-10
MAX_DENSE_POINTS = 256


@dataclass(frozen=True)
class LatticeGrid:
    n_points: int
    dx: float
    origin: float = 0.0

    def __post_init__(self):
        if self.n_points < 8:
            raise InvalidState("grid needs at least 8 points")
        if self.dx <= 0:
            raise InvalidState("grid spacing must be positive")

    @property
    def x(self):
        return self.origin + self.dx * np.arange(self.n_points)

    @property
    def length(self):
        return self.n_points * self.dx

    @classmethod
    def centred(cls, n_points, dx):
        return cls(n_points, dx, -0.5 * n_points * dx)


@dataclass(frozen=True)
class EDParams:
    dt: float
    mass: float = 1.0
    hbar: float = 1.0
    potential: np.ndarray = None
    vector_potential: np.ndarray = None

    def __post_init__(self):
        if self.dt <= 0 or self.mass <= 0 or self.hbar <= 0:
            raise InvalidState("dt, mass and hbar must be positive")

    def fields(self, grid):
        n = grid.n_points
        v = np.zeros(n) if self.potential is None else np.asarray(self.potential, dtype=float)
        a = np.zeros(n) if self.vector_potential is None else np.asarray(self.vector_potential, dtype=float)
        if v.shape != (n,) or a.shape != (n,):
            raise DimensionMismatch("potential arrays must match the grid")
        return v, a

    def stability_bound(self, grid):
        return grid.dx ** 2 * self.mass / (2 * self.hbar)


@dataclass(frozen=True)
class WaveState:
    grid: LatticeGrid
    amplitudes: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.amplitudes, dtype=complex)
        if psi.shape != (self.grid.n_points,):
            raise DimensionMismatch("amplitudes must match the grid")
        norm = np.sum(np.abs(psi) ** 2) * self.grid.dx
        if abs(norm - 1) > 1e-8:
            raise InvalidState(f"wave function norm {norm:.10f} != 1")
        object.__setattr__(self, "amplitudes", psi)

    @property
    def density(self):
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def normalized(cls, grid, amplitudes):
        psi = np.asarray(amplitudes, dtype=complex)
        return cls(grid, psi / np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx))

    @classmethod
    def gaussian(cls, grid, x0, sigma, p0=0.0, hbar=1.0):
        """Packet with |psi|^2 of variance sigma^2, wrapped onto the periodic grid."""
        d = (grid.x - x0 + 0.5 * grid.length) % grid.length - 0.5 * grid.length
        return cls.normalized(grid, np.exp(-d ** 2 / (4 * sigma ** 2) + 1j * p0 * d / hbar))

    @classmethod
    def plane_wave(cls, grid, mode, hbar=1.0):
        k = 2 * np.pi * mode / grid.length
        return cls.normalized(grid, np.exp(1j * k * grid.x)), hbar * k


@dataclass(frozen=True)
class EPhaseState:
    """Density rho and phase Phi (action units) on the lattice."""

    grid: LatticeGrid
    rho: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if rho.shape != (self.grid.n_points,) or phi.shape != rho.shape:
            raise DimensionMismatch("fields must match the grid")
        if np.any(rho < 0):
            raise InvalidState("density has negative entries")
        if abs(rho.sum() * self.grid.dx - 1) > 1e-8:
            raise InvalidState("density does not integrate to 1")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_wave(cls, wave, hbar=1.0):
        return cls(wave.grid, wave.density, hbar * np.unwrap(np.angle(wave.amplitudes)))

    def to_wave(self, hbar=1.0):
        return WaveState(self.grid, np.sqrt(self.rho) * np.exp(1j * self.phi / hbar))


@dataclass(frozen=True)
class EnsembleState:
    weights: np.ndarray
    members: tuple

    def __post_init__(self):
        w = check_distribution(self.weights)
        members = tuple(self.members)
        if len(members) != w.size:
            raise DimensionMismatch("one weight per member is required")
        if len({m.grid for m in members}) != 1:
            raise DimensionMismatch("members must share a grid")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "members", members)

    @property
    def grid(self):
        return self.members[0].grid

    def density(self):
        return sum(p * m.density for p, m in zip(self.weights, self.members))


def periodic_gradient(f, dx):
    return (np.roll(f, -1) - np.roll(f, 1)) / (2 * dx)


def _phase_gradient(phi, dx, hbar):
    # central difference of an angle-valued field: differences taken mod 2 pi hbar
    d = (np.roll(phi, -1) - np.roll(phi, 1)) / hbar
    d = (d + np.pi) % (2 * np.pi) - np.pi
    return hbar * d / (2 * dx)


def node_mask(rho, threshold=NODE_THRESHOLD):
    return rho < threshold * rho.max()


def current_velocity(state, params):
    """v = (dPhi/dx - A)/m, masked where rho < 1e-10 max(rho)."""
    _, a = params.fields(state.grid)
    v = (_phase_gradient(state.phi, state.grid.dx, params.hbar) - a) / params.mass
    return np.ma.masked_array(v, mask=node_mask(state.rho))


def drift_velocity(state, params):
    """b = v + (hbar/2m) d ln(rho)/dx; masked like the current velocity."""
    v = current_velocity(state, params)
    mask = v.mask
    logr = np.log(np.where(mask, 1.0, state.rho))
    osm = params.hbar / (2 * params.mass) * periodic_gradient(logr, state.grid.dx)
    return np.ma.masked_array(v.data + osm, mask=mask)


def transition_kernel(params, grid, drift):
    """Row-stochastic matrix P[x, x'] of a Gaussian step with mean x + b dt and variance hbar dt/m."""
    if params.dt > params.stability_bound(grid) * (1 + 1e-12):
        raise StabilityViolation(
            f"dt={params.dt} exceeds the kernel bound dx^2 m/(2 hbar)={params.stability_bound(grid)}"
        )
    b = np.ma.filled(np.ma.asarray(drift, dtype=float), 0.0)
    if b.shape == ():
        b = np.full(grid.n_points, float(b))
    var = params.hbar * params.dt / params.mass
    x = grid.x
    mean = x + b * params.dt
    d = x[None, :] - mean[:, None]
    d = (d + 0.5 * grid.length) % grid.length - 0.5 * grid.length
    k = np.exp(-d ** 2 / (2 * var))
    return k / k.sum(axis=1, keepdims=True)


def fokker_planck_step(state, params, drift=None):
    """Advance rho one step with the transition kernel; Phi is left unchanged."""
    b = drift_velocity(state, params) if drift is None else drift
    kern = transition_kernel(params, state.grid, b)
    rho = state.rho @ kern
    return EPhaseState(state.grid, rho, state.phi.copy())


def lattice_hamiltonian(grid, params):
    """Periodic tridiagonal Hamiltonian with Peierls phases on the hopping terms."""
    v, a = params.fields(grid)
    n = grid.n_points
    t = params.hbar ** 2 / (2 * params.mass * grid.dx ** 2)
    a_half = 0.5 * (a + np.roll(a, -1))
    hop = -t * np.exp(-1j * a_half * grid.dx / params.hbar)
    idx = np.arange(n)
    nxt = (idx + 1) % n
    rows = np.concatenate([idx, idx, nxt])
    cols = np.concatenate([idx, nxt, idx])
    vals = np.concatenate([2 * t + v, hop, hop.conj()])
    return sp.csc_matrix((vals, (rows, cols)), shape=(n, n))


class SchrodingerPropagator:
    """Crank-Nicolson stepper: (1 + i H dt/2 hbar) psi' = (1 - i H dt/2 hbar) psi."""

    def __init__(self, grid, params, backward=False):
        self.grid = grid
        self.params = params
        h = lattice_hamiltonian(grid, params)
        self.hamiltonian = h
        c = 1j * params.dt / (2 * params.hbar)
        if backward:
            c = -c
        eye = sp.identity(grid.n_points, dtype=complex, format="csc")
        try:
            self._lu = splu((eye + c * h).tocsc())
        except RuntimeError as exc:
            raise SolverFailure(f"Crank-Nicolson factorization failed: {exc}") from exc
        self._rhs = (eye - c * h).tocsr()

    def step_array(self, psi):
        out = self._lu.solve(self._rhs @ psi)
        if not np.all(np.isfinite(out)):
            raise SolverFailure("non-finite amplitudes after the step")
        return out

    def step(self, wave, n_steps=1):
        psi = wave.amplitudes
        for _ in range(n_steps):
            psi = self.step_array(psi)
        return WaveState(wave.grid, psi)


def schrodinger_step(psi, params):
    return SchrodingerPropagator(psi.grid, params).step(psi)


def position_moments(grid, rho):
    """Mean and variance of a lattice density (no wrapping; keep packets away from the edges)."""
    w = rho * grid.dx
    w = w / w.sum()
    mean = float(w @ grid.x)
    return mean, float(w @ (grid.x - mean) ** 2)


def free_packet_variance(sigma0, t, mass=1.0, hbar=1.0):
    return sigma0 ** 2 * (1 + (hbar * t / (2 * mass * sigma0 ** 2)) ** 2)


def _continuity_rate(rho, v, dx):
    return -periodic_gradient(rho * v, dx)


@dataclass
class CoEvolution:
    times: np.ndarray
    rho_schrodinger: list = field(repr=False)
    rho_continuity: list = field(repr=False)
    deviations: np.ndarray = None

    @property
    def max_deviation(self):
        return float(np.max(self.deviations))


def co_evolve(psi0, params, n_steps, track_fraction=1e-3, keep_history=True):
    """Evolve |psi|^2 by the Schroedinger step and rho by the continuity equation side by side.

    The continuity side uses Heun's method with the current velocity taken
    from the phase of the Schroedinger state at the start and end of each step.
    """
    grid = psi0.grid
    prop = SchrodingerPropagator(grid, params)
    psi = psi0
    rho_b = psi0.density.copy()

    def vel(w):
        return current_velocity(EPhaseState(grid, w.density, params.hbar * np.angle(w.amplitudes)), params).filled(0.0)

    v_now = vel(psi)
    hist_a, hist_b, devs = [psi.density.copy()], [rho_b.copy()], [0.0]
    for _ in range(n_steps):
        psi_next = prop.step(psi)
        dens = psi_next.density
        # tracked support follows the continuity-side density
        tracked = rho_b >= track_fraction * rho_b.max()
        if np.any(dens[tracked] < NODE_THRESHOLD * dens.max()):
            raise NodeEncountered("density dropped to a node inside the tracked support")
        v_next = vel(psi_next)
        k1 = _continuity_rate(rho_b, v_now, grid.dx)
        k2 = _continuity_rate(rho_b + params.dt * k1, v_next, grid.dx)
        rho_b = rho_b + 0.5 * params.dt * (k1 + k2)
        psi, v_now = psi_next, v_next
        devs.append(float(np.sum(np.abs(dens - rho_b)) * grid.dx))
        if keep_history:
            hist_a.append(dens.copy())
            hist_b.append(rho_b.copy())
    times = params.dt * np.arange(n_steps + 1)
    return CoEvolution(times, hist_a, hist_b, np.array(devs))


def fp_se_consistency(psi0, params, n_steps, track_fraction=1e-3):
    """Max over steps of sum |rho_SE - rho_FP| dx."""
    return co_evolve(psi0, params, n_steps, track_fraction, keep_history=False).max_deviation


def ensemble_evolve(ens, params_per_k, n_steps):
    if len(params_per_k) != len(ens.members):
        raise DimensionMismatch("one parameter set per member is required")
    members = tuple(
        SchrodingerPropagator(m.grid, p).step(m, n_steps) for m, p in zip(ens.members, params_per_k)
    )
    return EnsembleState(ens.weights.copy(), members)


def ensemble_density_matrix(ens):
    """sum_k p_k |psi_k><psi_k| dx on the lattice basis (unit trace)."""
    n = ens.grid.n_points
    if n > MAX_DENSE_POINTS:
        raise DimensionTooLarge(f"{n} points exceeds the dense limit {MAX_DENSE_POINTS}")
    rho = np.zeros((n, n), dtype=complex)
    for p, m in zip(ens.weights, ens.members):
        rho += p * np.outer(m.amplitudes, m.amplitudes.conj())
    return rho * ens.grid.dx


def liouville_residual(ens, params):
    """max |(rho(t+dt) - rho(t-dt))/(2 dt) - [H, rho]/(i hbar)| with Crank-Nicolson steps both ways."""
    fwd = SchrodingerPropagator(ens.grid, params)
    bwd = SchrodingerPropagator(ens.grid, params, backward=True)
    plus = EnsembleState(ens.weights, tuple(fwd.step(m) for m in ens.members))
    minus = EnsembleState(ens.weights, tuple(bwd.step(m) for m in ens.members))
    rho = ensemble_density_matrix(ens)
    h = fwd.hamiltonian.toarray()
    deriv = (ensemble_density_matrix(plus) - ensemble_density_matrix(minus)) / (2 * params.dt)
    comm = (h @ rho - rho @ h) / (1j * params.hbar)
    return float(np.max(np.abs(deriv - comm)))
