"""Desk-scale ground truth: a two-mass cubic oscillator with exact answers.

The benchmark system is a two-degree-of-freedom oscillator with stiffness-
proportional damping and a cubic spring on the first mass:

    x1' = v1
    x2' = v2
    v1' = -c v1 - k0 x1 - kappa x1^3 - k0 (x1 - x2) - c (v1 - v2)
    v2' = -c v2 - k0 x2 - k0 (x2 - x1) - c (v2 - v1)

Both its complex normal form and the manifold/backbone results are known in
closed form, which makes it the oracle for the whole identification pipeline:
simulate, sample an observable, fit, and compare against the formulas here.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .polyfit import PolyMap, monomial_basis
from .signal_io import SignalSet
from .ssm import FLAVOR_FLOW, SsmModel

DEFAULT_T = 0.8
DEFAULT_SAMPLES = 8000


@dataclass(frozen=True)
class MechanicalParams:
    """Damping, linear and cubic stiffness of the benchmark oscillator."""

    c: float = 0.003
    k0: float = 1.0
    kappa: float = 0.5

    def __post_init__(self):
        if self.k0 <= 0 or self.c < 0 or self.kappa < 0:
            raise ValueError("need k0 > 0, c >= 0, kappa >= 0")
        if not self.c < 2 * math.sqrt(self.k0 / 3):
            raise ValueError(
                f"c = {self.c} leaves the second mode overdamped "
                f"(need c < 2*sqrt(k0/3) = {2 * math.sqrt(self.k0 / 3):.6f})"
            )

    def lambdas(self):
        """Continuous eigenvalues (lam1, lam3) of the two underdamped modes."""
        lam1 = -self.c / 2 + 1j * math.sqrt(self.k0 - self.c**2 / 4)
        lam3 = -3 * self.c / 2 + 1j * math.sqrt(3 * self.k0 - 9 * self.c**2 / 4)
        return lam1, lam3

    def eigenvalue_list(self):
        """Spectrum in conjugate-paired order (lam1, conj, lam3, conj)."""
        lam1, lam3 = self.lambdas()
        return np.array([lam1, np.conj(lam1), lam3, np.conj(lam3)])


@dataclass(eq=False)
class Trajectory:
    """Uniformly stepped state history of the benchmark oscillator."""

    times: np.ndarray
    states: np.ndarray  # (n, 4) rows (x1, x2, v1, v2)

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])


def shaw_pierre_rhs(state, params):
    """Right-hand side of the benchmark equations of motion."""
    x1, x2, v1, v2 = state
    c, k0, kappa = params.c, params.k0, params.kappa
    return np.array([
        v1,
        v2,
        -c * v1 - k0 * x1 - kappa * x1**3 - k0 * (x1 - x2) - c * (v1 - v2),
        -c * v2 - k0 * x2 - k0 * (x2 - x1) - c * (v2 - v1),
    ])


def integrate(params, x0, dt_internal, t_end):
    """Fixed-step classical 4th-order integration of the benchmark system.

    A fixed step keeps trajectories bit-stable across runs, which matters more
    here than adaptive efficiency. Raises on divergence (|state| > 1e6).
    """
    n_steps = int(round(t_end / dt_internal))
    c, k0, kappa = params.c, params.k0, params.kappa

    def rhs(x1, x2, v1, v2):
        return (v1, v2,
                -c * v1 - k0 * x1 - kappa * x1**3 - k0 * (x1 - x2) - c * (v1 - v2),
                -c * v2 - k0 * x2 - k0 * (x2 - x1) - c * (v2 - v1))

    states = np.empty((n_steps + 1, 4))
    x1, x2, v1, v2 = (float(v) for v in x0)
    states[0] = (x1, x2, v1, v2)
    h = float(dt_internal)
    for k in range(1, n_steps + 1):
        a1, a2, a3, a4 = rhs(x1, x2, v1, v2)
        b1, b2, b3, b4 = rhs(x1 + 0.5 * h * a1, x2 + 0.5 * h * a2,
                             v1 + 0.5 * h * a3, v2 + 0.5 * h * a4)
        c1, c2, c3, c4 = rhs(x1 + 0.5 * h * b1, x2 + 0.5 * h * b2,
                             v1 + 0.5 * h * b3, v2 + 0.5 * h * b4)
        d1, d2, d3, d4 = rhs(x1 + h * c1, x2 + h * c2, v1 + h * c3, v2 + h * c4)
        x1 += h * (a1 + 2 * b1 + 2 * c1 + d1) / 6
        x2 += h * (a2 + 2 * b2 + 2 * c2 + d2) / 6
        v1 += h * (a3 + 2 * b3 + 2 * c3 + d3) / 6
        v2 += h * (a4 + 2 * b4 + 2 * c4 + d4) / 6
        states[k] = (x1, x2, v1, v2)
        if abs(x1) > 1e6 or abs(v1) > 1e6:
            raise NumericalError(f"trajectory diverged at t = {k * h:.3f}")
    return Trajectory(np.arange(n_steps + 1) * h, states)


def modal_initial_conditions(params, mode):
    """Hammer-test initial conditions lying exactly in one modal subspace."""
    if mode == 1:
        return np.array([2.0, 2.0, 0.0, 0.0]) / math.sqrt(3.0)
    if mode == 2:
        return np.array([-2.0, 2.0, 0.0, 0.0]) / 3.0
    raise ValueError(f"mode must be 1 or 2, got {mode}")


_OBSERVABLES = {"x1": 0, "x2": 1, "v1": 2, "v2": 3}


def sample_observable(traj, observable, T):
    """Extract a scalar observable at sampling period T (a multiple of dt)."""
    if isinstance(observable, str):
        try:
            col = _OBSERVABLES[observable]
        except KeyError:
            raise DataError(f"unknown observable {observable!r}; "
                            f"choose from {sorted(_OBSERVABLES)}")
    else:
        col = int(observable)
    ratio = T / traj.dt
    stride = int(round(ratio))
    if stride < 1 or abs(ratio - stride) > 1e-9 * stride:
        raise DataError(
            f"sampling period {T} is not an integer multiple of dt = {traj.dt}"
        )
    return SignalSet([traj.states[::stride, col]], float(T),
                     labels=[observable if isinstance(observable, str) else f"c{col}"])


def generate_decay_signals(params, T=DEFAULT_T, n_samples=DEFAULT_SAMPLES,
                           observable="v1", substeps=20, modes=(1, 2)):
    """Simulate modal hammer tests and sample one observable.

    Returns a SignalSet with one trajectory per requested mode, each
    `n_samples` long at period T (internal step T/substeps).
    """
    dt = T / substeps
    t_end = n_samples * T
    trajectories, labels = [], []
    for mode in modes:
        traj = integrate(params, modal_initial_conditions(params, mode), dt, t_end)
        sig = sample_observable(traj, observable, T)
        trajectories.append(sig.trajectories[0][:n_samples])
        labels.append(f"{observable}_mode{mode}")
    return SignalSet(trajectories, float(T), labels)


def total_energy(states, params):
    """Mechanical energy along a state history (decays for c > 0)."""
    x1, x2, v1, v2 = states.T
    return (0.5 * (v1**2 + v2**2)
            + 0.5 * params.k0 * (x1**2 + x2**2)
            + 0.5 * params.k0 * (x1 - x2) ** 2
            + 0.25 * params.kappa * x1**4)


# -- closed-form oracles -----------------------------------------------------


def analytic_backbone(params, mode, rho):
    """Closed-form backbone (omega in rad/s, amplitude ~ 2 rho) of one mode."""
    rho = np.asarray(rho, dtype=float)
    c, k0, kappa = params.c, params.k0, params.kappa
    if mode == 1:
        disc = math.sqrt(4 * k0 - c**2)
        omega = 0.5 * (disc + 3 * kappa / disc * rho**2)
    elif mode == 2:
        disc = math.sqrt(4 * k0 - 3 * c**2)
        omega = 0.5 * (math.sqrt(3.0) * disc + math.sqrt(3.0) * kappa / disc * rho**2)
    else:
        raise ValueError(f"mode must be 1 or 2, got {mode}")
    return omega, 2.0 * rho


def modal_matrix(params):
    """Eigenvector matrix of the linearized system and its exact inverse.

    Columns follow the conjugate-paired eigenvalue order of
    `MechanicalParams.eigenvalue_list`; rows are (x1, x2, v1, v2).
    """
    lam1, lam3 = params.lambdas()
    V = np.array([
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [lam1, np.conj(lam1), lam3, np.conj(lam3)],
        [lam1, np.conj(lam1), -lam3, -np.conj(lam3)],
    ], dtype=complex)
    d1 = 2 * (lam1 - np.conj(lam1))
    d3 = 2 * (lam3 - np.conj(lam3))
    V_inv = np.array([
        [-np.conj(lam1) / d1, -np.conj(lam1) / d1, 1 / d1, 1 / d1],
        [lam1 / d1, lam1 / d1, -1 / d1, -1 / d1],
        [-np.conj(lam3) / d3, np.conj(lam3) / d3, 1 / d3, -1 / d3],
        [lam3 / d3, -lam3 / d3, -1 / d3, 1 / d3],
    ], dtype=complex)
    return V, V_inv


def complex_normal_form(params):
    """Exact diagonalized nonlinearity of the benchmark system.

    Returns (lambda list, G) where G(y) = V^{-1} f_nl(V y) is the cubic
    coupling field: the only physical nonlinearity is -kappa x1^3 with
    x1 = y1+y2+y3+y4, so every component of G is proportional to
    (y1+y2+y3+y4)^3.
    """
    lam1, lam3 = params.lambdas()
    lam = params.eigenvalue_list()
    basis = monomial_basis(4, 3)
    coeffs = np.zeros((4, len(basis)), dtype=complex)
    row_factors = (1j * params.kappa / 4) * np.array(
        [1 / lam1.imag, -1 / lam1.imag, 1 / lam3.imag, -1 / lam3.imag],
        dtype=complex)
    for col, m in enumerate(basis):
        if sum(m) != 3:
            continue
        multinom = math.factorial(3)
        for p in m:
            multinom //= math.factorial(p)
        coeffs[:, col] = row_factors * multinom
    return lam, PolyMap(4, 4, 3, tuple(basis), coeffs)


def analytic_ssm_coefficients(params, mode):
    """Hard-coded closed-form cubic manifold of one benchmark mode.

    Transcribes the published coefficient tables: the quadratic block
    vanishes, the cubic block is proportional to kappa with resonance-shifted
    denominators, and beta = i 3 kappa / (4 Im lambda). Serves as the
    entrywise oracle for the continuous cubic solver.
    """
    lam1, lam3 = params.lambdas()
    kappa = params.kappa
    lam = params.eigenvalue_list()
    slots = monomial_basis(2, 3)
    idx = {s: i for i, s in enumerate(slots)}
    w = np.zeros((4, len(slots)), dtype=complex)

    if mode == 1:
        la, im_a = lam1, lam1.imag      # in-pair eigenvalue
        lo, im_o = lam3, lam3.imag      # out-of-pair eigenvalue
        rows = (0, 1, 2, 3)             # (l, l+1, other, other-conj)
    elif mode == 2:
        la, im_a = lam3, lam3.imag
        lo, im_o = lam1, lam1.imag
        rows = (2, 3, 0, 1)
    else:
        raise ValueError(f"mode must be 1 or 2, got {mode}")
    r_l, r_lb, r_o, r_ob = rows
    ik = 1j * kappa

    w[r_l, idx[(1, 0)]] = 1.0
    w[r_lb, idx[(0, 1)]] = 1.0

    w[r_l, idx[(3, 0)]] = ik / (8 * la * im_a)
    w[r_lb, idx[(3, 0)]] = -ik / (4 * (3 * la - np.conj(la)) * im_a)
    w[r_o, idx[(3, 0)]] = ik / (4 * (3 * la - lo) * im_o)
    w[r_ob, idx[(3, 0)]] = -ik / (4 * (3 * la - np.conj(lo)) * im_o)

    w[r_l, idx[(0, 3)]] = ik / (4 * (3 * np.conj(la) - la) * im_a)
    w[r_lb, idx[(0, 3)]] = -ik / (8 * np.conj(la) * im_a)
    w[r_o, idx[(0, 3)]] = ik / (4 * (3 * np.conj(la) - lo) * im_o)
    w[r_ob, idx[(0, 3)]] = -ik / (4 * (3 * np.conj(la) - np.conj(lo)) * im_o)

    w[r_l, idx[(2, 1)]] = 0.0
    w[r_lb, idx[(2, 1)]] = -3 * ik / (8 * la * im_a)
    w[r_o, idx[(2, 1)]] = 3 * ik / (4 * (2 * la + np.conj(la) - lo) * im_o)
    w[r_ob, idx[(2, 1)]] = -3 * ik / (4 * (2 * la + np.conj(la) - np.conj(lo)) * im_o)

    w[r_l, idx[(1, 2)]] = 3 * ik / (8 * np.conj(la) * im_a)
    w[r_lb, idx[(1, 2)]] = 0.0
    w[r_o, idx[(1, 2)]] = 3 * ik / (4 * (la + 2 * np.conj(la) - lo) * im_o)
    w[r_ob, idx[(1, 2)]] = -3 * ik / (4 * (la + 2 * np.conj(la) - np.conj(lo)) * im_o)

    beta = 3j * kappa / (4 * im_a)
    return SsmModel(mode - 1, 3, FLAVOR_FLOW, lam, w, beta, slots=tuple(slots))
