"""Backbone curves: instantaneous frequency and amplitude along a manifold.

A manifold model plus the eigenvector matrix turn into a sampled curve
(rho, omega(rho), Amp(rho)). Frequency comes from the argument (discrete) or
imaginary part (continuous) of the reduced dynamics; the amplitude is the
L2 average over the phase angle of the reconstructed state, computed exactly
through Fourier orthogonality with a quadrature cross-check.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError
from .ssm import FLAVOR_MAP, evaluate_ssm

#: fraction of the linear term the top-order reduced term may reach at the
#: edge of the validity disc
VALIDITY_FRACTION = 0.25

DEFAULT_RHO_POINTS = 200


@dataclass(eq=False)
class BackboneCurve:
    """Sampled backbone curve of one mode."""

    mode: int
    rho: np.ndarray
    omega: np.ndarray          # rad/s
    amp: np.ndarray            # observable units
    order: int
    amp_convention: str        # "nominal" | "observed-via-P"
    period_T: float = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        self.amp = np.asarray(self.amp, dtype=float)
        if len(self.rho) > 1 and np.any(np.diff(self.rho) <= 0):
            raise ValueError("rho grid must be strictly increasing")

    @property
    def omega_hz(self):
        return self.omega / (2 * np.pi)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(f"# mode={self.mode} order={self.order} "
                     f"amp_convention={self.amp_convention}\n")
            if self.period_T is not None:
                fh.write(f"# period_T={self.period_T!r}\n")
            for key in sorted(self.meta):
                fh.write(f"# {key}={self.meta[key]!r}\n")
            fh.write("rho,omega_rad_s,omega_hz,amp\n")
            for r, w, a in zip(self.rho, self.omega, self.amp):
                fh.write(f"{r!r},{w!r},{w / (2 * np.pi)!r},{a!r}\n")


def validity_radius(model):
    """Radius where the top-order reduced term reaches 25% of the linear one.

    Infinite for a linear reduced dynamics (flat backbone); callers should
    cap the grid themselves in that case.
    """
    lin = abs(model.mu_ell)
    top = abs(model.gamma) if model.gamma is not None else abs(model.beta)
    power = 4 if model.gamma is not None else 2
    if top == 0.0:
        return np.inf
    return float((VALIDITY_FRACTION * lin / top) ** (1.0 / power))


def _reduced_value(model, rho):
    val = model.mu_ell + model.beta * rho**2
    if model.gamma is not None:
        val = val + model.gamma * rho**4
    return val


def instantaneous_frequency(model, rho, period_T=None):
    """Instantaneous oscillation frequency omega(rho) in rad/s.

    Discrete flavor: ``arg(mu + beta rho^2 [+ gamma rho^4]) / T`` with the
    argument tracked continuously from its rho=0 branch (the raw principal
    value may jump by 2*pi along the grid). Continuous flavor:
    ``Im(lambda + beta rho^2 [+ gamma rho^4])``.
    """
    rho = np.asarray(rho, dtype=float)
    scalar = rho.ndim == 0
    r = rho.reshape(-1)
    if model.flavor == FLAVOR_MAP:
        if period_T is None:
            raise ConfigError("period_T is required for discrete-map models")
        val = _reduced_value(model, r)
        if np.any(np.abs(val) == 0.0):
            raise NumericalError("reduced dynamics passes through 0: "
                                 "frequency undefined at this amplitude")
        base = np.angle(model.mu_ell)
        delta = np.angle(val) - base
        delta = (delta + np.pi) % (2 * np.pi) - np.pi
        omega = (base + delta) / period_T
    else:
        omega = _reduced_value(model, r).imag
    return float(omega[0]) if scalar else omega


def nominal_amplitude(model, V, rho, quadrature_nodes=None):
    """Phase-averaged L2 amplitude of the reconstructed state.

    With c = V w the squared integrand expands into harmonics
    ``exp(i theta (s1-s2-t1+t2))`` and only the zero harmonic survives the
    phase average, so the closed form groups slots by s1-s2:

        Amp(rho)^2 = sum_i sum_d | sum_{s1-s2=d} c_i^s rho^(s1+s2) |^2.

    Passing `quadrature_nodes` (>= 64) evaluates the integral by uniform
    trapezoid sampling instead; the integrand is a trigonometric polynomial of
    degree <= 2*order, so both paths agree to machine precision once the node
    count clears the Nyquist bound.
    """
    rho = np.asarray(rho, dtype=float)
    scalar = rho.ndim == 0
    r = rho.reshape(-1)
    if quadrature_nodes is not None:
        if quadrature_nodes < 64:
            raise ValueError("quadrature path needs at least 64 nodes")
        amp = np.array([_quadrature_amplitude(model, V, ri, quadrature_nodes)
                        for ri in r])
        return float(amp[0]) if scalar else amp

    c = np.asarray(V) @ model.w
    diffs = sorted({s1 - s2 for s1, s2 in model.slots})
    amp_sq = np.zeros(len(r))
    for d in diffs:
        cols = [i for i, (s1, s2) in enumerate(model.slots) if s1 - s2 == d]
        degs = np.array([sum(model.slots[i]) for i in cols])
        rho_pow = r[:, None] ** degs[None, :]
        series = rho_pow @ c[:, cols].T
        amp_sq += np.sum(np.abs(series) ** 2, axis=1)
    amp = np.sqrt(amp_sq)
    return float(amp[0]) if scalar else amp


def _quadrature_amplitude(model, V, rho, nodes):
    theta = np.linspace(0.0, 2 * np.pi, nodes, endpoint=False)
    z = rho * np.exp(1j * theta)
    xi = np.asarray(V) @ evaluate_ssm(model, z)
    return float(np.sqrt(np.mean(np.sum(np.abs(xi) ** 2, axis=0))))


def observed_amplitude(model, V, rho, transform="identity", period_T=None,
                       quadrature_nodes=256):
    """Amplitude of the first reconstructed coordinate under a scalar map P.

    `transform` selects P: "identity"; "divide-by-frequency" (velocity
    observables to displacement, dividing by omega(rho)); or a sequence of
    polynomial coefficients (low order first) applied to the sample values.
    Evaluated by phase quadrature of ``|P(xi_1(theta))|^2``.
    """
    rho = np.asarray(rho, dtype=float)
    scalar = rho.ndim == 0
    r = rho.reshape(-1)
    theta = np.linspace(0.0, 2 * np.pi, quadrature_nodes, endpoint=False)
    out = np.empty(len(r))
    V = np.asarray(V)
    for k, ri in enumerate(r):
        z = ri * np.exp(1j * theta)
        xi1 = (V @ evaluate_ssm(model, z))[0]
        if isinstance(transform, str):
            if transform == "identity":
                vals = xi1
            elif transform == "divide-by-frequency":
                omega = instantaneous_frequency(model, ri, period_T)
                vals = xi1 / omega
            else:
                raise ConfigError(f"unknown amplitude transform {transform!r}")
        else:
            coeffs = np.asarray(transform, dtype=float)
            vals = sum(ck * xi1**k2 for k2, ck in enumerate(coeffs))
        out[k] = np.sqrt(np.mean(np.abs(vals) ** 2))
    return float(out[0]) if scalar else out


def backbone_curve(model, spec, rho_grid, transform=None):
    """Assemble a backbone curve on a rho grid.

    With `transform=None` the amplitude is the nominal full-state L2 average;
    any other value selects the observed single-coordinate amplitude under
    that transform (see `observed_amplitude`).
    """
    rho = np.asarray(rho_grid, dtype=float)
    omega = instantaneous_frequency(model, rho, spec.period_T)
    if transform is None:
        amp = nominal_amplitude(model, spec.V, rho)
        convention = "nominal"
    else:
        amp = observed_amplitude(model, spec.V, rho, transform, spec.period_T)
        convention = "observed-via-P"
    meta = {
        "resonance_gap": model.min_denominator,
        "validity_radius": validity_radius(model),
        "transform": transform if isinstance(transform, str) or transform is None
        else list(np.asarray(transform, dtype=float)),
    }
    return BackboneCurve(model.mode, rho, np.atleast_1d(omega), np.atleast_1d(amp),
                         model.order, convention, spec.period_T, meta)


def default_rho_grid(model, rho_max=None, points=DEFAULT_RHO_POINTS):
    """Uniform grid on [0, rho_max], defaulting to the validity radius."""
    if rho_max is None:
        rho_max = validity_radius(model)
        if not np.isfinite(rho_max):
            rho_max = 1.0
    return np.linspace(0.0, float(rho_max), points)
