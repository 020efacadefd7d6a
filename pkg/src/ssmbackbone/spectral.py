"""Eigen-analysis of the fitted linear part.

Produces the conjugate-paired eigenstructure used by the manifold solvers,
modal parameters (natural frequency, damping ratio), relative spectral
quotients, and the resonance audit that guards the small denominators in the
homological equations.
"""

import cmath
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NumericalError

#: eigenvector-matrix condition limit beyond which A is treated as defective
EIGVEC_COND_LIMIT = 1e10

#: default relative tolerance for flagging a near-resonance in the audit
RESONANCE_TOL = 1e-2

#: |Im mu| below this (relative to |mu|) is treated as a real eigenvalue
REAL_EIG_RTOL = 1e-12

#: epsilon guard inside the integer part of the spectral quotient, so exact
#: integer decay-rate ratios are not floored down by the last-bit error
INT_EPS = 1e-9


def linear_part(poly_map):
    """Degree-1 coefficient block of a fitted map (its Jacobian at zero)."""
    return poly_map.linear_block()


@dataclass(eq=False)
class SpectralData:
    """Conjugate-paired eigendecomposition of the linearized sampling map.

    Eigenvalues are stored as ``mu[2p] = principal (Im > 0)``,
    ``mu[2p+1] = conj(mu[2p])`` with pairs sorted by descending modulus
    (slowest-decaying pair first). Columns of V pair up the same way and are
    normalized to unit Euclidean norm with the largest-magnitude component
    made real positive, which keeps regression output deterministic.
    """

    eigenvalues: np.ndarray
    V: np.ndarray
    V_inv: np.ndarray
    period_T: float
    pairing_quality: np.ndarray
    stable: np.ndarray
    condition_number: float

    @property
    def n_pairs(self):
        return len(self.eigenvalues) // 2

    def pair_eigenvalue(self, mode):
        """Principal eigenvalue of pair `mode` (0-based)."""
        return self.eigenvalues[2 * mode]

    def to_dict(self):
        return {
            "format": "spectral/1",
            "period_T": self.period_T,
            "eigenvalues_re": self.eigenvalues.real.tolist(),
            "eigenvalues_im": self.eigenvalues.imag.tolist(),
            "V_re": self.V.real.ravel().tolist(),
            "V_im": self.V.imag.ravel().tolist(),
            "V_inv_re": self.V_inv.real.ravel().tolist(),
            "V_inv_im": self.V_inv.imag.ravel().tolist(),
            "pairing_quality": self.pairing_quality.tolist(),
            "stable": self.stable.tolist(),
            "condition_number": self.condition_number,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != "spectral/1":
            raise ValueError(f"unsupported spectral format: {d.get('format')!r}")
        mu = np.array(d["eigenvalues_re"]) + 1j * np.array(d["eigenvalues_im"])
        n = len(mu)
        V = (np.array(d["V_re"]) + 1j * np.array(d["V_im"])).reshape(n, n)
        V_inv = (np.array(d["V_inv_re"]) + 1j * np.array(d["V_inv_im"])).reshape(n, n)
        return cls(mu, V, V_inv, d["period_T"], np.array(d["pairing_quality"]),
                   np.array(d["stable"], dtype=bool), d["condition_number"])

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(eq=False)
class ModalParameters:
    """Per-pair continuous-time modal parameters recovered from mu = exp(lambda T).

    The principal logarithm caps the recoverable damped frequency at the
    Nyquist limit pi/T; frequencies above it alias and cannot be told apart
    from their folded images.
    """

    omega: np.ndarray          # undamped natural frequency, rad/s
    zeta: np.ndarray           # damping ratio
    lam: np.ndarray            # continuous eigenvalue, principal branch
    period_T: float

    @property
    def nyquist_rad_s(self):
        return math.pi / self.period_T

    @property
    def omega_damped(self):
        return self.lam.imag


def eigendecompose(A, period_T, cond_limit=EIGVEC_COND_LIMIT):
    """Eigendecompose the linear part into exact conjugate pairs.

    Raises
    ------
    NumericalError
        If a (numerically) real eigenvalue appears, or the eigenvector matrix
        is ill-conditioned enough to indicate a defective matrix.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n % 2:
        raise NumericalError("state dimension must be even (conjugate pairs)")
    w, vecs = scipy.linalg.eig(A)

    real_mask = np.abs(w.imag) <= REAL_EIG_RTOL * (1.0 + np.abs(w))
    if np.any(real_mask):
        raise NumericalError(
            "overdamped or spurious real mode: eigenvalues "
            f"{w[real_mask]} have no conjugate partner"
        )
    principal = np.where(w.imag > 0)[0]
    if len(principal) != n // 2:
        raise NumericalError(
            f"expected {n // 2} conjugate pairs, found {len(principal)} "
            "eigenvalues in the upper half plane"
        )
    order = principal[np.argsort(-np.abs(w[principal]), kind="stable")]

    mu = np.empty(n, dtype=complex)
    V = np.empty((n, n), dtype=complex)
    quality = np.empty(n // 2)
    a_scale = np.linalg.norm(A, 2)
    for p, idx in enumerate(order):
        v = vecs[:, idx]
        v = v / np.linalg.norm(v)
        k = int(np.argmax(np.abs(v)))
        phase = v[k] / abs(v[k])
        v = v / phase
        mu[2 * p] = w[idx]
        mu[2 * p + 1] = np.conj(w[idx])
        V[:, 2 * p] = v
        V[:, 2 * p + 1] = np.conj(v)
        quality[p] = np.linalg.norm(A @ v - w[idx] * v) / max(a_scale, 1e-300)

    cond = np.linalg.cond(V)
    if cond > cond_limit:
        raise NumericalError(
            f"eigenvector matrix condition {cond:.3e} exceeds {cond_limit:.1e}; "
            "the linear part is defective or nearly so"
        )
    V_inv = scipy.linalg.inv(V)

    stable = np.abs(mu[::2]) < 1.0
    if not np.all(stable):
        bad = np.where(~stable)[0]
        warnings.warn(
            f"unstable modes detected: pair(s) {bad.tolist()} have |mu| >= 1; "
            "the fixed point is not asymptotically stable",
            stacklevel=2,
        )
    return SpectralData(mu, V, V_inv, float(period_T), quality, stable, float(cond))


def modal_parameters(spec):
    """Natural frequencies and damping ratios from the discrete spectrum.

    Uses the principal logarithm lambda = Log(mu)/T, then omega = |lambda| and
    zeta = -Re(lambda)/|lambda|. The inverse map exp(lambda T) reproduces mu
    to machine precision for damped frequencies below pi/T.
    """
    mus = spec.eigenvalues[::2]
    lam = np.empty(len(mus), dtype=complex)
    for p, mu in enumerate(mus):
        if mu.imag == 0:
            raise NumericalError(f"pair {p}: real eigenvalue has no modal form")
        if abs(mu) >= 1.0:
            raise NumericalError(
                f"pair {p}: |mu| = {abs(mu):.6f} >= 1; modal parameters are "
                "defined for decaying modes only"
            )
        lam[p] = cmath.log(mu) / spec.period_T
    omega = np.abs(lam)
    zeta = -lam.real / omega
    return ModalParameters(omega, zeta, lam, spec.period_T)


def spectral_quotient(spec, mode):
    """Relative spectral quotient of one mode pair.

    The integer part of the ratio between the fastest decay rate outside the
    pair and the pair's own decay rate:
    ``Int[min_{j not in pair} log|mu_j| / log|mu_mode|]``. Under proportional
    damping this equals ``Int[max_{j != mode} zeta_j omega_j / (zeta omega)]``,
    and it is independent of the sampling period. An epsilon guard inside the
    integer part keeps exact integer ratios from flooring down.
    """
    if spec.n_pairs < 2:
        raise NumericalError("spectral quotient needs at least two mode pairs")
    logs = np.log(np.abs(spec.eigenvalues[::2]))
    own = logs[mode]
    if own == 0.0:
        raise NumericalError(f"pair {mode} has |mu| = 1; decay rate is zero")
    others = np.delete(logs, mode)
    ratio = np.min(others) / own
    return int(math.floor(ratio + INT_EPS))


@dataclass(eq=False)
class AuditEntry:
    s1: int
    s2: int
    j: int
    gap: float
    threshold: float
    flagged: bool
    internal: bool


@dataclass(eq=False)
class AuditReport:
    """Result of a resonance audit for one mode pair (report only, no errors)."""

    mode: int
    tol: float
    max_order: int
    entries: list = field(default_factory=list)

    @property
    def external_flags(self):
        return [e for e in self.entries if e.flagged and not e.internal]

    @property
    def passed(self):
        return not self.external_flags

    def to_dict(self):
        return {
            "format": "resonance-audit/1",
            "mode": self.mode,
            "tol": self.tol,
            "max_order": self.max_order,
            "passed": self.passed,
            "entries": [
                {"s1": e.s1, "s2": e.s2, "j": e.j, "gap": e.gap,
                 "threshold": e.threshold, "flagged": e.flagged,
                 "internal": e.internal}
                for e in self.entries
            ],
        }

    def to_text(self):
        lines = [
            f"resonance audit: mode pair {self.mode}, tol {self.tol:g}, "
            f"orders 1..{self.max_order}",
            f"{'s1':>3} {'s2':>3} {'j':>3} {'gap':>13} {'threshold':>13} flag  kind",
        ]
        for e in self.entries:
            lines.append(
                f"{e.s1:>3} {e.s2:>3} {e.j:>3} {e.gap:>13.6e} "
                f"{e.threshold:>13.6e} {'*' if e.flagged else ' ':>4}  "
                f"{'internal' if e.internal else 'external'}"
            )
        lines.append("PASSED" if self.passed else "FAILED (external near-resonance)")
        return "\n".join(lines)


def resonance_audit(spec, mode, sigma, tol=RESONANCE_TOL):
    """Scan eigenvalue products for near-resonances with the rest of the spectrum.

    For all ``1 <= s1+s2 <= max(sigma, 3)`` and every eigenvalue outside the
    selected pair, the gap ``|mu^s1 conj(mu)^s2 - mu_j|`` is compared against
    ``tol * |mu_j|``; sub-threshold gaps are flagged. The always-present
    internal near-resonances (``mu^{m+1} conj(mu)^m ~ mu``) are reported as
    informational entries and never fail the audit.
    """
    if sigma < 1:
        raise ValueError("sigma must be >= 1")
    mu = spec.eigenvalues
    l, lb = 2 * mode, 2 * mode + 1
    mu_l, mu_lb = mu[l], mu[lb]
    max_order = max(int(sigma), 3)
    report = AuditReport(mode=mode, tol=float(tol), max_order=max_order)
    for total in range(1, max_order + 1):
        for s1 in range(total, -1, -1):
            s2 = total - s1
            prod = mu_l**s1 * mu_lb**s2
            for j in range(len(mu)):
                if j in (l, lb):
                    continue
                gap = abs(prod - mu[j])
                thr = tol * abs(mu[j])
                report.entries.append(AuditEntry(s1, s2, j, float(gap), float(thr),
                                                 gap < thr, internal=False))
    # internal near-resonant slots that force beta/gamma terms into R
    for m in range(1, (max_order - 1) // 2 + 1):
        gap = abs(mu_l ** (m + 1) * mu_lb**m - mu_l)
        report.entries.append(AuditEntry(m + 1, m, l, float(gap),
                                         float(tol * abs(mu_l)), False, internal=True))
        gap = abs(mu_l**m * mu_lb ** (m + 1) - mu_lb)
        report.entries.append(AuditEntry(m, m + 1, lb, float(gap),
                                         float(tol * abs(mu_lb)), False, internal=True))
    return report
