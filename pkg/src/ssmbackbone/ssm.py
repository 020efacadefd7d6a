"""Two-dimensional invariant-manifold construction for one mode pair.

Given the diagonalized nonlinearity G (complex polynomial map with zero linear
part) and the paired spectrum, these solvers produce the manifold
parametrization coefficients w_j^(s1,s2) together with the reduced-dynamics
coefficients (beta, and gamma at quintic order). Three routes are provided:

* closed-form cubic solvers for the discrete map and the continuous flow,
* a recursive order-by-order solver valid at any odd order,
* an independent brute-force solver that assembles the order-n invariance
  equations numerically (generic polynomial composition plus a linear solve)
  and never uses the closed-form expressions — the oracle for the other two.

Conventions: `mode` is the 0-based pair index, so the pair occupies
coordinates l = 2*mode and l+1; w_j^(1,0) = delta_{j,l}, w_j^(0,1) =
delta_{j,l+1}; the near-resonant slots w_l^(m+1,m) and w_{l+1}^(m,m+1) are set
to zero and their balance terms become the reduced coefficients.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ResonanceError
from .polyfit import monomial_basis

#: relative floor below which a homological denominator counts as resonant
DENOM_TOL = 1e-10

FLAVOR_MAP = "map"
FLAVOR_FLOW = "flow"


@dataclass(eq=False)
class SsmModel:
    """Parametrization and reduced dynamics of one two-dimensional manifold.

    `w` has shape (2*nu, n_slots) over the 2-variable graded-lex slots
    (1,0), (0,1), (2,0), (1,1), (0,2), (3,0), ... up to `order`. The reduced
    dynamics is z -> mu z + beta z^2 zbar (+ gamma z^3 zbar^2) for flavor
    "map", or zdot = lambda z + beta z^2 zbar (+ gamma z^3 zbar^2) for "flow".
    """

    mode: int
    order: int
    flavor: str
    eigenvalues: np.ndarray
    w: np.ndarray
    beta: complex
    gamma: complex = None
    denominators: dict = field(default_factory=dict)
    min_denominator: float = None
    slots: tuple = None

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=complex)
        self.w = np.asarray(self.w, dtype=complex)
        if self.slots is None:
            self.slots = tuple(monomial_basis(2, self.order))
        self._slot_index = {s: i for i, s in enumerate(self.slots)}

    @property
    def dim(self):
        return self.w.shape[0]

    @property
    def mu_ell(self):
        return self.eigenvalues[2 * self.mode]

    def coefficient(self, j, s1, s2):
        """w_j^(s1, s2); zero when the slot is outside the stored order."""
        i = self._slot_index.get((s1, s2))
        return 0j if i is None else complex(self.w[j, i])

    def reduced_map_coefficients(self):
        """Coefficients (linear, cubic, quintic) of the reduced dynamics."""
        out = [self.mu_ell, self.beta]
        if self.gamma is not None:
            out.append(self.gamma)
        return out

    def to_dict(self):
        return {
            "format": "ssm-model/1",
            "mode": self.mode,
            "order": self.order,
            "flavor": self.flavor,
            "eigenvalues_re": self.eigenvalues.real.tolist(),
            "eigenvalues_im": self.eigenvalues.imag.tolist(),
            "beta_re": float(np.real(self.beta)),
            "beta_im": float(np.imag(self.beta)),
            "gamma_re": None if self.gamma is None else float(np.real(self.gamma)),
            "gamma_im": None if self.gamma is None else float(np.imag(self.gamma)),
            "slots": [list(s) for s in self.slots],
            "w_re": self.w.real.ravel().tolist(),
            "w_im": self.w.imag.ravel().tolist(),
            "min_denominator": self.min_denominator,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != "ssm-model/1":
            raise ValueError(f"unsupported ssm-model format: {d.get('format')!r}")
        slots = tuple(tuple(s) for s in d["slots"])
        eig = np.array(d["eigenvalues_re"]) + 1j * np.array(d["eigenvalues_im"])
        w = (np.array(d["w_re"]) + 1j * np.array(d["w_im"])).reshape(len(eig), len(slots))
        gamma = None
        if d["gamma_re"] is not None:
            gamma = complex(d["gamma_re"], d["gamma_im"])
        return cls(d["mode"], d["order"], d["flavor"], eig, w,
                   complex(d["beta_re"], d["beta_im"]), gamma,
                   min_denominator=d.get("min_denominator"), slots=slots)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _check_nonlinear(G):
    if np.any(G.coeffs[:, : G.in_dim] != 0):
        raise ValueError("G must have a zero linear part (strip it first)")


def _at(dim, *placements):
    """Exponent tuple with the given (count, position) entries accumulated."""
    exps = [0] * dim
    for count, pos in placements:
        exps[pos] += count
    return tuple(exps)


def _cubic_tables(G, eig, mode, denom_of, denom_tol):
    """Shared second/third-order recursion behind both cubic closed forms.

    `denom_of(s1, s2, j)` supplies the homological denominator, which is the
    only place the discrete and continuous versions differ.
    """
    _check_nonlinear(G)
    dim = G.in_dim
    eig = np.asarray(eig, dtype=complex)
    l, lb = 2 * mode, 2 * mode + 1
    slots = monomial_basis(2, 3)
    idx = {s: i for i, s in enumerate(slots)}
    w = np.zeros((dim, len(slots)), dtype=complex)
    w[l, idx[(1, 0)]] = 1.0
    w[lb, idx[(0, 1)]] = 1.0

    denominators = {}
    bad = []

    def divide(s1, s2, j, numerator):
        d = denom_of(s1, s2, j)
        mag = abs(d)
        denominators[(s1, s2, j)] = mag
        if mag < denom_tol * (1.0 + abs(eig[j])):
            bad.append((s1, s2, j, mag))
            return 0j
        return numerator / d

    # second order: w_j^s = g_j^(s1@l, s2@lb) / denom
    for s1, s2 in [(2, 0), (1, 1), (0, 2)]:
        m = _at(dim, (s1, l), (s2, lb))
        for j in range(dim):
            w[j, idx[(s1, s2)]] = divide(s1, s2, j, G.coefficient(j, m))

    w20 = w[:, idx[(2, 0)]]
    w11 = w[:, idx[(1, 1)]]
    w02 = w[:, idx[(0, 2)]]

    def cross(j, anchor, table):
        """sum_q (1 + delta_{anchor q}) g_j^(1@anchor, 1@q) w_q."""
        acc = 0j
        for q in range(dim):
            gv = G.coefficient(j, _at(dim, (1, anchor), (1, q)))
            if gv != 0:
                acc += (2.0 if q == anchor else 1.0) * gv * table[q]
        return acc

    beta = 0j
    for j in range(dim):
        num30 = cross(j, l, w20) + G.coefficient(j, _at(dim, (3, l)))
        w[j, idx[(3, 0)]] = divide(3, 0, j, num30)
        num03 = cross(j, lb, w02) + G.coefficient(j, _at(dim, (3, lb)))
        w[j, idx[(0, 3)]] = divide(0, 3, j, num03)
        num21 = (cross(j, l, w11) + cross(j, lb, w20)
                 + G.coefficient(j, _at(dim, (2, l), (1, lb))))
        if j == l:
            beta = num21          # resonant slot: balance goes into R
        else:
            w[j, idx[(2, 1)]] = divide(2, 1, j, num21)
        num12 = (cross(j, l, w02) + cross(j, lb, w11)
                 + G.coefficient(j, _at(dim, (2, lb), (1, l))))
        if j != lb:
            w[j, idx[(1, 2)]] = divide(1, 2, j, num12)

    if bad:
        raise ResonanceError(
            "near-resonant denominator at (s1, s2, j) = "
            + ", ".join(f"({s1},{s2},{j}) |denom|={m:.3e}" for s1, s2, j, m in bad),
            entries=bad,
        )
    return w, beta, denominators


def ssm_cubic_discrete(G, mu, mode, denom_tol=DENOM_TOL):
    """Cubic manifold of the diagonalized sampling map y -> Lambda y + G(y).

    Implements the closed-form coefficient solution with denominators
    ``mu_l^s1 conj(mu_l)^s2 - mu_j``; the balance of the resonant slot
    (2,1) at j=l becomes the cubic reduced coefficient beta.
    """
    mu = np.asarray(mu, dtype=complex)
    l, lb = 2 * mode, 2 * mode + 1
    if not abs(mu[l]) < 1.0:
        warnings.warn(f"|mu_{l}| = {abs(mu[l]):.6f} >= 1: mode is not decaying",
                      stacklevel=2)
    denom = lambda s1, s2, j: mu[l] ** s1 * mu[lb] ** s2 - mu[j]
    w, beta, denoms = _cubic_tables(G, mu, mode, denom, denom_tol)
    return SsmModel(mode, 3, FLAVOR_MAP, mu, w, beta,
                    denominators=denoms, min_denominator=min(denoms.values()))


def ssm_cubic_continuous(G, lam, mode, denom_tol=DENOM_TOL):
    """Cubic manifold of the diagonalized flow ydot = Lambda y + G(y).

    Same coefficient structure as the discrete solver with denominators
    ``s1 lambda_l + s2 conj(lambda_l) - lambda_j``.
    """
    lam = np.asarray(lam, dtype=complex)
    l, lb = 2 * mode, 2 * mode + 1
    denom = lambda s1, s2, j: s1 * lam[l] + s2 * lam[lb] - lam[j]
    w, beta, denoms = _cubic_tables(G, lam, mode, denom, denom_tol)
    return SsmModel(mode, 3, FLAVOR_FLOW, lam, w, beta,
                    denominators=denoms, min_denominator=min(denoms.values()))


# -- truncated two-variable polynomial algebra ------------------------------


class _Poly2Algebra:
    """Dense algebra of polynomials in (z, zbar) truncated at a total order.

    Polynomials are ndarrays whose last axis runs over the graded-lex slots
    including the constant; leading axes broadcast, which lets the brute-force
    solver evaluate a whole batch of candidate coefficient sets at once.
    """

    def __init__(self, order):
        self.order = order
        self.slots = [(0, 0)] + monomial_basis(2, order)
        self.n = len(self.slots)
        self.index = {s: i for i, s in enumerate(self.slots)}
        src_a, src_b, dst = [], [], []
        for ia, (a1, a2) in enumerate(self.slots):
            for ib, (b1, b2) in enumerate(self.slots):
                if a1 + a2 + b1 + b2 <= order:
                    src_a.append(ia)
                    src_b.append(ib)
                    dst.append(self.index[(a1 + b1, a2 + b2)])
        self._src_a = np.array(src_a)
        self._src_b = np.array(src_b)
        scatter = np.zeros((len(dst), self.n))
        scatter[np.arange(len(dst)), dst] = 1.0
        self._scatter = scatter

    def zero(self, *lead):
        return np.zeros(lead + (self.n,), dtype=complex)

    def one(self, *lead):
        p = self.zero(*lead)
        p[..., 0] = 1.0
        return p

    def mul(self, a, b):
        prod = a[..., self._src_a] * b[..., self._src_b]
        return prod @ self._scatter

    def powers(self, a, max_power):
        """[a^0, a^1, ..., a^max_power] with broadcasting-compatible shapes."""
        lead = a.shape[:-1]
        out = [self.one(*lead)]
        for _ in range(max_power):
            out.append(self.mul(out[-1], a))
        return out

    def order_slots(self, total):
        return [self.index[s] for s in self.slots if s[0] + s[1] == total]

    def dz(self, a):
        out = np.zeros_like(a)
        for (s1, s2), i in self.index.items():
            if s1 > 0:
                out[..., self.index[(s1 - 1, s2)]] += s1 * a[..., i]
        return out

    def dzbar(self, a):
        out = np.zeros_like(a)
        for (s1, s2), i in self.index.items():
            if s2 > 0:
                out[..., self.index[(s1, s2 - 1)]] += s2 * a[..., i]
        return out


def _compose_g_w(G, W, alg):
    """[G o W] truncated: W has shape (dim, ..., n_slots2)."""
    dim = G.in_dim
    lead = W.shape[1:-1]
    out = np.zeros((dim,) + lead + (alg.n,), dtype=complex)
    max_pow = [0] * dim
    for m in G.basis:
        if sum(m) <= alg.order:
            for i, p in enumerate(m):
                max_pow[i] = max(max_pow[i], p)
    pw = [alg.powers(W[i], max_pow[i]) if max_pow[i] else None for i in range(dim)]
    for col, m in enumerate(G.basis):
        if sum(m) > alg.order:
            continue
        coeffs = G.coeffs[:, col]
        if not np.any(coeffs):
            continue
        term = None
        for i, p in enumerate(m):
            if p:
                term = pw[i][p] if term is None else alg.mul(term, pw[i][p])
        out += coeffs.reshape((dim,) + (1,) * (len(lead) + 1)) * term
    return out


def _compose_w_r(W, R, alg):
    """[W o R] truncated: plugs (R1, R2) into the slots of W."""
    max_p = max(max(s) for s in alg.slots)
    r1p = alg.powers(R[0], max_p)
    r2p = alg.powers(R[1], max_p)
    out = np.zeros_like(W)
    for (s1, s2), i in alg.index.items():
        if s1 + s2 == 0:
            continue
        term = alg.mul(r1p[s1], r2p[s2])
        out += W[..., i, None] * term[None, ...]
    return out


def _dw_dot_r(W, R, alg):
    """[DW . R] truncated: dW/dz * R1 + dW/dzbar * R2."""
    return alg.mul(alg.dz(W), R[0][None, ...]) + alg.mul(alg.dzbar(W), R[1][None, ...])


def _invariance_coefficients(G, W, R, eig, alg, flavor):
    """Coefficient table of Lambda W + G o W - (W o R | DW . R)."""
    lam_w = eig.reshape((len(eig),) + (1,) * (W.ndim - 1)) * W
    gw = _compose_g_w(G, W, alg)
    if flavor == FLAVOR_MAP:
        rhs = _compose_w_r(W, R, alg)
    else:
        rhs = _dw_dot_r(W, R, alg)
    return lam_w + gw - rhs


def _base_tables(G, eig, mode, alg):
    dim = G.in_dim
    l, lb = 2 * mode, 2 * mode + 1
    W = alg.zero(dim)
    W[l, alg.index[(1, 0)]] = 1.0
    W[lb, alg.index[(0, 1)]] = 1.0
    R = alg.zero(2)
    R[0, alg.index[(1, 0)]] = eig[l]
    R[1, alg.index[(0, 1)]] = eig[lb]
    return W, R


def _validate_order(G, order):
    if order < 3 or order % 2 == 0:
        raise ValueError(f"order must be odd and >= 3, got {order}")
    if order > G.degree:
        warnings.warn(
            f"requested order {order} exceeds the degree {G.degree} of G; "
            "coefficients beyond that degree carry no information from G",
            stacklevel=3,
        )


def ssm_recursive(G, eig, mode, order, flavor=FLAVOR_MAP, denom_tol=DENOM_TOL):
    """Order-by-order solution of the invariance equation up to `order`.

    At each order the known terms are produced by generic truncated
    composition, after which every slot is a scalar division by its
    homological denominator. The near-resonant slots (m+1, m) at j=l and
    (m, m+1) at j=l+1 are zeroed, their balance terms feeding the reduced
    coefficients (beta at cubic, gamma at quintic order). Matches the cubic
    closed form exactly at order 3.
    """
    _check_nonlinear(G)
    _validate_order(G, order)
    eig = np.asarray(eig, dtype=complex)
    dim = G.in_dim
    l, lb = 2 * mode, 2 * mode + 1
    alg = _Poly2Algebra(order)
    W, R = _base_tables(G, eig, mode, alg)

    denominators = {}
    reduced = {}
    for n in range(2, order + 1):
        rhs = _compose_g_w(G, W, alg) - (
            _compose_w_r(W, R, alg) if flavor == FLAVOR_MAP else _dw_dot_r(W, R, alg)
        )
        bad = []
        for i in alg.order_slots(n):
            s1, s2 = alg.slots[i]
            resonant_j = l if (s1, s2) == (s2 + 1, s2) else (
                lb if (s2, s1) == (s1 + 1, s1) else None)
            for j in range(dim):
                if j == resonant_j:
                    reduced[(j, s1, s2)] = rhs[j, i]
                    continue
                if flavor == FLAVOR_MAP:
                    d = eig[l] ** s1 * eig[lb] ** s2 - eig[j]
                else:
                    d = s1 * eig[l] + s2 * eig[lb] - eig[j]
                denominators[(s1, s2, j)] = abs(d)
                if abs(d) < denom_tol * (1.0 + abs(eig[j])):
                    bad.append((s1, s2, j, abs(d)))
                    continue
                W[j, i] = rhs[j, i] / d
        if bad:
            raise ResonanceError(
                "near-resonant denominator at (s1, s2, j) = "
                + ", ".join(f"({a},{b},{c}) |denom|={m:.3e}" for a, b, c, m in bad),
                entries=bad,
            )
        # make the new reduced coefficients available to the next order
        for (j, s1, s2), val in reduced.items():
            if s1 + s2 == n:
                R[0 if j == l else 1, alg.index[(s1, s2)]] = val

    beta = complex(reduced.get((l, 2, 1), 0j))
    gamma = complex(reduced[(l, 3, 2)]) if (l, 3, 2) in reduced else None
    w = W[:, 1:]  # drop the constant slot
    return SsmModel(mode, order, flavor, eig, w, beta, gamma,
                    denominators=denominators,
                    min_denominator=min(denominators.values()),
                    slots=tuple(alg.slots[1:]))


def brute_force_homological(G, eig, mode, order, flavor=FLAVOR_MAP,
                            singular_tol=1e-12):
    """Independent invariance solver used as the oracle for the closed forms.

    For each order n the full set of order-n invariance equations is
    assembled numerically: the residual ``Lambda W + G o W - W o R`` (or the
    flow variant) is affine in the order-n unknowns, so its matrix is read
    off by evaluating a batch of unit coefficient perturbations through the
    generic composition machinery, then solved as one linear system over all
    unknown (w, beta, gamma) coefficients of that order. No closed-form
    expression enters; an (exactly) resonant spectrum shows up as a singular
    assembled system.
    """
    _check_nonlinear(G)
    _validate_order(G, order)
    eig = np.asarray(eig, dtype=complex)
    dim = G.in_dim
    l, lb = 2 * mode, 2 * mode + 1
    alg = _Poly2Algebra(order)
    W, R = _base_tables(G, eig, mode, alg)

    beta = 0j
    gamma = None
    for n in range(2, order + 1):
        slot_ids = alg.order_slots(n)
        unknowns = []
        for i in slot_ids:
            s1, s2 = alg.slots[i]
            for j in range(dim):
                if (j == l and (s1, s2) == (s2 + 1, s2)) or (
                        j == lb and (s2, s1) == (s1 + 1, s1)):
                    continue  # pinned to zero by the resonant-slot convention
                unknowns.append(("w", j, i))
        if n % 2 == 1:
            m = (n - 1) // 2
            unknowns.append(("r1", 0, alg.index[(m + 1, m)]))
            unknowns.append(("r2", 1, alg.index[(m, m + 1)]))

        nu_ = len(unknowns)
        Wb = np.repeat(W[:, None, :], nu_ + 1, axis=1)
        Rb = np.repeat(R[:, None, :], nu_ + 1, axis=1)
        for b, (kind, j, i) in enumerate(unknowns, start=1):
            if kind == "w":
                Wb[j, b, i] = 1.0
            else:
                Rb[j, b, i] = 1.0

        resid = _invariance_coefficients(G, Wb, Rb, eig, alg, flavor)
        rows = resid[:, :, slot_ids].transpose(0, 2, 1).reshape(
            dim * len(slot_ids), nu_ + 1)
        base = rows[:, 0]
        A = rows[:, 1:] - base[:, None]
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] <= singular_tol * sv[0]:
            raise NumericalError(
                f"singular assembled system at order {n} "
                f"(smin/smax = {sv[-1] / sv[0]:.3e}): resonant spectrum"
            )
        sol, *_ = np.linalg.lstsq(A, -base, rcond=None)
        for val, (kind, j, i) in zip(sol, unknowns):
            if kind == "w":
                W[j, i] = val
            else:
                R[j, i] = val
        if n % 2 == 1 and n >= 3:
            m = (n - 1) // 2
            val = complex(R[0, alg.index[(m + 1, m)]])
            if m == 1:
                beta = val
            elif m == 2:
                gamma = val

    return SsmModel(mode, order, flavor, eig, W[:, 1:], beta, gamma,
                    slots=tuple(alg.slots[1:]))


# -- evaluation and diagnostics ---------------------------------------------


def evaluate_ssm(model, z, verify_conjugate=False):
    """Evaluate the manifold immersion W at complex z (scalar or array).

    Returns y with y_j = sum_s w_j^(s1,s2) z^s1 conj(z)^s2; shape (2*nu,) for
    scalar input or (2*nu, len(z)) for array input. With `verify_conjugate`
    the conjugate pairing of the output rows is asserted (valid whenever the
    coefficient table is conjugate-symmetric).
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    zf = z.reshape(-1)
    max_p = max(max(s) for s in model.slots)
    zp = [np.ones_like(zf)]
    zbp = [np.ones_like(zf)]
    for _ in range(max_p):
        zp.append(zp[-1] * zf)
        zbp.append(zbp[-1] * np.conj(zf))
    psi = np.array([zp[s1] * zbp[s2] for s1, s2 in model.slots])
    y = model.w @ psi
    if verify_conjugate:
        swapped = np.conj(y).reshape(model.dim // 2, 2, -1)[:, ::-1, :].reshape(y.shape)
        err = np.max(np.abs(y - swapped))
        if err > 1e-10 * max(1.0, np.max(np.abs(y))):
            raise NumericalError(f"conjugate symmetry violated by {err:.3e}")
    return y[:, 0] if scalar else y


def reduced_dynamics(model, z):
    """Apply the reduced map/field first component to z (array friendly)."""
    z = np.asarray(z, dtype=complex)
    out = model.mu_ell * z + model.beta * z**2 * np.conj(z)
    if model.gamma is not None:
        out = out + model.gamma * z**3 * np.conj(z) ** 2
    return out


@dataclass(eq=False)
class InvarianceResidual:
    """Step-halving invariance diagnostic at two sampling radii."""

    radius: float
    residual: float
    residual_half: float
    samples: int

    @property
    def slope(self):
        """log2(residual(eps) / residual(eps/2)); ~order+1 for a good model."""
        if self.residual_half == 0:
            return np.inf
        return float(np.log2(self.residual / self.residual_half))


def invariance_residual(model, dynamics, radius, samples=64):
    """Measure how well the model satisfies the invariance equation.

    `dynamics` is the full diagonalized polynomial map (flavor "map":
    y -> Lambda y + G(y)) or vector field (flavor "flow"), including its
    linear part. The residual is sampled on circles |z| = radius and
    radius/2; the decay slope between the two is the order diagnostic.
    """
    def max_resid(rho):
        theta = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
        z = rho * np.exp(1j * theta)
        y = evaluate_ssm(model, z)
        lhs = dynamics.evaluate(y.T).T
        if model.flavor == FLAVOR_MAP:
            rhs = evaluate_ssm(model, reduced_dynamics(model, z))
        else:
            dz = np.zeros_like(y)
            dzb = np.zeros_like(y)
            for i, (s1, s2) in enumerate(model.slots):
                if s1:
                    dz += np.outer(model.w[:, i], s1 * z ** (s1 - 1) * np.conj(z) ** s2)
                if s2:
                    dzb += np.outer(model.w[:, i], s2 * z**s1 * np.conj(z) ** (s2 - 1))
            r1 = reduced_dynamics(model, z)
            rhs = dz * r1 + dzb * np.conj(r1)
        return float(np.max(np.linalg.norm(lhs - rhs, axis=0)))

    return InvarianceResidual(float(radius), max_resid(radius),
                              max_resid(radius / 2), samples)
