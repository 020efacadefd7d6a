"""Multivariate monomial algebra and least-squares fitting of the sampling map.

The one-step model has the form ``F(x) = K @ psi(x)`` where ``psi`` stacks all
monomials of degree 1..r (no constant term: the origin is a fixed point of the
shifted data). Basis members are ordered graded-lexicographically, so the
degree-1 block is a contiguous prefix and the linear part of a fitted map is
simply its first ``dim`` columns.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DataError, NumericalError

#: condition-number limit on the normal-equation matrix P before the fit is
#: declared rank deficient (the design-matrix condition is its square root)
COND_LIMIT = 1e14


def monomial_basis(dim, degree):
    """Return all exponent tuples with 1 <= |m| <= degree, graded-lex ordered.

    Within one total degree, tuples are ordered by descending lexicographic
    comparison, e.g. for ``dim=2, degree=2``:
    ``[(1,0), (0,1), (2,0), (1,1), (0,2)]``. The ordering is total and
    deterministic; the number of members is ``C(dim+degree, degree) - 1``.
    """
    if dim < 1 or degree < 1:
        raise ValueError("dim and degree must be >= 1")
    basis = []
    for total in range(1, degree + 1):
        basis.extend(_exponents_of_degree(dim, total))
    return basis


def _exponents_of_degree(dim, total):
    if dim == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        for rest in _exponents_of_degree(dim - 1, total - first):
            out.append((first,) + rest)
    return out


def basis_size(dim, degree):
    """Number of monomials of degree 1..degree in `dim` variables."""
    return math.comb(dim + degree, degree) - 1


def evaluate_basis(basis, x):
    """Evaluate every basis monomial at a single point `x`.

    Component l equals ``prod_i x_i**m^l_i``. Works for real or complex `x`.
    """
    x = np.asarray(x)
    out = np.empty(len(basis), dtype=x.dtype if x.dtype.kind == "c" else float)
    for l, m in enumerate(basis):
        v = 1.0
        for xi, p in zip(x, m):
            if p:
                v = v * xi**p
        out[l] = v
    return out


def _basis_matrix(basis, X):
    """Evaluate the basis on every row of X, shape (n, len(basis))."""
    X = np.asarray(X)
    n, dim = X.shape
    degree = max(sum(m) for m in basis)
    # cache columnwise powers so each monomial is a few vector multiplies
    pows = []
    for i in range(dim):
        col = [None, X[:, i]]
        for p in range(2, degree + 1):
            col.append(col[-1] * X[:, i])
        pows.append(col)
    out = np.empty((n, len(basis)), dtype=X.dtype)
    for l, m in enumerate(basis):
        acc = None
        for i, p in enumerate(m):
            if p:
                acc = pows[i][p] if acc is None else acc * pows[i][p]
        out[:, l] = acc
    return out


@dataclass(eq=False)
class PolyMap:
    """Polynomial map in the graded-lex monomial basis, no constant term.

    `coeffs` has shape (out_dim, N) with N = C(in_dim+degree, degree) - 1;
    column l multiplies the monomial `basis[l]`. The scalar field is read off
    the coeffs dtype (real for fitted sampling maps, complex for the
    diagonalized nonlinearity).
    """

    in_dim: int
    out_dim: int
    degree: int
    basis: tuple
    coeffs: np.ndarray
    _slot: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.basis = tuple(tuple(m) for m in self.basis)
        self.coeffs = np.asarray(self.coeffs)
        if self.coeffs.shape != (self.out_dim, len(self.basis)):
            raise ValueError(
                f"coeffs shape {self.coeffs.shape} does not match "
                f"(out_dim, N) = ({self.out_dim}, {len(self.basis)})"
            )
        self._slot = {m: l for l, m in enumerate(self.basis)}

    @classmethod
    def zeros(cls, in_dim, out_dim, degree, dtype=float):
        basis = monomial_basis(in_dim, degree)
        return cls(in_dim, out_dim, degree,
                   tuple(basis), np.zeros((out_dim, len(basis)), dtype=dtype))

    @property
    def is_complex(self):
        return self.coeffs.dtype.kind == "c"

    def slot(self, exponents):
        """Column index of the monomial with the given exponent tuple."""
        return self._slot[tuple(exponents)]

    def coefficient(self, row, exponents):
        """Coefficient of x**exponents in output `row` (0 if not in basis)."""
        l = self._slot.get(tuple(exponents))
        if l is None:
            return self.coeffs.dtype.type(0)
        return self.coeffs[row, l]

    def evaluate(self, x):
        """Evaluate the map at a point (1-D) or at rows of a 2-D array."""
        x = np.asarray(x)
        if x.ndim == 1:
            return self.coeffs @ evaluate_basis(self.basis, x)
        return _basis_matrix(self.basis, x) @ self.coeffs.T

    __call__ = evaluate

    def linear_block(self):
        """The degree-1 coefficient block as a square (out_dim, in_dim) array."""
        return np.array(self.coeffs[:, : self.in_dim])

    def without_linear_part(self):
        """Copy of the map with the degree-1 block zeroed."""
        coeffs = self.coeffs.copy()
        coeffs[:, : self.in_dim] = 0
        return PolyMap(self.in_dim, self.out_dim, self.degree, self.basis, coeffs)

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        d = {
            "format": "polymap/1",
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "degree": self.degree,
            "basis": [list(m) for m in self.basis],
            "scalar_field": "complex" if self.is_complex else "real",
        }
        if self.is_complex:
            d["coeffs_re"] = self.coeffs.real.ravel().tolist()
            d["coeffs_im"] = self.coeffs.imag.ravel().tolist()
        else:
            d["coeffs"] = self.coeffs.ravel().tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != "polymap/1":
            raise DataError(f"unsupported polymap format: {d.get('format')!r}")
        basis = tuple(tuple(m) for m in d["basis"])
        shape = (d["out_dim"], len(basis))
        if d["scalar_field"] == "complex":
            coeffs = (np.array(d["coeffs_re"]) + 1j * np.array(d["coeffs_im"]))
            coeffs = coeffs.reshape(shape)
        else:
            coeffs = np.array(d["coeffs"]).reshape(shape)
        return cls(d["in_dim"], d["out_dim"], d["degree"], basis, coeffs)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_nar(data, degree, regularization=None):
    """Fit the one-step autoregressive polynomial map to embedded pairs.

    Minimizes ``sum_p (1/M_p) sum_k |K psi(state_k) - successor_k|^2`` (each
    trajectory weighted by the inverse of its sample count). The weighted
    normal equations K = Q P^{-1} are solved through an SVD of the weighted
    design matrix, which is the rank-revealing equivalent and supplies the
    condition estimate; an optional Tikhonov term `regularization` adds
    lambda*I to P for ill-conditioned data.

    Parameters
    ----------
    data : DelayDataset
        Embedded one-step training pairs.
    degree : int
        Maximum total degree r of the monomial basis.
    regularization : float, optional
        Non-negative Tikhonov parameter lambda (default: none).

    Returns
    -------
    PolyMap
        Real map of shape (2*nu -> 2*nu).
    """
    dim = data.dim
    basis = monomial_basis(dim, degree)
    n = len(basis)
    n_pairs = data.states.shape[0]
    if n_pairs < n:
        raise DataError(
            f"pair count {n_pairs} is below the number of basis functions {n}"
        )
    if not (np.all(np.isfinite(data.states)) and np.all(np.isfinite(data.successors))):
        raise DataError("non-finite values in training pairs")

    phi = _basis_matrix(basis, data.states)
    sqw = np.sqrt(np.repeat(1.0 / data.source_lengths, data.pair_counts))
    phi_w = phi * sqw[:, None]
    y_w = data.successors * sqw[:, None]
    if regularization:
        if regularization < 0:
            raise ValueError("regularization must be non-negative")
        phi_w = np.vstack([phi_w, math.sqrt(regularization) * np.eye(n)])
        y_w = np.vstack([y_w, np.zeros((n, dim))])

    kt, _, rank, sv = scipy.linalg.lstsq(phi_w, y_w, lapack_driver="gelsd")
    cond_p = (sv[0] / sv[-1]) ** 2 if sv[-1] > 0 else np.inf
    if not regularization and (rank < n or cond_p > COND_LIMIT):
        raise NumericalError(
            "rank-deficient normal equations "
            f"(cond(P) ~ {cond_p:.3e}); supply a regularization parameter"
        )
    fitted = PolyMap(dim, dim, degree, tuple(basis), np.ascontiguousarray(kt.T))
    fitted.condition_number = cond_p
    return fitted


def predict(poly_map, x):
    """Evaluate a fitted map at a state: K psi(x)."""
    return poly_map.evaluate(x)


def residual_error(poly_map, data):
    """Unweighted sum of squared one-step residuals over a dataset."""
    pred = poly_map.evaluate(data.states)
    return float(np.sum(np.abs(pred - data.successors) ** 2))


# -- composition with a linear change of coordinates ------------------------


def _poly_mul(a, b):
    """Multiply two sparse polynomials given as {exponent tuple: coeff}."""
    out = {}
    for ma, va in a.items():
        for mb, vb in b.items():
            key = tuple(x + y for x, y in zip(ma, mb))
            out[key] = out.get(key, 0.0) + va * vb
    return out


def _expand_monomial(m, linear_forms, power_cache):
    """Expansion of prod_i (V[i,:] . y)**m_i as {exponent tuple: coeff}."""
    dim = len(m)
    acc = None
    for i, p in enumerate(m):
        if not p:
            continue
        key = (i, p)
        if key not in power_cache:
            base = linear_forms[i]
            cur = power_cache.get((i, p - 1))
            if cur is None:
                cur = {(0,) * dim: 1.0}
                for _ in range(p - 1):
                    cur = _poly_mul(cur, base)
            power_cache[key] = _poly_mul(cur, base)
        term = power_cache[key]
        acc = term if acc is None else _poly_mul(acc, term)
    return acc


def compose_linear_change(poly_map, V, V_inv):
    """Coefficient table of ``y -> V^{-1} F(V y)`` in the same basis.

    The composition with a linear inner map does not raise the degree, so the
    result is exact in the coefficient field. The degree-1 block of the output
    equals ``V^{-1} A V`` with A the degree-1 block of the input.
    """
    V = np.asarray(V)
    V_inv = np.asarray(V_inv)
    dim = poly_map.in_dim
    if V.shape != (dim, dim) or V_inv.shape != (dim, dim):
        raise ValueError("V and V_inv must be square with the map's dimension")
    if not np.allclose(V @ V_inv, np.eye(dim), atol=1e-10):
        raise NumericalError("V_inv is not an inverse of V (tolerance 1e-10)")

    basis = poly_map.basis
    slot = {m: l for l, m in enumerate(basis)}
    zero = (0,) * dim
    linear_forms = []
    for i in range(dim):
        lf = {}
        for j in range(dim):
            if V[i, j] != 0:
                key = tuple(1 if t == j else 0 for t in range(dim))
                lf[key] = V[i, j]
        linear_forms.append(lf)

    # B[l, l'] = coefficient of basis[l'] in basis-monomial l evaluated at V y
    B = np.zeros((len(basis), len(basis)), dtype=complex)
    cache = {}
    for l, m in enumerate(basis):
        for key, val in _expand_monomial(m, linear_forms, cache).items():
            if key != zero:
                B[l, slot[key]] = val

    coeffs = V_inv @ poly_map.coeffs.astype(complex) @ B
    return PolyMap(dim, dim, poly_map.degree, basis, coeffs)
