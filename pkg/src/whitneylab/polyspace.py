"""Polynomial spaces annihilated by repeated directional derivatives.

The space of interest is spanned by polynomials whose restriction to every
line in a direction from a given set is a univariate polynomial of degree
below ``r``.  For a spanning direction set this space is finite dimensional
and sits inside total degree ``d * (r - 1)``; it is realized here as the
orthonormalized nullspace of stacked r-fold directional derivative maps over
a graded-lexicographic monomial frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, SpanDeficiencyError

NULLSPACE_RTOL = 1e-9


def monomial_exponents(dim, max_degree):
    """All multi-indices with total degree <= max_degree, graded-lex order."""
    out = []
    for total in range(max_degree + 1):
        out.extend(_fixed_degree(dim, total))
    return np.array(out, dtype=int).reshape(-1, dim)


def _fixed_degree(dim, total):
    if dim == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        for rest in _fixed_degree(dim - 1, total - first):
            out.append((first,) + rest)
    return out


def _exponent_index(exponents):
    return {tuple(a): i for i, a in enumerate(exponents)}


def differentiation_matrix(exponents, axis):
    """Matrix of d/dx_axis on the monomial frame (frame is closed downward)."""
    idx = _exponent_index(exponents)
    n = len(exponents)
    D = np.zeros((n, n))
    for j, a in enumerate(exponents):
        if a[axis] == 0:
            continue
        target = list(a)
        target[axis] -= 1
        i = idx.get(tuple(target))
        if i is None:
            raise PreconditionError("exponent list is not closed under differentiation")
        D[i, j] = a[axis]
    return D


def directional_derivative_matrix(exponents, xi):
    xi = np.asarray(xi, dtype=float).ravel()
    D = np.zeros((len(exponents), len(exponents)))
    for axis in range(xi.size):
        if xi[axis] != 0.0:
            D += xi[axis] * differentiation_matrix(exponents, axis)
    return D


def directional_power_derivative(poly, xi, r, exponents):
    """Coefficients of (xi . grad)^r applied to ``poly`` on the same frame."""
    coeffs = np.asarray(poly, dtype=float).ravel()
    if coeffs.size != len(exponents):
        raise PreconditionError("coefficient vector does not match exponent list")
    if r == 0:
        return coeffs.copy()
    D = directional_derivative_matrix(exponents, xi)
    out = coeffs
    for _ in range(r):
        out = D @ out
    return out


@dataclass(eq=False)
class PolySpaceBasis:
    """Orthonormal basis (rows of ``coeffs``) over a monomial exponent frame."""
    dim_space: int
    order: int
    exponents: np.ndarray  # (n_mono, d)
    coeffs: np.ndarray     # (n_basis, n_mono), orthonormal rows
    dirset: object

    @property
    def n_basis(self):
        return self.coeffs.shape[0]

    def spec(self):
        return {
            "d": self.dim_space,
            "r": self.order,
            "exponents": self.exponents.tolist(),
            "coeffs": self.coeffs.tolist(),
            "dirs": self.dirset.dirs.tolist(),
        }


def build_basis(d, r, dirset):
    """Orthonormal basis of the directionally-flat polynomial space.

    Raises for span-deficient direction sets, where the space is infinite
    dimensional and no truncated basis would be faithful.
    """
    if r < 1:
        raise PreconditionError("order r must be >= 1")
    if dirset.dim != d:
        raise PreconditionError("direction set dimension mismatch")
    if dirset.spread <= 0.0:
        raise SpanDeficiencyError(
            "directions do not span the space; the constrained space is infinite dimensional"
        )
    exponents = monomial_exponents(d, d * (r - 1))
    n = len(exponents)
    blocks = []
    for xi in dirset.dirs:
        D = directional_derivative_matrix(exponents, xi)
        blocks.append(np.linalg.matrix_power(D, r))
    stacked = np.vstack(blocks)
    u, s, vh = np.linalg.svd(stacked)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > NULLSPACE_RTOL * smax)) if smax > 0 else 0
    basis = vh[rank:]
    if basis.shape[0] == 0:
        raise PreconditionError("empty basis; constraints annihilated everything")
    return PolySpaceBasis(d, r, exponents, np.ascontiguousarray(basis), dirset)


def basis_from_spec(spec):
    from .geometry import direction_set

    return PolySpaceBasis(
        int(spec["d"]), int(spec["r"]),
        np.asarray(spec["exponents"], dtype=int),
        np.asarray(spec["coeffs"], dtype=float),
        direction_set(spec["dirs"]),
    )


def monomial_matrix(exponents, points):
    """(n_points, n_mono) matrix of monomial values."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    exps = np.asarray(exponents)
    n = pts.shape[0]
    chunk = max(1, 4_000_000 // max(1, exps.size))
    if n <= chunk:
        return np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)
    out = np.empty((n, len(exps)))
    for i in range(0, n, chunk):
        out[i:i + chunk] = np.prod(pts[i:i + chunk, None, :] ** exps[None, :, :],
                                   axis=2)
    return out


def evaluate(basis, coeffs, x):
    """Evaluate sum_k coeffs_k * P_k at one point or a batch of points.

    Single-point evaluation accumulates with compensated summation so that
    high-degree frames do not lose digits.
    """
    coeffs = np.asarray(coeffs, dtype=float).ravel()
    if coeffs.size != basis.n_basis:
        raise PreconditionError("coefficient length does not match basis size")
    mono = coeffs @ basis.coeffs
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        terms = mono * monomial_matrix(basis.exponents, pts[None, :])[0]
        return math.fsum(terms.tolist())
    return monomial_matrix(basis.exponents, pts) @ mono


def design_matrix(basis, points):
    """(n_points, n_basis) matrix of basis-polynomial values."""
    return monomial_matrix(basis.exponents, points) @ basis.coeffs.T


def membership_residual(basis, poly):
    """Norm of the component of ``poly`` outside the basis span."""
    v = np.asarray(poly, dtype=float).ravel()
    if v.size != basis.exponents.shape[0]:
        raise PreconditionError("coefficient vector does not match the basis frame")
    proj = basis.coeffs.T @ (basis.coeffs @ v)
    return float(np.linalg.norm(v - proj))
