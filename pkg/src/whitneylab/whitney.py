"""Whitney-type ratios: empirical lower bounds, chain upper bounds, and the
log-ridge divergence certificate on narrow cone bodies.

The central quantity is the worst-case ratio of best-approximation error from
the directionally-flat polynomial space to the directional modulus at scale
diam, estimated from finite function families (lower bounds only) or
certified from a verified decomposition chain (upper bounds, relative to an
assumed bound on the base piece).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import PreconditionError
from . import geometry as geo
from .approx import best_approx
from .modulus import RidgeLog, random_polynomial, set_modulus
from .polyspace import build_basis

RATIO_CUTOFF = 1e-9


def whitney_ratio(f, dom, plan, dirset, basis, r, p, t=None):
    """Approximation error over modulus at scale diam; None when the modulus
    vanishes (the function lies in the flat space, ratio undefined)."""
    if t is None:
        t = geo.diameter(dom, plan).value
    fvals = np.asarray(f(plan.points), dtype=float)
    scale = float(np.max(np.abs(fvals))) if len(fvals) else 0.0
    mod = set_modulus(f, dom, plan, dirset, r, t, p)
    if mod.value <= RATIO_CUTOFF * max(scale, 1e-300):
        return None
    err = best_approx(f, dom, plan, basis, p).error
    return err / mod.value


@dataclass(eq=False)
class WhitneyEstimate:
    lower_bound: float
    theta: float
    witness: Optional[dict]
    params: dict
    upper_bound: Optional[float] = None
    n_defined: int = 0
    inconsistent: bool = field(default=False)

    def attach_upper_bound(self, value, tol=1e-9):
        self.upper_bound = float(value)
        self.inconsistent = self.lower_bound > self.upper_bound * (1.0 + tol) + tol

    def spec(self):
        return {
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "theta": self.theta,
            "witness": self.witness,
            "params": self.params,
            "n_defined": self.n_defined,
        }


def _family_functions(family, dim, r, budget, seed, basis=None):
    kind = family.get("kind") if isinstance(family, dict) else "user"
    if kind == "user":
        for f in family if not isinstance(family, dict) else family["functions"]:
            yield f, getattr(f, "_random_spec", None) or f.spec()
        return
    if kind == "random_poly":
        degree = int(family.get("degree", dim * (r - 1) + 3))
        for k in range(budget):
            f = random_polynomial(degree, seed + k, dim)
            yield f, {"kind": "random_poly", "degree": degree, "seed": seed + k}
        return
    if kind == "ridge_log":
        n_list = family.get("n_list") or [2 ** k for k in range(budget)]
        xi = np.asarray(family["xi"], dtype=float)
        for n in n_list[:budget]:
            yield RidgeLog(n, xi), {"kind": "ridge_log", "n": int(n), "xi": xi.tolist()}
        return
    if kind == "perturbed_basis":
        if basis is None:
            raise PreconditionError("perturbed_basis family needs the basis")
        rng = np.random.default_rng(seed)
        from .modulus import PolynomialFunction
        for k in range(budget):
            row = rng.integers(0, basis.n_basis)
            noise = 0.3 * rng.standard_normal(len(basis.exponents))
            coeffs = basis.coeffs[row] + noise
            yield (PolynomialFunction(basis.exponents, coeffs),
                   {"kind": "perturbed_basis", "row": int(row), "seed": seed + k})
        return
    raise PreconditionError(f"unknown family kind {kind!r}")


def empirical_whitney_constant(dom, plan, dirset, r, p, family, budget=64,
                               seed=0, basis=None):
    """Max defined ratio over a sampled function family (a lower bound)."""
    if basis is None:
        basis = build_basis(dom.dim, r, dirset)
    t = geo.diameter(dom, plan).value
    best = None
    witness = None
    n_defined = 0
    for f, spec in _family_functions(family, dom.dim, r, budget, seed, basis=basis):
        ratio = whitney_ratio(f, dom, plan, dirset, basis, r, p, t=t)
        if ratio is None:
            continue
        n_defined += 1
        if best is None or ratio > best:
            best = ratio
            witness = {"function": spec, "ratio": ratio}
    if best is None:
        raise PreconditionError("no candidate produced a defined ratio")
    return WhitneyEstimate(
        lower_bound=float(best),
        theta=min(p, 1.0),
        witness=witness,
        params={"r": r, "p": ("inf" if math.isinf(p) else p),
                "n_dirs": len(dirset), "budget": budget, "seed": seed},
        n_defined=n_defined,
    )


@dataclass(frozen=True)
class ChainBound:
    value: float          # from the link-by-link recursion (primary)
    closed_form: float    # cross-check
    theta: float
    n_links: int

    def __float__(self):
        return self.value


def chain_upper_bound(chain, w0, p):
    """Certified bound propagated through a verified chain.

    Both the link recursion w_k = 1 + 2^r w_{k-1} (in theta-power scale) and
    its closed form are computed; they must agree to 1e-12 relative.
    """
    if not chain.verified:
        raise PreconditionError("chain must pass verify_chain before certification")
    if w0 < 0:
        raise PreconditionError("w0 must be nonnegative")
    theta = min(p, 1.0)
    r = chain.order
    m = chain.n_pieces - 1
    wt = w0 ** theta
    for _ in range(m):
        wt = 1.0 + (2.0 ** r) * wt
    closed = (2.0 ** (m * r)) * (w0 ** theta) + ((2.0 ** (m * r)) - 1.0) / ((2.0 ** r) - 1.0)
    if m > 0 and abs(wt - closed) > 1e-12 * max(abs(wt), abs(closed)):
        raise ArithmeticError("chain bound recursion and closed form disagree")
    if m == 0:
        wt = closed = w0 ** theta
    return ChainBound(wt ** (1.0 / theta), closed ** (1.0 / theta), theta, m)


def counterexample_body(d, xi, eps):
    """The narrow capped cone along xi with opening parameter eps."""
    return geo.cone_body(xi, eps)


@dataclass(frozen=True)
class CertificateRow:
    n: int
    modulus: float
    floor: float
    numeric_er: float


@dataclass(eq=False)
class CertificateResult:
    rows: list
    margin_delta: float
    modulus_bounded: bool  # max modulus within factor 2 of the first row

    def table(self):
        return [(row.n, row.modulus, row.floor, row.numeric_er) for row in self.rows]


def counterexample_certificate(d, xi, eps, dirset, r, n_list, density=8192,
                               seed=0):
    """Divergence table for the log-ridge family on the narrow cone body.

    Requires the direction margin max eta.xi <= 1 - delta with delta > eps.
    Per n the table reports the sampled modulus at p=inf, the analytic
    divergence floor (n - 2^(dr) ln(dr)) / 2^(dr), and the plan-exact minimax
    error, computed on a plan augmented with the axis stencil points so the
    floor is attained by every candidate approximant.
    """
    xi = np.asarray(xi, dtype=float).ravel()
    xi = xi / np.linalg.norm(xi)
    sym = dirset.symmetrized()
    margin = 1.0 - float(np.max(sym.dirs @ xi))
    if margin <= eps:
        raise PreconditionError(
            f"direction margin delta={margin:.6g} must exceed eps={eps:.6g}")
    K = counterexample_body(d, xi, eps)
    dr = d * r
    stencil = np.array([j * xi / dr for j in range(dr + 1)])
    plan = geo.sample_plan(K, n_points=density, seed=seed, extra_points=stencil)
    basis = build_basis(d, r, dirset)
    t = geo.diameter(K).value
    rows = []
    for n in n_list:
        f = RidgeLog(int(n), xi)
        mod = set_modulus(f, K, plan, dirset, r, t, math.inf)
        floor = (n - (2.0 ** dr) * math.log(dr)) / (2.0 ** dr)
        er = best_approx(f, K, plan, basis, math.inf).error
        rows.append(CertificateRow(int(n), mod.value, floor, er))
    first = rows[0].modulus if rows else 0.0
    bounded = all(row.modulus <= 2.0 * first + 1e-12 for row in rows)
    return CertificateResult(rows, margin, bounded)
