"""Quasi-norms of the sequence spaces living on dyadic-cube coefficients.

The central object is the weighted norm

    || lambda ||  =  ( sum_k  2^(k*alpha*p) * || g chi_k ||_q^p )^(1/p),
    g(x) = ( sum_v sum_m  2^(v*s*beta) |lambda_{v,m}|^beta chi_{v,m}(x) )^(1/beta),

with sup-reductions replacing the power sums when p or beta is infinite.
Since g is piecewise constant on the overlay of the support cubes, every
integral here is evaluated exactly via cube/annulus overlap measures; the
only truncation is the tail cut of origin-touching cubes, controlled by the
window's tail_tol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np

from .errors import DataError, InadmissibleParameterError, WindowError
from .geometry import (
    CoeffField,
    DyadicIndex,
    TruncationWindow,
    cube_annulus_overlap,
    support_annulus_range,
)
from .sums import lp_norm, weighted_power_integral

__all__ = [
    "HerzParams",
    "SmoothParams",
    "StarParams",
    "seq_norm",
    "lambda_star",
    "lambda_equiv_report",
    "star_exponent",
    "hardy_sums",
    "hardy_bound",
    "LambdaEquivReport",
    "HardyReport",
]


@dataclass(frozen=True)
class HerzParams:
    """Herz weight/exponent bundle (alpha, p, q); p may be inf, q is finite."""

    alpha: float
    p: float
    q: float

    def __post_init__(self):
        if not (self.p > 0):
            raise InadmissibleParameterError(f"outer exponent p must be positive, got {self.p}")
        if not (0 < self.q < math.inf):
            raise InadmissibleParameterError(f"inner exponent q must be finite positive, got {self.q}")
        for name in ("alpha", "p", "q"):
            v = getattr(self, name)
            if isinstance(v, float) and math.isnan(v):
                raise InadmissibleParameterError(f"{name} is NaN")

    def require_admissible(self, dim: int) -> None:
        if not (self.alpha > -dim / self.q):
            raise InadmissibleParameterError(
                f"alpha={self.alpha} violates alpha > -n/q = {-dim / self.q}"
            )

    def weight_decay(self, dim: int) -> float:
        """Tail exponent alpha + n/q of the annulus weights; positive when admissible."""
        return self.alpha + dim / self.q


@dataclass(frozen=True)
class SmoothParams:
    """Smoothness/fine-index bundle (s, beta); beta may be inf."""

    s: float
    beta: float

    def __post_init__(self):
        if not (self.beta > 0):
            raise InadmissibleParameterError(f"beta must be positive, got {self.beta}")
        if math.isnan(self.s):
            raise InadmissibleParameterError("s is NaN")


@dataclass(frozen=True)
class StarParams:
    """Exponent r and decay d of the smoothed maximal coefficients."""

    r: float
    d: float

    def __post_init__(self):
        if not (self.r > 0):
            raise InadmissibleParameterError(f"r must be positive, got {self.r}")

    def require_admissible(self, dim: int) -> None:
        if not (self.d > dim):
            raise InadmissibleParameterError(f"d={self.d} violates d > n = {dim}")


class _Overlay:
    """Containment forest of the support cubes and the chain data of each cell.

    The cell of a cube is the cube minus its direct children in the forest;
    on that cell the inner function is constant and determined by the chain
    of coefficients from the forest root down to the cube.
    """

    def __init__(self, field: CoeffField):
        idxs = list(field.indices())
        present = set(idxs)
        self.idxs: List[DyadicIndex] = idxs
        self.pos = {idx: i for i, idx in enumerate(idxs)}
        self.parent: List[int | None] = []
        self.values = np.array([abs(field[idx]) for idx in idxs])
        for idx in idxs:
            par = None
            for lvl in range(idx.v - 1, -1, -1):
                anc = idx.ancestor(lvl)
                if anc in present:
                    par = self.pos[anc]
                    break
            self.parent.append(par)

    def chains(self) -> List[List[int]]:
        out: List[List[int]] = []
        for i in range(len(self.idxs)):
            par = self.parent[i]
            out.append([i] if par is None else out[par] + [i])
        return out


def _overlap_matrix(idxs: Sequence[DyadicIndex], ks: np.ndarray, dim: int) -> np.ndarray:
    """Overlap measures, one row per cube, one column per annulus index."""
    if dim == 1:
        lo = np.array([idx.bounds()[0][0] for idx in idxs])[:, None]
        hi = np.array([idx.bounds()[0][1] for idx in idxs])[:, None]
        r_out = 2.0 ** ks.astype(float)[None, :]
        r_in = 0.5 * r_out
        pos = np.clip(np.minimum(hi, r_out) - np.maximum(lo, r_in), 0.0, None)
        neg = np.clip(np.minimum(hi, -r_in) - np.maximum(lo, -r_out), 0.0, None)
        return pos + neg
    mat = np.zeros((len(idxs), len(ks)))
    k_list = [int(k) for k in ks]
    for i, idx in enumerate(idxs):
        r_min, r_max = idx.radial_range()
        for j, k in enumerate(k_list):
            if r_max <= 2.0 ** (k - 1) or (r_min >= 2.0**k):
                continue
            mat[i, j] = cube_annulus_overlap(idx, k)
    return mat


def seq_norm(
    field: CoeffField,
    hp: HerzParams,
    sp: SmoothParams,
    win: TruncationWindow,
) -> float:
    """Quasi-norm of a coefficient field, exact up to the window's tail cut."""
    n = field.dim
    hp.require_admissible(n)
    win.validate_for_dim(n)
    if not field.fits(win):
        raise WindowError("field support does not fit the truncation window")
    if not field or field.max_abs() == 0.0:
        return 0.0

    overlay = _Overlay(field)
    chains = overlay.chains()
    level_weight = 2.0 ** (sp.s * np.array([idx.v for idx in overlay.idxs], dtype=float))
    terms = level_weight * overlay.values
    g = np.array([lp_norm(terms[chain], sp.beta) for chain in chains])

    k_lo, k_hi = support_annulus_range(
        field, tail_tol=win.tail_tol, decay=hp.weight_decay(n)
    )
    k_lo = max(k_lo, win.k_min)
    k_hi = min(k_hi, win.k_max)
    if k_lo > k_hi:
        return 0.0
    ks = np.arange(k_lo, k_hi + 1)

    ov = _overlap_matrix(overlay.idxs, ks, n)
    cell = ov.copy()
    for i, par in enumerate(overlay.parent):
        if par is not None:
            cell[par] -= ov[i]
    np.clip(cell, 0.0, None, out=cell)

    shell = np.array(
        [weighted_power_integral(g, cell[:, j], hp.q) for j in range(len(ks))]
    )
    outer = 2.0 ** (hp.alpha * ks.astype(float)) * shell
    return lp_norm(outer, hp.p)


def lambda_star(field: CoeffField, st: StarParams, win: TruncationWindow) -> CoeffField:
    """Smoothed maximal coefficients (sum_h |l_{v,h}|^r (1+|h-m|)^-d)^(1/r).

    Evaluated on the window's position lattice at each support level; entries
    below 1e-14 of the peak input value are dropped, except at the original
    support indices, which are always kept so the pointwise domination
    lambda* >= |lambda| is exact.
    """
    n = field.dim
    st.require_admissible(n)
    win.validate_for_dim(n)
    if not field.fits(win):
        raise WindowError("field support does not fit the truncation window")
    out: Dict[Tuple[int, Tuple[int, ...]], float] = {}
    if not field:
        return CoeffField(out, n)
    drop_tol = 1e-14 * field.max_abs()

    by_level: Dict[int, List[Tuple[Tuple[int, ...], float]]] = {}
    for idx, val in field.items():
        by_level.setdefault(idx.v, []).append((idx.m, abs(val)))

    lattice_1d = np.arange(-win.m_bound, win.m_bound + 1)
    for v, items in sorted(by_level.items()):
        hs = np.array([m for m, _ in items], dtype=float).reshape(len(items), n)
        vals = np.array([val for _, val in items])
        top = vals.max()
        if n == 1:
            cand = lattice_1d.reshape(-1, 1).astype(float)
        else:
            gx, gy = np.meshgrid(lattice_1d, lattice_1d, indexing="ij")
            cand = np.stack([gx.ravel(), gy.ravel()], axis=1).astype(float)
        dist = np.sqrt(((cand[:, None, :] - hs[None, :, :]) ** 2).sum(axis=2))
        weights = (1.0 + dist) ** (-st.d)
        if top > 0:
            with np.errstate(under="ignore"):
                star = top * (weights @ (vals / top) ** st.r) ** (1.0 / st.r)
        else:
            star = np.zeros(len(cand))
        support_here = {m for m, _ in items}
        for row, value in zip(cand.astype(int), star):
            m = tuple(int(x) for x in row)
            if value > drop_tol or m in support_here:
                out[(v, m)] = float(value)
    return CoeffField(out, n)


def star_exponent(hp: HerzParams, sp: SmoothParams, dim: int) -> float:
    """The exponent min(q, n/(n/q + alpha), beta) used in the equivalence lemma."""
    return min(hp.q, dim / (dim / hp.q + hp.alpha), sp.beta)


class LambdaEquivReport(NamedTuple):
    norm_lambda: float
    norm_lambda_star: float
    ratio: float


def lambda_equiv_report(
    field: CoeffField,
    hp: HerzParams,
    sp: SmoothParams,
    d: float,
    win: TruncationWindow,
) -> LambdaEquivReport:
    """Both sides of the lambda* equivalence and their ratio.

    The exponent r is fixed to min(q, n/(n/q+alpha), beta).  The lower half
    norm(lambda) <= norm(lambda*) holds exactly; the ratio is reported as 1
    for the zero field, where the equivalence is vacuous.
    """
    n = field.dim
    hp.require_admissible(n)
    r = star_exponent(hp, sp, n)
    star = lambda_star(field, StarParams(r=r, d=d), win)
    norm_f = seq_norm(field, hp, sp, win)
    norm_s = seq_norm(star, hp, sp, win) if star else 0.0
    ratio = norm_s / norm_f if norm_f > 0 else 1.0
    return LambdaEquivReport(norm_f, norm_s, ratio)


class HardyReport(NamedTuple):
    delta_norm: float
    eta_norm: float
    rhs_norm: float
    constant_estimate: float


def hardy_sums(eps: Sequence[float], a: float, q_exp: float) -> HardyReport:
    """Discrete Hardy sums and the realized constant of their ell_q bound.

    delta_k = sum_{j<=k} a^(k-j) eps_j and eta_k = sum_{j>=k} a^(j-k) eps_j;
    the report carries ||delta||_q, ||eta||_q, ||eps||_q and the realized
    constant (||delta||_q + ||eta||_q) / ||eps||_q (zero for zero input).
    """
    if not (0.0 < a < 1.0):
        raise InadmissibleParameterError(f"geometric ratio a must lie in (0,1), got {a}")
    if not (q_exp > 0):
        raise InadmissibleParameterError(f"exponent q must be positive, got {q_exp}")
    e = np.asarray(list(eps), dtype=float)
    if e.size == 0:
        raise DataError("empty sequence")
    if not np.all(np.isfinite(e)) or np.any(e < 0):
        raise DataError("sequence entries must be finite and non-negative")
    delta = np.empty_like(e)
    acc = 0.0
    for i, x in enumerate(e):
        acc = a * acc + x
        delta[i] = acc
    eta = np.empty_like(e)
    acc = 0.0
    for i in range(e.size - 1, -1, -1):
        acc = a * acc + e[i]
        eta[i] = acc
    dn = lp_norm(delta, q_exp)
    en = lp_norm(eta, q_exp)
    rn = lp_norm(e, q_exp)
    const = (dn + en) / rn if rn > 0 else 0.0
    return HardyReport(dn, en, rn, const)


def hardy_bound(a: float, q_exp: float) -> float:
    """Constant 2 * (1 - a^u)^(-1/u), u = min(1, q), dominating the realized one."""
    if not (0.0 < a < 1.0):
        raise InadmissibleParameterError(f"geometric ratio a must lie in (0,1), got {a}")
    u = min(1.0, q_exp)
    return 2.0 * (1.0 - a**u) ** (-1.0 / u)
