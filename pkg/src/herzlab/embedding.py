"""Sobolev-embedding laboratory for the dyadic sequence spaces.

A case pairs a source space (alpha2, r, q, s2, theta) with a target space
(alpha1, p, s, s1, beta) under the balance s1 - n/s - alpha1 = s2 - n/q -
alpha2.  The module classifies admissibility, builds the geometric witness
family lambda^N whose norms are exactly linear in N, measures realized
embedding constants, searches for worst-case norm ratios, and probes the
vector-valued maximal inequality on grids.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
import scipy.ndimage

from .errors import (
    DataError,
    DegenerateInputError,
    DimensionError,
    InadmissibleParameterError,
)
from .fourier import _beta_combine
from .geometry import CoeffField, DyadicIndex, TruncationWindow
from .gridfn import GridFunction, herz_norm
from .seqspace import HerzParams, SmoothParams, seq_norm
from .sums import lp_norm

__all__ = [
    "SeqSpaceSide",
    "EmbeddingCase",
    "SearchConfig",
    "SearchResult",
    "validate_case",
    "counterexample_field",
    "step1_window",
    "search_window",
    "necessity_slope",
    "embedding_ratio",
    "worst_ratio_search",
    "maximal_probe",
    "corollary_presets",
    "PresetCase",
    "MaximalReport",
    "discrete_maximal",
]

_TOL = 1e-12


@dataclass(frozen=True)
class SeqSpaceSide:
    """One side of an embedding: weight alpha, outer/inner exponents, smoothness, ell-index."""

    alpha: float
    outer: float
    inner: float
    smooth: float
    ell: float

    def herz(self) -> HerzParams:
        return HerzParams(alpha=self.alpha, p=self.outer, q=self.inner)

    def smooth_params(self) -> SmoothParams:
        return SmoothParams(s=self.smooth, beta=self.ell)


@dataclass(frozen=True)
class EmbeddingCase:
    source: SeqSpaceSide  # (alpha2, r, q, s2, theta)
    target: SeqSpaceSide  # (alpha1, p, s, s1, beta)
    dim: int
    admissible: bool
    reasons: Tuple[str, ...]
    theta_rule: str  # "equals_beta" | "infinity"

    def describe(self) -> str:
        verdict = "admissible" if self.admissible else f"inadmissible ({'; '.join(self.reasons)})"
        return f"theta={self.theta_rule}, {verdict}"


def validate_case(
    *,
    alpha1: float,
    alpha2: float,
    s1: float,
    s2: float,
    s: float,
    q: float,
    r: float,
    p: float,
    beta: float,
    dim: int = 1,
) -> EmbeddingCase:
    """Classify an embedding case; the verdict carries every failed hypothesis.

    theta is set to beta exactly when s <= q and alpha2 + n/q = alpha1 + n/s
    (to 1e-12), and to infinity otherwise.
    """
    n = float(dim)
    reasons: List[str] = []
    domain_ok = all(x > 0 and math.isfinite(x) for x in (s, q, r, p)) and beta > 0
    if not domain_ok:
        reasons.append("domain")
        theta_rule = "infinity"
        theta = math.inf
        src = SeqSpaceSide(alpha2, r, q, s2, theta)
        tgt = SeqSpaceSide(alpha1, p, s, s1, beta)
        return EmbeddingCase(src, tgt, dim, False, tuple(reasons), theta_rule)

    balance_gap = (s1 - n / s - alpha1) - (s2 - n / q - alpha2)
    if abs(balance_gap) > _TOL:
        suggested = s1 - n / s - alpha1 + n / q + alpha2
        reasons.append(f"balance (suggested s2={suggested!r})")
    if r > p:
        reasons.append("outer exponents")
    if not (alpha1 > -n / s and alpha2 > -n / q):
        reasons.append("alpha range")

    slack = (alpha2 + n / q) - (alpha1 + n / s)
    if q < s:
        if alpha2 < alpha1:
            reasons.append("case split")
    else:  # s <= q
        if slack < -_TOL:
            reasons.append("slack")

    theta_rule = "equals_beta" if (s <= q and abs(slack) <= _TOL) else "infinity"
    theta = beta if theta_rule == "equals_beta" else math.inf
    src = SeqSpaceSide(alpha2, r, q, s2, theta)
    tgt = SeqSpaceSide(alpha1, p, s, s1, beta)
    return EmbeddingCase(src, tgt, dim, not reasons, tuple(reasons), theta_rule)


# ---------------------------------------------------------------------------
# the geometric witness family


class CounterexamplePair(NamedTuple):
    source_view: CoeffField
    target_view: CoeffField


def counterexample_field(N: int, case: EmbeddingCase) -> CounterexamplePair:
    """Witness family lambda^N with exactly N active levels.

    lambda^N_{v,1} = 2^(-(s1 - 1/s - alpha1) v) for v = 2..N+1 and zero
    elsewhere (1-d).  Each active level contributes the same amount to both
    norms, so the target norm^p is exactly N * 2^(alpha1 * p) and the source
    norm^r exactly N * 2^(alpha2 * r) under the balance condition.  Both
    views share the same coefficients.
    """
    if case.dim != 1:
        raise DimensionError("the witness family is one-dimensional")
    if N < 4:
        raise DataError("witness family needs N >= 4")
    t = case.target
    decay = t.smooth - 1.0 / t.inner - t.alpha
    field = CoeffField(
        {(v, (1,)): 2.0 ** (-decay * v) for v in range(2, N + 2)}, 1
    )
    return CounterexamplePair(source_view=field, target_view=field)


def step1_window(N: int, tail_tol: float = 1e-12) -> TruncationWindow:
    """Window holding lambda^N: levels to N+1, annuli [-N, -1] plus slack."""
    return TruncationWindow(v_max=N + 1, m_bound=1, k_min=-(N + 4), k_max=1, tail_tol=tail_tol)


def necessity_slope(case: EmbeddingCase, N_list: Sequence[int]) -> float:
    """Log-log regression slope of target/source norm ratios of lambda^N.

    The ratio equals 2^(alpha1-alpha2) N^(1/p - 1/r) exactly, so the slope
    is 1/p - 1/r.
    """
    if len(N_list) < 3:
        raise DataError("slope regression needs at least 3 values of N")
    logs_n, logs_ratio = [], []
    for N in N_list:
        pair = counterexample_field(int(N), case)
        win = step1_window(int(N))
        tgt = seq_norm(pair.target_view, case.target.herz(), case.target.smooth_params(), win)
        src = seq_norm(pair.source_view, case.source.herz(), case.source.smooth_params(), win)
        if src == 0:
            raise DegenerateInputError("zero source norm in slope regression")
        logs_n.append(math.log(N))
        logs_ratio.append(math.log(tgt / src))
    slope = np.polyfit(logs_n, logs_ratio, 1)[0]
    return float(slope)


def embedding_ratio(field: CoeffField, case: EmbeddingCase, win: TruncationWindow) -> float:
    """Realized embedding constant target-norm / source-norm for one field."""
    src = seq_norm(field, case.source.herz(), case.source.smooth_params(), win)
    if src == 0:
        raise DegenerateInputError("embedding ratio undefined for zero source norm")
    tgt = seq_norm(field, case.target.herz(), case.target.smooth_params(), win)
    return tgt / src


# ---------------------------------------------------------------------------
# worst-ratio search


@dataclass(frozen=True)
class SearchConfig:
    window: TruncationWindow
    trials: int = 600
    restarts: int = 8
    perturb_scale: float = 0.75
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.trials < 1 or self.restarts < 1:
            raise InadmissibleParameterError("trials and restarts must be >= 1")


class SearchResult(NamedTuple):
    best_field: CoeffField
    best_ratio: float
    trace: List[float]


def search_window(
    case: EmbeddingCase, v_max: int, m_bound: int = 2, tail_tol: float = 1e-10
) -> TruncationWindow:
    """Window for ratio search.

    The annulus range scales with the level cap (the witness family's levels
    v <= v_max occupy annuli down to 1 - v_max), so growing the window grows
    every resource an unbounded ratio can exploit; a static deep tail would
    let origin-touching cubes saturate the shell count independently of V.
    """
    return TruncationWindow.covering(
        v_max, m_bound, case.dim, tail_tol=tail_tol, k_min=-(v_max + 2)
    )


class _DenseEvaluator:
    """Fast norm-ratio evaluation on the full 1-d window lattice.

    The lattice's containment tree and cell/annulus overlaps are fixed, so a
    single evaluation is a handful of dense array reductions.  Results match
    seq_norm up to the window's tail tolerance.
    """

    def __init__(self, case: EmbeddingCase, win: TruncationWindow):
        if case.dim != 1:
            raise DimensionError("dense search lattice is one-dimensional")
        self.case = case
        self.win = win
        coords = [
            (v, m)
            for v in range(win.v_max + 1)
            for m in range(-win.m_bound, win.m_bound + 1)
        ]
        self.coords = coords
        pos = {c: i for i, c in enumerate(coords)}
        n_cubes = len(coords)

        depth = win.v_max + 1
        chain_idx = np.full((n_cubes, depth), n_cubes, dtype=int)  # sentinel = zero slot
        for i, (v, m) in enumerate(coords):
            for lvl in range(v + 1):
                chain_idx[i, lvl] = pos[(lvl, m >> (v - lvl))]
        self.chain_idx = chain_idx

        ks = np.arange(win.k_min, win.k_max + 1)
        self.ks = ks
        idxs = [DyadicIndex(v, (m,)) for v, m in coords]
        from .seqspace import _overlap_matrix

        ov = _overlap_matrix(idxs, ks, 1)
        cell = ov.copy()
        for i, (v, m) in enumerate(coords):
            for child in ((v + 1, 2 * m), (v + 1, 2 * m + 1)):
                j = pos.get(child)
                if j is not None:
                    cell[i] -= ov[j]
        np.clip(cell, 0.0, None, out=cell)
        self.cell = cell

        levels = np.array([v for v, _ in coords], dtype=float)
        self._levels_pad = np.append(levels, 0.0)
        self._k_weights = {}

    def _side_norm(self, values: np.ndarray, side: SeqSpaceSide) -> float:
        padded = np.append(values, 0.0)
        terms = padded[self.chain_idx] * 2.0 ** (side.smooth * self._levels_pad[self.chain_idx])
        top = terms.max(axis=1)
        safe = np.where(top > 0, top, 1.0)
        if math.isinf(side.ell):
            g = top
        else:
            with np.errstate(under="ignore"):
                g = top * ((terms / safe[:, None]) ** side.ell).sum(axis=1) ** (1.0 / side.ell)
        gtop = g.max()
        if gtop == 0.0:
            return 0.0
        with np.errstate(under="ignore"):
            spow = ((g / gtop) ** side.inner) @ self.cell
        shells = gtop * spow ** (1.0 / side.inner)
        key = (side.alpha,)
        w = self._k_weights.get(key)
        if w is None:
            w = 2.0 ** (side.alpha * self.ks.astype(float))
            self._k_weights[key] = w
        return lp_norm(w * shells, side.outer)

    def ratio(self, values: np.ndarray) -> float:
        src = self._side_norm(values, self.case.source)
        if src == 0.0:
            return 0.0
        return self._side_norm(values, self.case.target) / src

    def witness_values(self) -> np.ndarray | None:
        """lambda^N seed truncated to the window (None when it does not fit)."""
        if self.win.v_max < 3 or self.win.m_bound < 1:
            return None
        t = self.case.target
        decay = t.smooth - 1.0 / t.inner - t.alpha
        vals = np.zeros(len(self.coords))
        pos = {c: i for i, c in enumerate(self.coords)}
        for v in range(2, self.win.v_max + 1):
            vals[pos[(v, 1)]] = 2.0 ** (-decay * v)
        return vals

    def to_field(self, values: np.ndarray) -> CoeffField:
        top = values.max(initial=0.0)
        keep = {
            (v, (m,)): float(val)
            for (v, m), val in zip(self.coords, values)
            if val > 1e-12 * top
        }
        return CoeffField(keep, 1)


def _run_restart(
    ev: _DenseEvaluator, cfg: SearchConfig, restart: int
) -> Tuple[float, np.ndarray, List[float]]:
    rng = np.random.default_rng([cfg.seed, restart])
    n_cubes = len(ev.coords)
    values = None
    if restart == 0:
        values = ev.witness_values()
    elif restart == 1:
        values = np.ones(n_cubes)
    if values is None or values.max(initial=0.0) == 0.0:
        values = np.zeros(n_cubes)
        count = int(rng.integers(3, 9))
        spots = rng.choice(n_cubes, size=min(count, n_cubes), replace=False)
        values[spots] = np.exp(rng.normal(0.0, 1.0, size=len(spots)))
    values = np.maximum(values, 1e-30 * values.max())

    current = ev.ratio(values)
    best_vals = values.copy()
    best = current
    trace: List[float] = []
    for _ in range(cfg.trials):
        i = int(rng.integers(n_cubes))
        factor = math.exp(rng.normal(0.0, cfg.perturb_scale))
        old = values[i]
        values[i] = old * factor
        cand = ev.ratio(values)
        if cand > current:
            current = cand
            if cand > best:
                best = cand
                best_vals = values.copy()
        else:
            values[i] = old
        trace.append(best)
    return best, best_vals, trace


def worst_ratio_search(case: EmbeddingCase, cfg: SearchConfig) -> SearchResult:
    """Multi-start hill climb maximizing the embedding ratio over the window.

    Moves multiply one lattice coefficient by exp(N(0, perturb_scale)) and
    are accepted only when the ratio improves; homogeneity makes the ratio
    scale-invariant, so no renormalization can change the objective.
    Deterministic for a fixed seed: restart RNG streams are derived from
    (seed, restart) and the reduction keeps the first restart achieving the
    maximal ratio.
    """
    ev = _DenseEvaluator(case, cfg.window)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(
                pool.map(lambda rr: _run_restart(ev, cfg, rr), range(cfg.restarts))
            )
    else:
        results = [_run_restart(ev, cfg, rr) for rr in range(cfg.restarts)]

    trace: List[float] = []
    running = 0.0
    best_ratio = -math.inf
    best_vals = None
    for rest_best, rest_vals, rest_trace in results:
        for t in rest_trace:
            running = max(running, t)
            trace.append(running)
        if rest_best > best_ratio:
            best_ratio = rest_best
            best_vals = rest_vals
    return SearchResult(ev.to_field(best_vals), float(best_ratio), trace)


# ---------------------------------------------------------------------------
# vector-valued maximal probe


def discrete_maximal(f: GridFunction) -> GridFunction:
    """Hardy-Littlewood maximal function over centered balls of dyadic radii.

    Radii run over {h, 2h, 4h, ..., 2R}; a ball of radius rho at x_i contains
    the cells whose centers lie within rho, f is extended by zero outside the
    box, and the normalization is the discrete ball measure, so the scan is
    an exact maximum over the radius set.
    """
    spec = f.spec
    absf = np.abs(f.samples)
    best = np.zeros_like(absf)
    for t in range(spec.level + 1):
        half = 2**t
        size = 2 * half
        if spec.dim == 1:
            kernel = np.ones(size)
            count = float(size)
        else:
            d = np.arange(-half, half) + 0.5
            mask = (d[:, None] ** 2 + d[None, :] ** 2) <= float(half) ** 2
            kernel = mask.astype(float)
            count = float(mask.sum())
        summed = scipy.ndimage.correlate(absf, kernel, mode="constant", cval=0.0)
        np.maximum(best, summed / count, out=best)
    return GridFunction(spec, best)


class MaximalReport(NamedTuple):
    lhs: float
    rhs: float
    realized_constant: float


def maximal_probe(
    family: Sequence[GridFunction],
    hp: HerzParams,
    beta: float,
    win: TruncationWindow,
) -> MaximalReport:
    """Vector-valued maximal inequality, realized on a family of grid functions.

    Computes || (sum_j (M f_j)^beta)^(1/beta) || and the same with f_j in the
    Herz norm given by hp, under the hypotheses 1 < beta < inf, 1 < q < inf,
    -n/q < alpha < n(1 - 1/q).
    """
    if not family:
        raise DataError("maximal probe needs a nonempty family")
    n = family[0].dim
    if not (1.0 < beta < math.inf):
        raise InadmissibleParameterError(f"need 1 < beta < inf, got {beta}")
    if not (1.0 < hp.q < math.inf):
        raise InadmissibleParameterError(f"need 1 < q < inf, got {hp.q}")
    if not (-n / hp.q < hp.alpha < n * (1.0 - 1.0 / hp.q)):
        raise InadmissibleParameterError(
            f"need -n/q < alpha < n(1-1/q), got alpha={hp.alpha}"
        )
    spec = family[0].spec
    if any(g.spec != spec for g in family):
        raise DataError("family members must share one grid")
    m_stack = np.stack([discrete_maximal(g).samples for g in family])
    f_stack = np.stack([np.abs(g.samples) for g in family])
    lhs = herz_norm(GridFunction(spec, _beta_combine(m_stack, beta)), hp, win)
    rhs = herz_norm(GridFunction(spec, _beta_combine(f_stack, beta)), hp, win)
    if rhs == 0:
        raise DegenerateInputError("zero family in maximal probe")
    return MaximalReport(lhs, rhs, lhs / rhs)


# ---------------------------------------------------------------------------
# corollary presets


class PresetCase(NamedTuple):
    label: str
    case: EmbeddingCase


def _case(label, *, alpha1, alpha2, s1, s, q, r, p, beta) -> PresetCase:
    s2 = s1 - 1.0 / s - alpha1 + 1.0 / q + alpha2  # balance, bit-exact
    case = validate_case(
        alpha1=alpha1, alpha2=alpha2, s1=s1, s2=s2, s=s, q=q, r=r, p=p, beta=beta, dim=1
    )
    return PresetCase(label, case)


def corollary_presets() -> List[PresetCase]:
    """Validated instances of every corollary regime, n = 1.

    Labels name the family and the regime.  herz_to_tl cases have s2 = 0 on
    the source (the Herz space as a smoothness-0 space with ell-index 2);
    tl_to_herz cases have s1 = 0, beta = 2 on the target; jawerth_franke
    cases are the legs of the two embedding chains through mixed spaces.
    """
    presets = [
        # target is an unweighted space (alpha1 = 0, p = s)
        _case("embeddings4/q<s", alpha1=0.0, alpha2=0.5, s1=1.0, s=2.0, q=1.0, r=1.0, p=2.0, beta=2.0),
        _case("embeddings4/s<=q", alpha1=0.0, alpha2=0.5, s1=1.0, s=2.0, q=4.0, r=2.0, p=2.0, beta=2.0),
        _case("embeddings4/theta=beta", alpha1=0.0, alpha2=0.25, s1=1.0, s=2.0, q=4.0, r=2.0, p=2.0, beta=2.0),
        # source is an unweighted space (alpha2 = 0, r = q)
        _case("embeddings5/q<s", alpha1=-0.25, alpha2=0.0, s1=0.75, s=2.0, q=1.0, r=1.0, p=2.0, beta=2.0),
        _case("embeddings5/theta=beta", alpha1=0.0, alpha2=0.0, s1=1.0, s=2.0, q=2.0, r=2.0, p=3.0, beta=2.0),
        # Herz space into unweighted space: s2 = 0, source ell-index regime list
        _case("herz_to_tl/1<q<s", alpha1=0.0, alpha2=0.25, s1=-0.5, s=4.0, q=2.0, r=2.0, p=4.0, beta=2.0),
        _case("herz_to_tl/1<s<=q", alpha1=0.0, alpha2=0.5, s1=-0.25, s=2.0, q=4.0, r=2.0, p=2.0, beta=2.0),
        _case("herz_to_tl/theta=2", alpha1=0.0, alpha2=0.25, s1=0.0, s=2.0, q=4.0, r=2.0, p=2.0, beta=2.0),
        # unweighted space into Herz space: s1 = 0, beta = 2
        _case("tl_to_herz/q<s", alpha1=-0.2, alpha2=0.0, s1=0.0, s=3.0, q=1.5, r=1.5, p=2.0, beta=2.0),
        _case("tl_to_herz/1<s<=q", alpha1=-0.4, alpha2=0.0, s1=0.0, s=2.0, q=4.0, r=4.0, p=5.0, beta=2.0),
        _case("tl_to_herz/theta=2", alpha1=-0.25, alpha2=0.0, s1=0.0, s=2.0, q=4.0, r=4.0, p=5.0, beta=2.0),
        # chains through the mixed spaces
        _case("jawerth_franke/chain1_legA", alpha1=0.0, alpha2=0.0, s1=0.5, s=2.0, q=1.0, r=1.0, p=4.0, beta=math.inf),
        _case("jawerth_franke/chain1_legB", alpha1=0.0, alpha2=0.0, s1=0.25, s=4.0, q=2.0, r=4.0, p=4.0, beta=2.0),
        _case("jawerth_franke/chain2_legA", alpha1=0.0, alpha2=0.0, s1=0.25, s=4.0, q=2.0, r=2.0, p=2.0, beta=2.0),
        _case("jawerth_franke/chain2_legB", alpha1=0.0, alpha2=0.0, s1=0.25, s=4.0, q=4.0, r=2.0, p=4.0, beta=2.0),
    ]
    return presets
