"""Dyadic-cube and annulus geometry.

Coordinates follow the usual dyadic conventions: the cube Q_{v,m} is the
half-open box prod_i [2^-v m_i, 2^-v (m_i+1)) at level v >= 0, and the
annulus C_k is the shell {x : 2^(k-1) <= |x| < 2^k}, k in Z.  Annuli tile
R^n minus the origin, cubes at a fixed level tile R^n.

Everything here is exact up to float rounding: 1-d overlaps are interval
arithmetic, 2-d overlaps reduce to closed-form areas of a disk clipped to a
half-plane pair.  Dimensions n in {1, 2} are supported.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Iterator, Mapping, Tuple

from .errors import (
    DataError,
    DimensionError,
    EmptySupportError,
    WindowError,
)

__all__ = [
    "DyadicIndex",
    "AnnulusIndex",
    "TruncationWindow",
    "CoeffField",
    "cube_annulus_overlap",
    "rect_annulus_overlap",
    "annulus_measure",
    "annulus_of_radius",
    "annulus_below_radius",
    "support_annulus_range",
]

# Annuli are indexed by a bare integer k; C_k = {2^(k-1) <= |x| < 2^k}.
AnnulusIndex = int

_SUPPORTED_DIMS = (1, 2)


def _check_dim(dim: int) -> None:
    if dim not in _SUPPORTED_DIMS:
        raise DimensionError(f"unsupported dimension {dim}; expected one of {_SUPPORTED_DIMS}")


@dataclass(frozen=True, order=True)
class DyadicIndex:
    """Level/position pair (v, m) naming the cube Q_{v,m}."""

    v: int
    m: Tuple[int, ...]

    def __post_init__(self):
        if self.v < 0:
            raise DataError(f"dyadic level must be >= 0, got {self.v}")
        if not isinstance(self.m, tuple):
            object.__setattr__(self, "m", tuple(self.m))
        _check_dim(len(self.m))

    @property
    def dim(self) -> int:
        return len(self.m)

    @property
    def side(self) -> float:
        return 2.0 ** (-self.v)

    @property
    def measure(self) -> float:
        return 2.0 ** (-self.v * self.dim)

    def bounds(self) -> Tuple[Tuple[float, float], ...]:
        """Per-axis half-open interval [lo, hi) of the cube."""
        s = self.side
        return tuple((s * mi, s * (mi + 1)) for mi in self.m)

    def touches_origin(self) -> bool:
        """True when the closed cube contains 0 (so it meets every small annulus)."""
        return all(-1 <= mi <= 0 for mi in self.m)

    def radial_range(self) -> Tuple[float, float]:
        """(min |x|, max |x|) over the closed cube."""
        lo_sq = 0.0
        hi_sq = 0.0
        for lo, hi in self.bounds():
            near = 0.0 if lo <= 0.0 <= hi else min(abs(lo), abs(hi))
            far = max(abs(lo), abs(hi))
            lo_sq += near * near
            hi_sq += far * far
        return math.sqrt(lo_sq), math.sqrt(hi_sq)

    def ancestor(self, level: int) -> "DyadicIndex":
        """The level `level` cube containing this one (level <= v)."""
        if level > self.v:
            raise DataError("ancestor level must not exceed the cube level")
        shift = self.v - level
        return DyadicIndex(level, tuple(mi >> shift for mi in self.m))


def annulus_measure(k: int, dim: int) -> float:
    """Lebesgue measure of C_k in dimension dim."""
    _check_dim(dim)
    if dim == 1:
        return 2.0**k
    return 3.0 * math.pi * 4.0 ** (k - 1)


def annulus_of_radius(r: float) -> int:
    """The k with 2^(k-1) <= r < 2^k, for r > 0."""
    if r <= 0:
        raise DataError("radius must be positive")
    k = math.floor(math.log2(r)) + 1
    while r < 2.0 ** (k - 1):
        k -= 1
    while r >= 2.0**k:
        k += 1
    return k


def annulus_below_radius(r: float) -> int:
    """The k with 2^(k-1) < r <= 2^k: the top annulus met by radii below r."""
    if r <= 0:
        raise DataError("radius must be positive")
    k = math.ceil(math.log2(r))
    while 2.0 ** (k - 1) >= r:
        k -= 1
    while 2.0**k < r:
        k += 1
    return k


def _interval_overlap(a: float, b: float, c: float, d: float) -> float:
    return max(0.0, min(b, d) - max(a, c))


def _circle_halfplane_area(radius: float, x_cut: float, y_cut: float) -> float:
    """Area of {x <= x_cut, y <= y_cut} intersected with the disk |x| <= radius."""
    r = radius
    if r <= 0.0 or x_cut <= -r or y_cut <= -r:
        return 0.0
    rsq = r * r

    def anti(x: float) -> float:
        # antiderivative of sqrt(r^2 - x^2)
        x = min(max(x, -r), r)
        return 0.5 * (x * math.sqrt(max(rsq - x * x, 0.0)) + rsq * math.asin(x / r))

    b = min(x_cut, r)
    base = anti(b) - anti(-r)
    if y_cut >= r:
        return 2.0 * base
    x_y = math.sqrt(max(rsq - y_cut * y_cut, 0.0))
    inner_len = max(0.0, min(b, x_y) + x_y)
    # on |x| <= x_y the chord min(y_cut, g) equals y_cut, outside it equals +-g
    outside = anti(min(b, -x_y)) - anti(-r)
    if b > x_y:
        outside += anti(b) - anti(x_y)
    clip_part = y_cut * inner_len + math.copysign(outside, y_cut) if y_cut != 0.0 else 0.0
    return max(0.0, clip_part + base)


def _rect_disk_area(x0: float, x1: float, y0: float, y1: float, radius: float) -> float:
    """Area of [x0,x1] x [y0,y1] intersected with the centered disk of given radius."""
    if radius <= 0.0 or x0 >= x1 or y0 >= y1:
        return 0.0
    a = (
        _circle_halfplane_area(radius, x1, y1)
        - _circle_halfplane_area(radius, x0, y1)
        - _circle_halfplane_area(radius, x1, y0)
        + _circle_halfplane_area(radius, x0, y0)
    )
    return max(0.0, a)


def rect_annulus_overlap(
    lo: Tuple[float, ...], hi: Tuple[float, ...], k: int, dim: int
) -> float:
    """Measure of an axis-aligned box intersected with C_k (any box, any dim in {1,2})."""
    _check_dim(dim)
    r_out = 2.0**k
    r_in = 2.0 ** (k - 1)
    if dim == 1:
        a, b = lo[0], hi[0]
        return _interval_overlap(a, b, r_in, r_out) + _interval_overlap(a, b, -r_out, -r_in)
    return _rect_disk_area(lo[0], hi[0], lo[1], hi[1], r_out) - _rect_disk_area(
        lo[0], hi[0], lo[1], hi[1], r_in
    )


@lru_cache(maxsize=200_000)
def _unit_cube_annulus_overlap_2d(m1: int, m2: int, k: int) -> float:
    return rect_annulus_overlap((m1, m2), (m1 + 1.0, m2 + 1.0), k, 2)


def cube_annulus_overlap(idx: DyadicIndex, k: int, dim: int | None = None) -> float:
    """n-dimensional Lebesgue measure of Q_{v,m} intersected with C_k.

    Closed form in both supported dimensions; results are cached on the
    level-0 reduction Q_{v,m} ^ C_k = 2^{-vn} (Q_{0,m} ^ C_{k+v}).
    """
    if dim is not None and dim != idx.dim:
        raise DimensionError(f"index has dim {idx.dim}, caller expected {dim}")
    n = idx.dim
    if n == 1:
        bounds = idx.bounds()[0]
        return rect_annulus_overlap((bounds[0],), (bounds[1],), k, 1)
    # canonicalize: reflect to the non-negative quadrant, sort axes
    mm = tuple(sorted(mi if mi >= 0 else -1 - mi for mi in idx.m))
    return 4.0 ** (-idx.v) * _unit_cube_annulus_overlap_2d(mm[0], mm[1], k + idx.v)


@dataclass(frozen=True)
class TruncationWindow:
    """Finite realization of the doubly infinite sums over levels and annuli.

    v_max caps dyadic levels, m_bound caps |m_i| per axis, [k_min, k_max]
    caps the annulus range, and tail_tol controls where the geometric tail
    of origin-touching cubes is cut (see support_annulus_range).
    """

    v_max: int
    m_bound: int
    k_min: int
    k_max: int
    tail_tol: float = 1e-12

    def __post_init__(self):
        if self.v_max < 0 or self.m_bound < 0:
            raise WindowError("v_max and m_bound must be non-negative")
        if self.k_min >= self.k_max:
            raise WindowError("window requires k_min < k_max")
        if not (0.0 < self.tail_tol < 1.0):
            raise WindowError("tail_tol must lie in (0, 1)")

    def validate_for_dim(self, dim: int) -> None:
        _check_dim(dim)
        reach = (self.m_bound + 1) * math.sqrt(dim)
        if reach > 2.0**self.k_max:
            raise WindowError(
                f"window cubes reach radius {reach} outside the k_max={self.k_max} ball"
            )

    def contains(self, idx: DyadicIndex) -> bool:
        return idx.v <= self.v_max and all(abs(mi) <= self.m_bound for mi in idx.m)

    @classmethod
    def covering(
        cls,
        v_max: int,
        m_bound: int,
        dim: int = 1,
        *,
        tail_tol: float = 1e-12,
        k_min: int | None = None,
    ) -> "TruncationWindow":
        """Window whose k_max ball contains every cube it admits."""
        _check_dim(dim)
        reach = (m_bound + 1) * math.sqrt(dim)
        k_max = annulus_of_radius(reach)
        if k_min is None:
            k_min = math.floor(math.log2(tail_tol)) - 1
        return cls(v_max=v_max, m_bound=m_bound, k_min=k_min, k_max=k_max, tail_tol=tail_tol)


class CoeffField:
    """Finite sparse map DyadicIndex -> real coefficient.

    Absent indices are zero.  Values must be finite; iteration is always in
    sorted (v, m) order so downstream sums are reproducible.
    """

    __slots__ = ("_entries", "_dim")

    def __init__(self, entries: Mapping, dim: int):
        _check_dim(dim)
        store: Dict[DyadicIndex, float] = {}
        for key, val in entries.items():
            idx = key if isinstance(key, DyadicIndex) else DyadicIndex(key[0], tuple(key[1]))
            if idx.dim != dim:
                raise DimensionError(f"entry {idx} does not match field dim {dim}")
            fval = float(val)
            if not math.isfinite(fval):
                raise DataError(f"non-finite coefficient at {idx}")
            store[idx] = fval
        self._entries = store
        self._dim = dim

    @property
    def dim(self) -> int:
        return self._dim

    def __len__(self) -> int:
        return len(self._entries)

    def __bool__(self) -> bool:
        return bool(self._entries)

    def __getitem__(self, idx: DyadicIndex) -> float:
        return self._entries.get(idx, 0.0)

    def items(self) -> Iterator[Tuple[DyadicIndex, float]]:
        return iter(sorted(self._entries.items()))

    def indices(self) -> Iterator[DyadicIndex]:
        return iter(sorted(self._entries))

    def levels(self) -> Tuple[int, ...]:
        return tuple(sorted({idx.v for idx in self._entries}))

    def max_abs(self) -> float:
        return max((abs(v) for v in self._entries.values()), default=0.0)

    def scaled(self, c: float) -> "CoeffField":
        return CoeffField({idx: c * v for idx, v in self._entries.items()}, self._dim)

    def plus(self, other: "CoeffField") -> "CoeffField":
        if other.dim != self._dim:
            raise DimensionError("cannot add fields of different dimension")
        merged = dict(self._entries)
        for idx, v in other._entries.items():
            merged[idx] = merged.get(idx, 0.0) + v
        return CoeffField(merged, self._dim)

    def fits(self, window: TruncationWindow) -> bool:
        return all(window.contains(idx) for idx in self._entries)

    # -- JSON Lines interchange: header {"dim": n}, then one record per entry.

    def to_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"dim": self._dim}) + "\n")
            for idx, val in self.items():
                fh.write(json.dumps({"v": idx.v, "m": list(idx.m), "val": val}) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "CoeffField":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = [ln for ln in (s.strip() for s in fh) if ln]
        except OSError as exc:
            raise DataError(f"cannot read coefficient file: {exc}") from exc
        if not lines:
            raise DataError("empty coefficient file")
        try:
            header = json.loads(lines[0])
            dim = int(header["dim"])
            entries = {}
            for ln in lines[1:]:
                rec = json.loads(ln)
                entries[(int(rec["v"]), tuple(int(x) for x in rec["m"]))] = float(rec["val"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed coefficient record: {exc}") from exc
        return cls(entries, dim)

    @classmethod
    def from_pairs(cls, pairs: Iterable, dim: int) -> "CoeffField":
        return cls(dict(pairs), dim)


def support_annulus_range(
    field: CoeffField, *, tail_tol: float, decay: float | None = None
) -> Tuple[int, int]:
    """Minimal annulus range [k_lo, k_hi] carrying the field's mass.

    Outside the range every support cube has zero overlap with C_k, except
    cubes touching the origin, which meet every annulus as k -> -inf.  For
    those, k_lo is cut where the geometric tail 2^(k*decay) drops below
    tail_tol; decay is the Herz weight exponent alpha + n/q and must be
    positive (guaranteed by alpha > -n/q).
    """
    if not field:
        raise EmptySupportError("support_annulus_range needs a nonempty field")
    k_lo = None
    k_hi = None
    needs_tail = False
    for idx in field.indices():
        r_min, r_max = idx.radial_range()
        kh = annulus_below_radius(r_max)
        k_hi = kh if k_hi is None else max(k_hi, kh)
        if idx.touches_origin():
            needs_tail = True
        else:
            kl = annulus_of_radius(r_min)
            k_lo = kl if k_lo is None else min(k_lo, kl)
    if needs_tail:
        if decay is None or decay <= 0.0:
            raise DataError("origin-touching support needs a positive tail decay exponent")
        tail_k = math.floor(math.log2(tail_tol) / decay)
        k_lo = tail_k if k_lo is None else min(k_lo, tail_k)
    return k_lo, k_hi
