"""Uniformly sampled functions on a centered box and their Herz norms.

A GridFunction holds 2^L samples per axis on [-R, R)^n at the lattice points
x_i = -R + i*h, h = 2R/2^L; the sample at x_i stands for the function's value
on the half-open cell [x_i, x_i + h)^n.  With this convention dyadic cubes
are exact unions of cells (for dyadic R), the origin is a lattice point, and
indicator functions of dyadic boxes are represented exactly.

Quadrature is one point per cell, with cells that straddle an annulus
boundary split exactly using the overlap geometry; annulus boundaries are
the only discontinuity the Herz norm itself introduces.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DataError, DimensionError, ResolutionError, WindowError
from .geometry import (
    CoeffField,
    TruncationWindow,
    annulus_below_radius,
    annulus_of_radius,
    rect_annulus_overlap,
)
from .seqspace import HerzParams
from .sums import lp_norm

__all__ = ["GridFunction", "GridSpec", "herz_norm", "coeff_field_from_grid"]


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a sample grid: dimension, resolution exponent, half extent."""

    dim: int
    level: int
    half_extent: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DimensionError(f"unsupported dimension {self.dim}")
        if self.level < 1:
            raise ResolutionError("resolution exponent must be >= 1")
        if not (self.half_extent > 0):
            raise DataError("half_extent must be positive")

    @property
    def n_axis(self) -> int:
        return 2**self.level

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.n_axis

    def axis(self) -> np.ndarray:
        return -self.half_extent + self.spacing * np.arange(self.n_axis)

    def shape(self):
        return (self.n_axis,) * self.dim


class GridFunction:
    """Real samples of a function on a centered box."""

    __slots__ = ("spec", "samples")

    def __init__(self, spec: GridSpec, samples: np.ndarray):
        samples = np.asarray(samples, dtype=float)
        if samples.shape != spec.shape():
            raise DataError(f"sample shape {samples.shape} does not match grid {spec.shape()}")
        if not np.all(np.isfinite(samples)):
            raise DataError("grid samples must be finite")
        self.spec = spec
        self.samples = samples

    @property
    def dim(self) -> int:
        return self.spec.dim

    @classmethod
    def from_callable(cls, fn: Callable, spec: GridSpec) -> "GridFunction":
        ax = spec.axis()
        if spec.dim == 1:
            vals = fn(ax)
        else:
            xx, yy = np.meshgrid(ax, ax, indexing="ij")
            vals = fn(xx, yy)
        return cls(spec, np.asarray(vals, dtype=float))

    def scaled(self, c: float) -> "GridFunction":
        return GridFunction(self.spec, c * self.samples)

    def boundary_fraction(self) -> float:
        """max |f| on the outermost cell ring relative to the global max."""
        top = float(np.abs(self.samples).max(initial=0.0))
        if top == 0.0:
            return 0.0
        s = np.abs(self.samples)
        if self.dim == 1:
            edge = max(s[0], s[-1])
        else:
            edge = max(s[0, :].max(), s[-1, :].max(), s[:, 0].max(), s[:, -1].max())
        return float(edge) / top

    # -- container format: one JSON header line, then little-endian float64 payload.

    def to_file(self, path) -> None:
        header = {
            "dim": self.spec.dim,
            "L": self.spec.level,
            "half_extent": self.spec.half_extent,
        }
        with open(path, "wb") as fh:
            fh.write((json.dumps(header) + "\n").encode("ascii"))
            fh.write(self.samples.astype("<f8").tobytes(order="C"))

    @classmethod
    def from_file(cls, path) -> "GridFunction":
        try:
            with open(path, "rb") as fh:
                header_line = fh.readline()
                payload = fh.read()
            header = json.loads(header_line.decode("ascii"))
            spec = GridSpec(int(header["dim"]), int(header["L"]), float(header["half_extent"]))
            samples = np.frombuffer(payload, dtype="<f8")
        except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            raise DataError(f"malformed grid file: {exc}") from exc
        if samples.size != spec.n_axis**spec.dim:
            raise DataError("grid payload size does not match header")
        return cls(spec, samples.reshape(spec.shape()))


def _cell_radial_ranges(spec: GridSpec):
    """(r_lo, r_hi) per cell over the closed cell, flattened in C order."""
    ax = spec.axis()
    h = spec.spacing
    lo1 = ax
    hi1 = ax + h
    near1 = np.where((lo1 <= 0.0) & (hi1 >= 0.0), 0.0, np.minimum(np.abs(lo1), np.abs(hi1)))
    far1 = np.maximum(np.abs(lo1), np.abs(hi1))
    if spec.dim == 1:
        return near1, far1
    near = np.sqrt(near1[:, None] ** 2 + near1[None, :] ** 2).ravel()
    far = np.sqrt(far1[:, None] ** 2 + far1[None, :] ** 2).ravel()
    return near, far


def _cell_bounds(spec: GridSpec, flat_index: int):
    ax = spec.axis()
    h = spec.spacing
    if spec.dim == 1:
        a = ax[flat_index]
        return (a,), (a + h,)
    n = spec.n_axis
    i, j = divmod(flat_index, n)
    return (ax[i], ax[j]), (ax[i] + h, ax[j] + h)


def herz_norm(f: GridFunction, hp: HerzParams, win: TruncationWindow) -> float:
    """Herz norm of a sampled function, one-point-per-cell quadrature.

    Cells interior to an annulus contribute |f|^q * h^n to that shell; cells
    cut by an annulus boundary are split exactly.  The shell range is capped
    by the window and by the tail rule for the cells touching the origin.
    """
    spec = f.spec
    n = spec.dim
    hp.require_admissible(n)

    r_domain = spec.half_extent * math.sqrt(n)
    k_hi = min(win.k_max, annulus_below_radius(r_domain))
    if 2.0**win.k_max > r_domain:
        warnings.warn(
            "window k_max annulus extends beyond the sampled box; outer shells are truncated",
            stacklevel=2,
        )
    tail_k = math.floor(math.log2(win.tail_tol) / hp.weight_decay(n))
    k_lo = max(win.k_min, tail_k)
    if k_lo > k_hi:
        return 0.0
    ks = np.arange(k_lo, k_hi + 1)

    vals = np.abs(f.samples).ravel()
    top = float(vals.max(initial=0.0))
    if top == 0.0:
        return 0.0
    with np.errstate(under="ignore"):
        powq = (vals / top) ** hp.q
    r_lo, r_hi = _cell_radial_ranges(spec)

    # cells wholly inside one annulus can be bulk-binned
    with np.errstate(divide="ignore"):
        k_of_lo = np.where(r_lo > 0, np.floor(np.log2(np.maximum(r_lo, 1e-300))) + 1, -(10**9))
        k_of_hi = np.ceil(np.log2(r_hi))
    bulk = (r_lo > 0) & (k_of_lo == k_of_hi) & (k_of_lo >= k_lo) & (k_of_lo <= k_hi)
    h_n = spec.spacing**n

    shell_pow = np.zeros(len(ks))
    idx = (k_of_lo[bulk] - k_lo).astype(int)
    np.add.at(shell_pow, idx, powq[bulk] * h_n)

    out_of_range = (r_lo > 0) & (k_of_lo > k_hi)
    rest = np.nonzero(~bulk & ~out_of_range)[0]
    for ci in rest:
        lo_b, hi_b = _cell_bounds(spec, ci)
        k_start = annulus_of_radius(r_lo[ci]) if r_lo[ci] > 0 else k_lo
        k_end = annulus_below_radius(r_hi[ci])
        for k in range(max(k_start, k_lo), min(k_end, k_hi) + 1):
            ov = rect_annulus_overlap(lo_b, hi_b, k, n)
            if ov > 0.0:
                shell_pow[k - k_lo] += powq[ci] * ov

    shells = top * shell_pow ** (1.0 / hp.q)
    outer = 2.0 ** (hp.alpha * ks.astype(float)) * shells
    return lp_norm(outer, hp.p)


def coeff_field_from_grid(f: GridFunction, v: int) -> CoeffField:
    """Level-v cube averages of |f| over the cubes lying inside the box."""
    spec = f.spec
    if v < 0:
        raise ResolutionError("level must be non-negative")
    if v > spec.level - 2:
        raise ResolutionError(f"level {v} too fine for grid with L={spec.level}")
    side = 2.0**-v
    if side < spec.spacing:
        raise ResolutionError("cube side below grid spacing")
    R = spec.half_extent
    m_lo = math.ceil(-R / side)
    m_hi = math.floor(R / side) - 1  # cube [side*m, side*(m+1)) must fit in [-R, R)
    while side * m_lo < -R:
        m_lo += 1
    while side * (m_hi + 1) > R:
        m_hi -= 1
    if m_hi < m_lo:
        raise ResolutionError("no level-v cube fits inside the box")

    ax = spec.axis()
    h = spec.spacing
    m_range = np.arange(m_lo, m_hi + 1)

    # per-axis overlap weights of every cell with every cube interval
    lo_edges = ax[None, :]
    hi_edges = ax[None, :] + h
    cube_lo = (side * m_range)[:, None]
    cube_hi = cube_lo + side
    w = np.clip(np.minimum(hi_edges, cube_hi) - np.maximum(lo_edges, cube_lo), 0.0, None)

    absf = np.abs(f.samples)
    entries = {}
    if spec.dim == 1:
        sums = w @ absf
        for m, val in zip(m_range, sums / side):
            entries[(v, (int(m),))] = float(val)
    else:
        partial = w @ absf  # (cubes_x, cells_y)
        sums = partial @ w.T  # (cubes_x, cubes_y)
        vol = side * side
        for i, mi in enumerate(m_range):
            for j, mj in enumerate(m_range):
                entries[(v, (int(mi), int(mj)))] = float(sums[i, j] / vol)
    return CoeffField(entries, spec.dim)
