"""Confinement potentials: an infinite wall at x = 0 plus a stack of
rectangular barriers, and the cut harmonic oscillator they can approximate.

All quantities are in natural units (hbar = m = 1).  The potential is
implicitly +infinity for x <= 0 and exactly 0 beyond the last segment.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PotentialSpec",
    "CutHarmonicSpec",
    "single_barrier",
    "discretize_cut_harmonic",
    "eval_potential",
]


@dataclass(frozen=True)
class PotentialSpec:
    """Ordered, contiguous constant-potential segments starting at x = 0.

    Each segment is a tuple ``(x_start, x_end, v)``.  Segments must tile
    [0, x_end] without gaps or overlaps, have positive width and v >= 0.
    """

    segments: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if len(self.segments) == 0:
            raise ValueError("potential needs at least one segment")
        prev_end = 0.0
        for i, (x0, x1, v) in enumerate(self.segments):
            if x0 != prev_end:
                raise ValueError(
                    f"segment {i} starts at {x0}, expected {prev_end}: "
                    "segments must be contiguous from x = 0"
                )
            if not x1 > x0:
                raise ValueError(f"segment {i} has nonpositive width ({x0}, {x1})")
            if v < 0:
                raise ValueError(f"segment {i} has negative height v={v}")
            prev_end = x1

    @property
    def x_end(self) -> float:
        """Right edge of the last segment; v = 0 beyond it."""
        return self.segments[-1][1]

    @property
    def v_max(self) -> float:
        return max(seg[2] for seg in self.segments)


@dataclass(frozen=True)
class CutHarmonicSpec:
    """Half a harmonic barrier: v(x) = alpha x^2 / 2 on [0, beta/2], else 0."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")

    @property
    def x_end(self) -> float:
        return 0.5 * self.beta

    @property
    def v_max(self) -> float:
        return 0.5 * self.alpha * (0.5 * self.beta) ** 2


def single_barrier(a: float, b: float, v0: float) -> PotentialSpec:
    """Free stretch (0, a) followed by a rectangular barrier of height v0 on [a, b]."""
    if not (0 < a < b):
        raise ValueError(f"need 0 < a < b, got a={a}, b={b}")
    if not v0 > 0:
        raise ValueError(f"barrier height must be > 0, got v0={v0}")
    return PotentialSpec(((0.0, a, 0.0), (a, b, v0)))


def discretize_cut_harmonic(spec: CutHarmonicSpec, n_bars: int) -> PotentialSpec:
    """Approximate the cut harmonic barrier by n_bars equal-width square bars.

    Bar heights sample alpha x^2 / 2 at each bar's midpoint, so they are
    nondecreasing and converge linearly to the smooth profile as n_bars grows.
    """
    if n_bars < 1:
        raise ValueError(f"n_bars must be >= 1, got {n_bars}")
    half = 0.5 * spec.beta
    edges = [i * half / n_bars for i in range(n_bars + 1)]
    segs = []
    for i in range(n_bars):
        mid = 0.5 * (edges[i] + edges[i + 1])
        segs.append((edges[i], edges[i + 1], 0.5 * spec.alpha * mid * mid))
    return PotentialSpec(tuple(segs))


def eval_potential(spec, x):
    """Potential value at x >= 0 (scalar or array).

    Segment boundaries belong to the right segment, except the outer edge of
    the stack which still belongs to the stack; everything beyond is 0.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise ValueError("x must be >= 0 (the wall sits at x = 0)")
    if isinstance(spec, CutHarmonicSpec):
        v = np.where(arr <= spec.x_end, 0.5 * spec.alpha * arr * arr, 0.0)
    elif isinstance(spec, PotentialSpec):
        ends = np.array([seg[1] for seg in spec.segments])
        heights = np.append([seg[2] for seg in spec.segments], 0.0)
        idx = np.searchsorted(ends, arr, side="right")
        idx = np.where(arr == spec.x_end, len(ends) - 1, idx)
        v = heights[idx]
    else:
        raise TypeError(f"unsupported potential type {type(spec).__name__}")
    if np.isscalar(x) or arr.ndim == 0:
        return float(v)
    return v
