"""Stationary scattering states of the wall + barrier-stack potential.

Solves  -psi''/2 + v psi = E psi  region by region.  Inside a region of
constant v the general solution is written in the value/derivative basis
anchored at the region's left edge,

    psi(x_left + xi) = p * u1(xi) + q * u2(xi),
    u1 = cos(k xi),  u2 = sin(k xi)/k,       k^2 = 2 (E - v),

so (p, q) = (psi, psi') at the left edge and crossing an interface is a
2x2 map.  Both u1 and u2 are entire functions of k^2, which makes the
propagation smooth through E = v (where the basis degenerates to {1, xi})
and through the oscillatory/evanescent switch, with no branch bookkeeping.

The wall condition psi(0) = 0 fixes the state up to scale.  The scale
convention is psi'(0) = A sqrt(2E), i.e. the first region carries
A sin(k1 x) whenever it is free, matching the usual normalization of the
single-barrier closed forms and keeping the spectral weight finite and
smooth across bar-height thresholds in multi-bar stacks.
"""

import math
from dataclasses import dataclass

import numpy as np

from .potential import PotentialSpec

__all__ = [
    "DegenerateEnergyError",
    "Region",
    "StationaryState",
    "solve_stationary",
    "solve_with_initial",
    "closed_form_single_barrier",
    "spectral_weight",
    "eval_state",
    "eval_state_derivative",
    "interface_residuals",
    "tail_coefficients",
    "region_exponential_coefficients",
    "export_state_csv",
]

# A region counts as degenerate (linear basis {1, xi}) when |2(E - v)| is
# below this; chosen so the sinc-type formulas stay accurate right up to it.
DEGENERACY_THRESHOLD = 1e-12

# Rescale the propagated (psi, psi') when it grows beyond this, folding the
# factor into the overall amplitude, so very thick/high stacks cannot overflow.
_RESCALE_LIMIT = 1e100


class DegenerateEnergyError(ValueError):
    """Raised where a closed-form expression divides by a vanishing wavenumber."""


@dataclass(frozen=True)
class Region:
    """One constant-potential stretch with the local solution attached.

    k is sqrt(2(E - v)) as a complex number (positive real when E > v,
    positive imaginary when E < v).  p and q are psi and dpsi/dx at x_left.
    """

    x_left: float
    x_right: float  # math.inf on the tail
    v: float
    k: complex
    p: complex
    q: complex


def _k2(energy: float, v: float) -> float:
    return 2.0 * (energy - v)


def _wavenumber(energy: float, v: float) -> complex:
    return complex(np.sqrt(complex(_k2(energy, v), 0.0)))


def _cos_sinc(k2: float, xi):
    """(cos(k xi), sin(k xi)/k) evaluated stably from the real k^2.

    xi may be a scalar or an array.  For k2 ~ 0 this limits to (1, xi).
    """
    if k2 > DEGENERACY_THRESHOLD:
        k = math.sqrt(k2)
        return np.cos(k * xi), np.sin(k * xi) / k
    if k2 < -DEGENERACY_THRESHOLD:
        kappa = math.sqrt(-k2)
        return np.cosh(kappa * xi), np.sinh(kappa * xi) / kappa
    one = np.ones_like(np.asarray(xi, dtype=float))
    return one, xi * one


@dataclass(frozen=True)
class StationaryState:
    """Piecewise solution at fixed energy, vanishing at the wall."""

    energy: float
    regions: tuple[Region, ...]
    amplitude: float  # overall scale A (1 unless an overflow rescale fired)

    @property
    def tail(self) -> Region:
        return self.regions[-1]


def _regions_of(pot: PotentialSpec):
    """Segment list plus the implicit free tail."""
    segs = [(x0, x1, v) for (x0, x1, v) in pot.segments]
    segs.append((pot.x_end, math.inf, 0.0))
    return segs


def solve_with_initial(pot: PotentialSpec, energy: float,
                       psi0: complex, dpsi0: complex) -> StationaryState:
    """Propagate arbitrary Cauchy data (psi, psi')(0) through the stack.

    The physical wall states come from solve_stationary; this entry point
    exists for fundamental-system diagnostics (Wronskian checks and the like).
    """
    if energy < 0:
        raise ValueError(f"energy must be >= 0, got {energy}")
    p, q = complex(psi0), complex(dpsi0)
    amplitude = 1.0
    regions = []
    for (x0, x1, v) in _regions_of(pot):
        k2 = _k2(energy, v)
        regions.append(Region(x0, x1, v, _wavenumber(energy, v), p, q))
        if math.isinf(x1):
            break
        width = x1 - x0
        c, s = _cos_sinc(k2, width)
        p, q = c * p + s * q, -k2 * s * p + c * q
        m = max(abs(p), abs(q))
        if not math.isfinite(m):
            raise ValueError(
                f"stationary solve overflowed in segment ending at x={x1} "
                f"(E={energy}, v={v}); the barrier is too opaque for doubles"
            )
        if m > _RESCALE_LIMIT:
            p /= m
            q /= m
            amplitude /= m
            regions = [
                Region(r.x_left, r.x_right, r.v, r.k, r.p / m, r.q / m)
                for r in regions
            ]
    return StationaryState(energy, tuple(regions), amplitude)


def solve_stationary(pot: PotentialSpec, energy: float) -> StationaryState:
    """Wall-anchored scattering state at the given continuum energy.

    psi(0) = 0 and psi'(0) = A k1 with A = 1, k1 = sqrt(2E); at E = 0 the
    slope is A itself (the k1 -> 0 limit of the basis, not of the state).
    Continuity of value and derivative at every interface holds by
    construction of the propagation.
    """
    if energy < 0:
        raise ValueError(f"energy must be >= 0, got {energy}")
    k2_free = 2.0 * energy
    slope = math.sqrt(k2_free) if k2_free > DEGENERACY_THRESHOLD else 1.0
    return solve_with_initial(pot, energy, 0.0, slope)


def _region_index(state: StationaryState, x):
    lefts = np.array([r.x_left for r in state.regions])
    idx = np.searchsorted(lefts, x, side="right") - 1
    return np.clip(idx, 0, len(state.regions) - 1)


def eval_state(state: StationaryState, x):
    """psi(x) for scalar or array x >= 0."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise ValueError("x must be >= 0")
    out = np.zeros(arr.shape, dtype=complex)
    idx = _region_index(state, arr)
    for i in np.unique(idx):
        r = state.regions[i]
        sel = idx == i
        xi = arr[sel] - r.x_left
        c, s = _cos_sinc(_k2(state.energy, r.v), xi)
        out[sel] = r.p * c + r.q * s
    if np.isscalar(x) or arr.ndim == 0:
        return complex(out)
    return out


def eval_state_derivative(state: StationaryState, x):
    """dpsi/dx at scalar or array x >= 0."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise ValueError("x must be >= 0")
    out = np.zeros(arr.shape, dtype=complex)
    idx = _region_index(state, arr)
    for i in np.unique(idx):
        r = state.regions[i]
        sel = idx == i
        xi = arr[sel] - r.x_left
        k2 = _k2(state.energy, r.v)
        c, s = _cos_sinc(k2, xi)
        out[sel] = -k2 * s * r.p + c * r.q
    if np.isscalar(x) or arr.ndim == 0:
        return complex(out)
    return out


def interface_residuals(state: StationaryState):
    """Continuity mismatch (value, derivative) at each interior interface.

    Scaled by max(1, |psi|, |psi'|) there; zero up to round-off for states
    produced by the solver, kept as an explicit diagnostic.
    """
    res = []
    for left, right in zip(state.regions[:-1], state.regions[1:]):
        width = left.x_right - left.x_left
        k2 = _k2(state.energy, left.v)
        c, s = _cos_sinc(k2, width)
        pl = left.p * c + left.q * s
        ql = -k2 * s * left.p + c * left.q
        scale = max(1.0, abs(pl), abs(ql))
        res.append((abs(pl - right.p) / scale, abs(ql - right.q) / scale))
    return res


def tail_coefficients(state: StationaryState) -> tuple[complex, complex]:
    """(C1, C2) of the free tail written as C1 cos(k1 x) + C2 sin(k1 x)."""
    k2 = 2.0 * state.energy
    if k2 <= DEGENERACY_THRESHOLD:
        raise DegenerateEnergyError(
            "zero-energy tail has no oscillatory cos/sin basis"
        )
    k1 = math.sqrt(k2)
    r = state.tail
    cn, sn = math.cos(k1 * r.x_left), math.sin(k1 * r.x_left)
    c1 = r.p * cn - (r.q / k1) * sn
    c2 = r.p * sn + (r.q / k1) * cn
    return c1, c2


def region_exponential_coefficients(state: StationaryState, i: int) -> tuple[complex, complex]:
    """(B1, B2) of region i written as B1 e^{kappa x} + B2 e^{-kappa x},
    with kappa = sqrt(-2(E - v)) (real when the region is evanescent)."""
    r = state.regions[i]
    k2 = _k2(state.energy, r.v)
    if abs(k2) <= DEGENERACY_THRESHOLD:
        raise DegenerateEnergyError(
            f"region {i} is degenerate (E = v); its basis is linear, not exponential"
        )
    kappa = complex(np.sqrt(complex(-k2, 0.0)))
    b1 = 0.5 * (r.p + r.q / kappa) * np.exp(-kappa * r.x_left)
    b2 = 0.5 * (r.p - r.q / kappa) * np.exp(kappa * r.x_left)
    return complex(b1), complex(b2)


def spectral_weight(state: StationaryState) -> float:
    """Weight A^2 / (|C1|^2 + |C2|^2) of the state in the decay superposition.

    Peaks where the tail amplitude is smallest relative to the interior,
    i.e. at the quasi-bound resonance.  At E = 0 the continuous limit
    A^2 / |psi'_tail|^2 is used (the tail basis itself degenerates there).
    """
    if 2.0 * state.energy <= DEGENERACY_THRESHOLD:
        denom = abs(state.tail.q) ** 2
        if denom == 0.0:
            raise RuntimeError("vanishing tail slope at E = 0; state is identically zero")
        return state.amplitude ** 2 / denom
    c1, c2 = tail_coefficients(state)
    denom = abs(c1) ** 2 + abs(c2) ** 2
    if denom == 0.0:
        raise RuntimeError(
            "tail coefficients vanished; flux conservation forbids this for E > 0"
        )
    return state.amplitude ** 2 / denom


def closed_form_single_barrier(a: float, b: float, v0: float,
                               energy: float) -> tuple[complex, complex, complex, complex]:
    """Explicit (B1, B2, C1, C2) for the single rectangular barrier, A = 1.

    The barrier region is written in the exponential basis with
    k2 = sqrt(-2(E - v0)); for E > v0 that k2 is imaginary and the same
    expressions are evaluated in complex arithmetic.  E = v0 (and E = 0)
    make the expressions 0/0 and raise; the general solver covers those
    limits smoothly.
    """
    if not (0 < a < b) or not v0 > 0:
        raise ValueError("need 0 < a < b and v0 > 0")
    if energy < 0:
        raise ValueError(f"energy must be >= 0, got {energy}")
    if abs(2.0 * (energy - v0)) <= DEGENERACY_THRESHOLD or 2.0 * energy <= DEGENERACY_THRESHOLD:
        raise DegenerateEnergyError(
            "closed forms divide by k1 or k2; use solve_stationary at E = v0 or E = 0"
        )
    A = 1.0
    k1 = math.sqrt(2.0 * energy)
    k2 = complex(np.sqrt(complex(-2.0 * (energy - v0), 0.0)))
    sa, ca = math.sin(a * k1), math.cos(a * k1)
    sb, cb = math.sin(b * k1), math.cos(b * k1)

    b1 = np.exp(-a * k2) * (k1 * ca + k2 * sa) * A / (2.0 * k2)
    b2 = np.exp(a * k2) * (-k1 * ca + k2 * sa) * A / (2.0 * k2)

    pre = A / (2.0 * k1 * k2) * np.exp(-(a + b) * k2)
    c1 = pre * (
        np.exp(2.0 * b * k2) * (k1 * ca + k2 * sa) * (k1 * cb - k2 * sb)
        + np.exp(2.0 * a * k2) * (-k1 * ca + k2 * sa) * (k1 * cb + k2 * sb)
    )
    # cos(b k1) * (k2 +- k1 tan(b k1)) expanded to k2 cos +- k1 sin.
    c2 = pre * (
        -np.exp(2.0 * a * k2) * (-k1 * ca + k2 * sa) * (k2 * cb - k1 * sb)
        + np.exp(2.0 * b * k2) * (k1 * ca + k2 * sa) * (k2 * cb + k1 * sb)
    )
    return complex(b1), complex(b2), complex(c1), complex(c2)


def export_state_csv(state: StationaryState, x, path) -> None:
    """Write columns x, re(psi), im(psi), |psi|^2 on the given grid."""
    x = np.asarray(x, dtype=float)
    psi = eval_state(state, x)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# energy: {state.energy:.17g}\n")
        fh.write("x,re_psi,im_psi,abs2_psi\n")
        for xv, pv in zip(x, psi):
            fh.write(
                f"{xv:.17g},{pv.real:.17g},{pv.imag:.17g},{abs(pv) ** 2:.17g}\n"
            )
