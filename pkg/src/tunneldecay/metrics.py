"""Windowed summary metrics for decay series.

The "observation window" is the stretch after the initial rise of the decay
parameter and before late-time artifacts: by default the middle half of the
run, further trimmed to times where P_in stays above a floor so that log
derivatives are not dominated by quadrature noise.
"""

import numpy as np

__all__ = [
    "observation_window",
    "plateau_mean",
    "oscillation_amplitude",
    "log_linear_fit",
    "quadratic_term_significance",
    "relative_l2_diff",
]

WINDOW_LO_FRAC = 0.25
WINDOW_HI_FRAC = 0.75
P_FLOOR = 1e-4


def observation_window(times, p_in=None, lo_frac=WINDOW_LO_FRAC,
                       hi_frac=WINDOW_HI_FRAC, p_floor=P_FLOOR):
    """Boolean mask of the intermediate-time window.

    Keeps lo_frac..hi_frac of the time span and, when p_in is given, drops
    times where the survival probability has fallen below p_floor.
    """
    times = np.asarray(times, dtype=float)
    t_lo = times[0] + lo_frac * (times[-1] - times[0])
    t_hi = times[0] + hi_frac * (times[-1] - times[0])
    mask = (times >= t_lo) & (times <= t_hi)
    if p_in is not None:
        mask &= np.asarray(p_in) >= p_floor
    if mask.sum() < 3:
        raise ValueError("observation window has fewer than 3 samples")
    return mask


def plateau_mean(lam, mask) -> float:
    return float(np.mean(np.asarray(lam)[mask]))


def oscillation_amplitude(lam, mask) -> float:
    vals = np.asarray(lam)[mask]
    return float(vals.max() - vals.min())


def log_linear_fit(times, p_in, mask):
    """Least-squares line through ln P_in on the window: (slope, intercept, r2)."""
    t = np.asarray(times)[mask]
    y = np.log(np.asarray(p_in)[mask])
    coef = np.polyfit(t, y, 1)
    resid = y - np.polyval(coef, t)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


def quadratic_term_significance(times, p_in, mask):
    """Quadratic coefficient of ln P_in and its t-statistic on the window.

    A large |t| flags systematic curvature, i.e. non-exponential decay.
    """
    t = np.asarray(times)[mask]
    y = np.log(np.asarray(p_in)[mask])
    # centred design matrix keeps the normal equations well conditioned
    tc = t - t.mean()
    X = np.column_stack([np.ones_like(tc), tc, tc ** 2])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = len(t) - 3
    if dof <= 0:
        raise ValueError("window too short for a quadratic fit")
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    c2 = float(coef[2])
    stderr = float(np.sqrt(cov[2, 2]))
    tstat = abs(c2) / stderr if stderr > 0 else np.inf
    return c2, tstat


def relative_l2_diff(a, b) -> float:
    """||a - b||_2 / ||b||_2 for equal-length samples."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = float(np.linalg.norm(b))
    if denom == 0:
        raise ValueError("reference vector has zero norm")
    return float(np.linalg.norm(a - b)) / denom
