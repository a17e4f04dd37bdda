"""Bracketed root finding shared by the analysis modules."""
import numpy as np

from .errors import InversionError

REL_TOL = 1e-10
MAX_ITER = 200


def bisect(f, lo, hi, rel_tol=REL_TOL, max_iter=MAX_ITER, f_lo=None):
    """Root of ``f`` in ``[lo, hi]`` where ``f(lo)`` and ``f(hi)`` differ in sign.

    A sign is "nonpositive" vs "positive", so a bracket whose left end is an
    exact zero still converges to the first crossing from <=0 to >0 (or back).
    """
    if f_lo is None:
        f_lo = f(lo)
    left_pos = f_lo > 0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rel_tol * max(abs(mid), 1.0):
            break
        if (f(mid) > 0) == left_pos:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bisect_vec(f, lo, hi, rel_tol=REL_TOL, max_iter=MAX_ITER):
    """Elementwise bisection over arrays of brackets ``[lo, hi]``."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    left_pos = f(lo) > 0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if np.all(hi - lo <= rel_tol * np.maximum(np.abs(mid), 1.0)):
            break
        same = (f(mid) > 0) == left_pos
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def invert_monotone(g, targets, lo, hi, increasing):
    """Solve ``g(x) = target`` for every target on ``[lo, hi]``.

    ``g`` must be monotone on the interval; this is checked at the ends and
    on a coarse grid, and violations raise :class:`InversionError`.
    """
    targets = np.asarray(targets, dtype=float)
    probe = np.geomspace(lo, hi, 257) if lo > 0 else np.linspace(lo, hi, 257)
    gp = g(probe)
    dg = np.diff(gp)
    if increasing and np.any(dg <= 0) or not increasing and np.any(dg >= 0):
        raise InversionError(f"function is not monotone on [{lo:g}, {hi:g}]")
    glo, ghi = gp[0], gp[-1]
    inside = (targets - glo) * (targets - ghi) <= 0
    if not np.all(inside):
        bad = targets[~inside][0]
        raise InversionError(f"target {bad:g} outside the range [{min(glo, ghi):g}, {max(glo, ghi):g}]")
    # bracket each target on the probe grid, then bisect inside the bracket
    order = gp if increasing else -gp
    key = targets if increasing else -targets
    idx = np.clip(np.searchsorted(order, key), 1, probe.size - 1)
    a = probe[idx - 1]
    b = probe[idx]
    sign = 1.0 if increasing else -1.0
    return bisect_vec(lambda x: sign * (g(x) - targets), a, b)


def sign_changes(values):
    """Indices ``i`` where ``values[i]`` and ``values[i+1]`` differ in sign (<=0 vs >0)."""
    pos = np.asarray(values) > 0
    return np.flatnonzero(pos[1:] != pos[:-1])
