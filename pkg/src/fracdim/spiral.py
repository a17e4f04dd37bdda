"""Hypothesis checks for wavy spirals: sequences, bounds and phase asymptotics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .curves import PhaseSpec, SpiralSpec, eval_r, monotone_onset, unwrap_phase, _wrap
from .errors import (HorizonError, HypothesisFailure, InversionError, NumericDomainError,
                     PreconditionError, SchemaError, UniquenessViolationError)
from .roots import bisect, bisect_vec

SCAN_STEP = math.pi / 64
DEFAULT_THETA = (math.pi / 3 + 1) / 2
MARGIN = 0.05


@dataclass
class WavySequence:
    t_values: np.ndarray
    kinds: list
    r_at: np.ndarray
    t_start: float

    def __len__(self):
        return self.t_values.size

    @property
    def odd(self):
        """t_1, t_3, ... (local-min onsets)."""
        return self.t_values[0::2]

    @property
    def even(self):
        """t_2, t_4, ... (level returns)."""
        return self.t_values[1::2]


@dataclass
class WavyReport:
    sequence: WavySequence
    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    alpha_used: float
    evidence: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.cond_i and self.cond_ii and self.cond_iii


def _scan_for(g, t, horizon, step, want_positive):
    """Advance from ``t`` until ``g`` becomes >0 (or <=0); return a bracket."""
    ga = g(t)
    while t < horizon:
        b = min(t + step, horizon)
        gb = g(b)
        if (gb > 0) == want_positive and (ga > 0) != want_positive:
            return t, b, ga
        t, ga = b, gb
    raise HorizonError(f"no bracket found before horizon t={horizon:g}", last_t=t)


def _factors(spec: PhaseSpec):
    # r'(t) = g_max(t) * g_min(t) / r(t)
    g_max = lambda t: spec._p(t) * np.cos(t) + spec._p(t, 1) * np.sin(t)
    g_min = lambda t: 2 * spec._p(t, 1) * np.cos(t) + spec._p(t, 2) * np.sin(t)
    return g_max, g_min


def _next_turn(spec: PhaseSpec, t, horizon, step, to_positive):
    """First t' > t where r' changes sign to >0 (or to <=0).

    r' vanishes only at roots of its two factors, each a slow oscillation, so
    the factors are scanned instead of r' itself (whose positive stretches
    shrink like 1/t and would slip between scan points).
    """
    g_max, g_min = _factors(spec)
    window = 2 * math.pi
    lo = t
    while lo < horizon:
        hi = min(lo + window, horizon)
        grid = np.arange(lo, hi, step)
        grid = np.append(grid, hi)
        cand = []
        for g in (g_max, g_min):
            v = g(grid)
            for i in np.flatnonzero((v[1:] > 0) != (v[:-1] > 0)):
                cand.append(bisect(lambda s: float(g(s)), float(grid[i]), float(grid[i + 1]), f_lo=v[i]))
        cand = sorted(c for c in cand if c > t)
        pts = [lo] + cand + [hi]
        mids = np.array([0.5 * (a + b) for a, b in zip(pts[:-1], pts[1:])])
        pos = spec.drdt(mids) > 0
        for j, c in enumerate(cand):
            if pos[j + 1] == to_positive and pos[j] != to_positive:
                return c
        lo = hi
    raise HorizonError(f"no sign change of r' before horizon t={horizon:g}", last_t=lo)


def extract_wavy_sequence(spec: PhaseSpec, count: int, horizon: float | None = None,
                          step: float = SCAN_STEP) -> WavySequence:
    """First ``count`` entries t_1, t_2, ... of the wavy sequence of r(t)."""
    if count < 1:
        raise SchemaError("count must be positive")
    r = lambda t: float(eval_r(spec, t))
    t0 = spec.t_start
    rp0 = float(spec.drdt(t0))
    if rp0 > 0:
        raise PreconditionError(f"r'(t0) = {rp0:g} > 0 at t0={t0:g}")
    if horizon is None:
        horizon = t0 + 4 * math.pi * (count + 2)
    ts, kinds, rs = [], [], []
    t = t0
    while len(ts) < count:
        if len(ts) % 2 == 0:
            # t_{2k+1}: first point after t where r' turns positive
            t_new = _next_turn(spec, t, horizon, step, True)
            level = r(t_new)
            kinds.append("local-min-onset")
        else:
            # t_{2k+2}: r rises up to the next turn of r', then falls back to the level
            peak = _next_turn(spec, t, horizon, step, False)
            g = lambda s: r(s) - level
            a, b, ga = _scan_for(g, peak, horizon, step, False)
            t_new = bisect(g, a, b, f_lo=ga)
            kinds.append("level-return")
        ts.append(t_new)
        rs.append(r(t_new))
        t = t_new
    return WavySequence(np.array(ts), kinds, np.array(rs), t0)


def oscillations(seq: WavySequence, spec: PhaseSpec):
    """osc of r over each [t_{2k+1}, t_{2k+2}] = r(max) - r(t_{2k+1})."""
    n = len(seq) // 2
    lo, hi = seq.odd[:n], seq.even[:n]
    osc = np.empty(n)
    for k in range(n):
        a, b = lo[k], hi[k]
        # r' > 0 just after a, < 0 just before b: the maximum sits at the sign change
        a_in = a + 1e-9 * (b - a)
        if spec.drdt(a_in) > 0 and spec.drdt(b) <= 0:
            tm = bisect(lambda s: float(spec.drdt(s)), a_in, b)
            peak = float(eval_r(spec, tm))
        else:
            grid = np.linspace(a, b, 257)
            peak = float(eval_r(spec, grid).max())
        osc[k] = peak - seq.r_at[2 * k]
    return osc


def decay_condition(t_odd, osc, alpha, margin=MARGIN, tail_from=0.25):
    """Little-o surrogate: fitted exponent <= -(alpha+1) - margin and a decreasing trend."""
    t_odd = np.asarray(t_odd, dtype=float)
    osc = np.asarray(osc, dtype=float)
    start = int(math.floor(tail_from * osc.size))
    tt, oo = t_odd[start:], osc[start:]
    if tt.size < 3 or np.any(oo <= 0):
        return False, {"exponent": float("nan"), "scaled_decreasing": False}
    expo = float(np.polyfit(np.log(tt), np.log(oo), 1)[0])
    scaled = oo * tt ** (alpha + 1)
    decreasing = bool(np.all(np.diff(scaled) < 0))
    ok = expo <= -(alpha + 1) - margin and decreasing
    return ok, {"exponent": expo, "scaled_decreasing": decreasing, "tail_start": start,
                "scaled": scaled.tolist()}


def check_waviness(seq: WavySequence, spec: PhaseSpec, alpha: float, margin: float = MARGIN,
                   min_gap: float = math.pi / 3 - 0.05) -> WavyReport:
    """Evaluate conditions (i)-(iii) of the waviness definition on a finite sequence."""
    if len(seq) < 8:
        raise SchemaError("need at least 8 sequence entries")
    full = np.concatenate([[seq.t_start], seq.t_values])
    steps = np.diff(full)
    monotone = bool(np.all(steps > 0))
    odd_gaps = np.diff(seq.odd)
    last_gap = float(odd_gaps[-1]) if odd_gaps.size else float("nan")
    escaping = bool(odd_gaps.size and last_gap >= 0.5 * float(np.median(odd_gaps)))
    cond_i = monotone and escaping
    # t_{2k+1} - t_{2k} for k >= 1; the k = 0 gap depends on where the domain
    # was cut and is reported separately
    n_pairs = min(seq.odd.size - 1, seq.even.size)
    gaps = seq.odd[1:n_pairs + 1] - seq.even[:n_pairs]
    eps_measured = float(gaps.min())
    cond_ii = eps_measured >= min_gap
    osc = oscillations(seq, spec)
    cond_iii, decay = decay_condition(seq.odd[:osc.size], osc, alpha, margin)
    evidence = {
        "monotone": monotone, "last_gap": last_gap, "odd_gaps": odd_gaps.tolist(),
        "gaps": gaps.tolist(), "first_gap": float(seq.t_values[0] - seq.t_start),
        "eps_measured": eps_measured, "eps_predicted": math.pi / 3,
        "min_odd_gap": float(odd_gaps.min()) if odd_gaps.size else float("nan"),
        "osc": osc.tolist(), "decay": decay,
        # (ii) with increasing t_n already forces (i); both are reported separately
        "ii_implies_i": bool(cond_ii and monotone),
    }
    return WavyReport(seq, cond_i, cond_ii, cond_iii, alpha, evidence)


class PhaseSpiralProfile:
    """f(phi) = r(t(phi)) for the mirrored phase spiral of a PhaseSpec.

    The unwrapped angle is tabulated on a grid of step ``step`` over
    [t_lo, t_hi]; only its strictly increasing part is inverted.
    """

    def __init__(self, spec: PhaseSpec, t_hi: float, t_lo: float | None = None,
                 step: float = math.pi / 32):
        self.spec = spec
        t_lo = spec.t_start if t_lo is None else t_lo
        n = max(2, math.ceil((t_hi - t_lo) / step))
        t = np.linspace(t_lo, t_hi, n + 1)
        phi = unwrap_phase(spec, t)
        onset = monotone_onset(phi)
        if onset is None:
            raise InversionError("unwrapped phase is not eventually increasing on the grid")
        self.onset_t = float(t[onset])
        self._t = t[onset:]
        self._phi = phi[onset:]
        self._a = self._angle(self._t)

    def _angle(self, t):
        return np.arctan2(-self.spec.xdot(t), self.spec.x(t))

    @property
    def phi_range(self):
        return float(self._phi[0]), float(self._phi[-1])

    def phase(self, t):
        """Unwrapped angle at arbitrary t inside the table."""
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self._t, t, side="right") - 1, 0, self._t.size - 2)
        return self._phi[i] + _wrap(self._angle(t) - self._a[i])

    def t_of(self, phi):
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        lo, hi = self.phi_range
        if np.any(phi < lo) or np.any(phi > hi):
            raise InversionError(f"phi outside the invertible range [{lo:g}, {hi:g}]")
        i = np.clip(np.searchsorted(self._phi, phi, side="right") - 1, 0, self._t.size - 2)
        return bisect_vec(lambda s: self.phase(s) - phi, self._t[i], self._t[i + 1], rel_tol=1e-14)

    def __call__(self, phi):
        return eval_r(self.spec, self.t_of(phi))

    def d(self, phi, order=1):
        if order != 1:
            raise ValueError("only the first derivative is available")
        t = self.t_of(phi)
        return self.spec.drdt(t) / self.spec.phase_rate(t)


def phase_profile(spec: PhaseSpec, phi_hi: float, t_lo: float | None = None) -> PhaseSpiralProfile:
    """Profile covering angles up to ``phi_hi`` (phi ~ t - pi/2)."""
    return PhaseSpiralProfile(spec, t_hi=phi_hi + math.pi + 8.0 + 0.01 * phi_hi, t_lo=t_lo)


def _profile_of(obj, phi_hi):
    if isinstance(obj, SpiralSpec):
        return obj.profile
    if isinstance(obj, PhaseSpec):
        return phase_profile(obj, phi_hi)
    return obj


def radial_decrease_bound(profile, alpha: float, phi_range, theta: float = DEFAULT_THETA,
                          n_phi: int = 2001, n_delta: int = 65):
    """min over (phi, dphi) of (f(phi) - f(phi + dphi)) * phi^(alpha+1), theta <= dphi <= 2pi+theta.

    ``profile`` is a SpiralSpec, a PhaseSpec (its mirrored phase spiral) or a
    callable f(phi).  Returns (a_lower, worst_phi); a_lower <= 0 means the
    hypothesis fails on the grid.
    """
    if not 0 < theta <= math.pi:
        raise SchemaError(f"theta must lie in (0, pi], got {theta!r}")
    lo, hi = float(phi_range[0]), float(phi_range[1])
    if not 0 < lo < hi:
        raise SchemaError("phi_range must be an interval of positive reals")
    f = _profile_of(profile, hi + 2 * math.pi + theta)
    phi = np.linspace(lo, hi, n_phi)
    dphi = np.linspace(theta, 2 * math.pi + theta, n_delta)
    f0 = np.asarray(f(phi), dtype=float)
    shifted = np.asarray(f((phi[:, None] + dphi[None, :]).ravel()), dtype=float).reshape(phi.size, dphi.size)
    if not (np.all(np.isfinite(f0)) and np.all(np.isfinite(shifted))):
        raise NumericDomainError("profile not finite on the requested range")
    val = (f0[:, None] - shifted) * phi[:, None] ** (alpha + 1)
    worst = val.min(axis=1)
    i = int(np.argmin(worst))
    return float(worst[i]), float(phi[i])


def envelope_and_derivative_bounds(profile, alpha: float, phi_range, n: int = 4097):
    """(min f phi^a, max f phi^a, max |f'| phi^(a+1)) over a dense grid."""
    lo, hi = float(phi_range[0]), float(phi_range[1])
    if not 0 < lo < hi:
        raise SchemaError("phi_range must be an interval of positive reals")
    f = _profile_of(profile, hi)
    phi = np.geomspace(lo, hi, n)
    v = np.asarray(f(phi), dtype=float)
    dv = np.asarray(f.d(phi), dtype=float)
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(dv))):
        raise NumericDomainError("profile or derivative not finite on the requested range")
    if np.any(v <= 0):
        raise NumericDomainError("profile must be positive on the range")
    scaled = v * phi**alpha
    return float(scaled.min()), float(scaled.max()), float(np.max(np.abs(dv) * phi ** (alpha + 1)))


def decay_gap_check(spec: PhaseSpec, delta_phi: float, phi_grid, profile: PhaseSpiralProfile | None = None):
    """min over the grid of (r(t(phi)) - r(t(phi + dphi))) * phi^(alpha+1).

    Returns (k_const, min_index).
    """
    if not delta_phi > 1:
        raise PreconditionError(f"delta_phi must exceed 1, got {delta_phi!r}")
    phi = np.asarray(phi_grid, dtype=float)
    if phi.ndim != 1 or phi.size < 1 or np.any(np.diff(phi) <= 0):
        raise SchemaError("phi_grid must be strictly ascending")
    if profile is None:
        profile = phase_profile(spec, float(phi[-1]) + delta_phi)
    val = (profile(phi) - profile(phi + delta_phi)) * phi ** (spec.alpha + 1)
    i = int(np.argmin(val))
    return float(val[i]), i


def positivity_onset(values):
    """First index after which all values are positive, or None."""
    bad = np.flatnonzero(np.asarray(values) <= 0)
    if bad.size == 0:
        return 0
    return None if bad[-1] == len(values) - 1 else int(bad[-1] + 1)


def phase_asymptotic_check(spec: PhaseSpec, t_grid, offset: float = math.pi / 2) -> float:
    """sup over the grid of |phi(t) - t - offset| * t.

    The branch is fixed at the largest t by a multiple of pi: atan2 of the
    mirrored phase point tends to t - pi/2, the tan-based form t + pi/2
    agrees with it modulo pi.
    """
    t = np.asarray(t_grid, dtype=float)
    phi = unwrap_phase(spec, t)
    res = phi - t - offset
    res -= math.pi * round(res[-1] / math.pi)
    out = float(np.max(np.abs(res) * t))
    if not math.isfinite(out):
        raise NumericDomainError("phase residual is not finite")
    return out


def drdt_factored(spec: PhaseSpec, t):
    """dr/dt as (1 + (p'/p) tan t)(1 + (p''/2p') tan t)(2 p p'/r) cos^2 t."""
    p, p1, p2 = spec._p(t), spec._p(t, 1), spec._p(t, 2)
    tn = np.tan(t)
    return (1 + p1 / p * tn) * (1 + p2 / (2 * p1) * tn) * (2 * p * p1 / eval_r(spec, t)) * np.cos(t) ** 2


class ExtremaRoots(NamedTuple):
    minima: np.ndarray  # roots of tan t = -2p'/p''
    maxima: np.ndarray  # roots of tan t = -p/p'


def _unique_root(g, k, n_scan=64):
    # cos vanishes at the ends of J_k, where both factors reduce to a nonzero sin term
    lo, hi = (k - 0.5) * math.pi, (k + 0.5) * math.pi
    t = np.linspace(lo, hi, n_scan + 1)
    idx = np.flatnonzero((g(t[1:]) > 0) != (g(t[:-1]) > 0))
    if idx.size != 1:
        raise UniquenessViolationError(f"{idx.size} sign changes in J_{k}", k=k)
    i = int(idx[0])
    return bisect(lambda s: float(g(s)), float(t[i]), float(t[i + 1]))


def extrema_roots(spec: PhaseSpec, k_range) -> ExtremaRoots:
    """Roots of tan t = -2p'/p'' and tan t = -p/p' in each J_k = ((k-1/2)pi, (k+1/2)pi).

    Both equations are solved in cos/sin form, which has no poles in J_k.
    """
    ks = list(k_range)
    if not ks:
        raise SchemaError("k_range is empty")
    if ks[0] * math.pi - 0.5 * math.pi < spec.t_start:
        raise SchemaError("k_range must lie inside the domain")
    g_max, g_min = _factors(spec)
    mins, maxs = [], []
    for k in ks:
        tm = _unique_root(g_min, k)
        tM = _unique_root(g_max, k)
        if not (tm < tM and tM - tm < math.pi / 3):
            raise HypothesisFailure(f"root ordering fails in J_{k}: {tm:.12g}, {tM:.12g}")
        mins.append(tm)
        maxs.append(tM)
    return ExtremaRoots(np.array(mins), np.array(maxs))


def extrema_onset(spec: PhaseSpec, k_max: int) -> int:
    """Smallest k0 such that extrema_roots succeeds for every k in [k0, k_max]."""
    k_first = math.ceil(spec.t_start / math.pi + 0.5)
    k0 = k_first
    for k in range(k_first, k_max + 1):
        try:
            extrema_roots(spec, [k])
        except (UniquenessViolationError, HypothesisFailure):
            k0 = k + 1
    if k0 > k_max:
        raise HypothesisFailure(f"no onset index up to k={k_max}")
    return k0
