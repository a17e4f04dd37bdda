"""Arc length and rectifiability verdicts for chirps and spirals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .criterion import gap_extrema, zero_lattice
from .curves import ChirpSpec, PhaseSpec, Polyline, SpiralSpec, sample_chirp
from .errors import SchemaError, UniquenessViolationError

REL_INCREMENT = 1e-6
GROWTH_MIN = 0.1
R2_MIN = 0.99
_GL8 = np.polynomial.legendre.leggauss(8)
_GL16 = np.polynomial.legendre.leggauss(16)


@dataclass
class LengthProfile:
    cutoffs: list
    partial_lengths: list
    growth_exponent: float
    verdict: str
    r2: float = float("nan")
    increments: list = field(default_factory=list)
    flags: list = field(default_factory=list)


def arc_length(curve: Polyline) -> float:
    """Sum of segment lengths (a lower bound for the curve length)."""
    return float(math.fsum(curve.segment_lengths()))


def _verdict(cutoffs, lengths, rel_tol=REL_INCREMENT, growth_min=GROWTH_MIN, r2_min=R2_MIN):
    c = np.asarray(cutoffs, dtype=float)
    L = np.asarray(lengths, dtype=float)
    inc = np.diff(L)
    flags = []
    tail_small = bool(inc.size >= 3 and np.all(inc[-3:] < rel_tol * L[-1]))
    lc, lL = np.log(c), np.log(L)
    slope, icpt = np.polyfit(lc, lL, 1)
    resid = lL - (slope * lc + icpt)
    tot = float(((lL - lL.mean()) ** 2).sum())
    r2 = 1 - float(resid @ resid) / tot if tot > 0 else 1.0
    # logarithmic divergence: L linear in log(cutoff) fits better than a power law
    a, b = np.polyfit(lc, L, 1)
    res_log = L - (a * lc + b)
    tot_lin = float(((L - L.mean()) ** 2).sum())
    r2_log = 1 - float(res_log @ res_log) / tot_lin if tot_lin > 0 else 1.0
    if tail_small:
        verdict = "rectifiable"
    elif abs(slope) > growth_min and r2 > r2_min and not r2_log > r2:
        verdict = "nonrectifiable"
    else:
        verdict = "inconclusive"
        if r2_log > r2 and r2_log > r2_min:
            flags.append("log_divergent")
    return float(slope), verdict, float(r2), inc.tolist(), flags


def classify_chirp_length(spec: ChirpSpec, refinement_schedule, points_per_period: int = 64,
                          rel_tol: float = REL_INCREMENT, growth_min: float = GROWTH_MIN,
                          max_periods: int = 10**8) -> LengthProfile:
    """Graph lengths over [delta, c] for a descending schedule of cutoffs delta.

    Each stretch [delta_{i+1}, delta_i] is sampled on its own and added to the
    running total, so the polyline for the full range is never held at once.
    """
    cut = [float(d) for d in refinement_schedule]
    if len(cut) < 5:
        raise SchemaError("schedule needs at least 5 cutoffs")
    if any(b >= a for a, b in zip(cut, cut[1:])) or not cut[0] < spec.domain_end:
        raise SchemaError("schedule must descend strictly inside (0, domain_end)")
    lengths, total = [], 0.0
    ends = [spec.domain_end] + cut
    for hi, lo in zip(ends[:-1], ends[1:]):
        piece = ChirpSpec(spec.alpha, spec.beta, spec.amplitude, spec.phase, spec.waveform, hi)
        total += arc_length(sample_chirp(piece, lo, points_per_period, max_periods=max_periods,
                                         max_points=10**9))
        lengths.append(total)
    slope, verdict, r2, inc, flags = _verdict(cut, lengths, rel_tol, growth_min)
    return LengthProfile(cut, lengths, slope, verdict, r2, inc, flags)


class ExtremaSeries:
    """Partial sums of |y(s_k)| over the local extrema; unpacks as (partial_sums, converged)."""

    def __init__(self, k, s_values, terms, converged, exponent, k0):
        self.k = k
        self.s_values = s_values
        self.terms = terms
        self.partial_sums = np.cumsum(terms)
        self.converged = converged
        self.exponent = exponent
        self.k0 = k0

    def __iter__(self):
        return iter((self.partial_sums, self.converged))


def extrema_series(spec: ChirpSpec, k_max: int, rel_tol: float = REL_INCREMENT,
                   tail_from: float = 0.5) -> ExtremaSeries:
    """Sum of |y| at the unique extremum s_k in each zero gap (a_{k+1}, a_k).

    Gaps with more than one extremum sit below the uniqueness onset; the scan
    restarts after the last offending index.
    """
    lat = zero_lattice(spec, k_max)
    while True:
        try:
            s, m = gap_extrema(spec, lat)
            break
        except UniquenessViolationError as err:
            if err.k >= k_max - 10:
                raise
            start = err.k + 1
            lat = zero_lattice(spec, k_max)
            keep = lat.k >= start
            lat.k = lat.k[keep]
            lat.s_values = lat.s_values[keep]
            lat.a_values = lat.a_values[np.concatenate([keep, [True]])]
            lat.k0 = start
    i0 = int(tail_from * m.size)
    expo = float(np.polyfit(np.log(lat.k[i0:]), np.log(m[i0:]), 1)[0])
    total = float(m.sum())
    converged = bool(expo < -1 and m[-1] < rel_tol * total)
    return ExtremaSeries(lat.k, s, m, converged, expo, lat.k0)


def _speed_fn(spec):
    if isinstance(spec, PhaseSpec):
        return lambda t: np.hypot(spec.xdot(t), spec.xddot(t)), spec.t_start
    if isinstance(spec, SpiralSpec):
        f = spec.profile
        return lambda p: np.hypot(f(p), f.d(p)), spec.phi_start
    raise SchemaError("expected a PhaseSpec or SpiralSpec")


def _integrate(speed, a, b, per_period=4, rel_tol=1e-12, depth=30):
    """Length integral over [a, b]: Gauss-Legendre 16 on quarter periods, bisected where 8 and 16 disagree."""
    n = max(1, math.ceil((b - a) * per_period / (2 * math.pi)))
    edges = np.linspace(a, b, n + 1)
    lo, hi = edges[:-1], edges[1:]
    total = 0.0
    for _ in range(depth):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        v16 = half * (speed(mid[:, None] + half[:, None] * _GL16[0][None, :]) @ _GL16[1])
        v8 = half * (speed(mid[:, None] + half[:, None] * _GL8[0][None, :]) @ _GL8[1])
        bad = np.abs(v16 - v8) > rel_tol * np.abs(v16) + 1e-300
        total += math.fsum(v16[~bad])
        if not np.any(bad):
            return total
        lo, hi = np.concatenate([lo[bad], mid[bad]]), np.concatenate([mid[bad], hi[bad]])
    # depth exhausted: midpoint rule on what is left
    return total + math.fsum((hi - lo) * speed(0.5 * (lo + hi)))


def classify_spiral_length(spec, horizon_schedule, rel_tol: float = REL_INCREMENT,
                           growth_min: float = GROWTH_MIN) -> LengthProfile:
    """Length of the spiral up to each horizon (t for phase curves, phi for polar spirals)."""
    hor = [float(h) for h in horizon_schedule]
    if len(hor) < 5:
        raise SchemaError("schedule needs at least 5 horizons")
    speed, start = _speed_fn(spec)
    if any(b <= a for a, b in zip(hor, hor[1:])) or not hor[0] > start:
        raise SchemaError("horizons must ascend strictly beyond the start of the curve")
    lengths, total = [], 0.0
    for a, b in zip([start] + hor[:-1], hor):
        total += _integrate(speed, a, b)
        lengths.append(total)
    slope, verdict, r2, inc, flags = _verdict(hor, lengths, rel_tol, growth_min)
    return LengthProfile(hor, lengths, slope, verdict, r2, inc, flags)
