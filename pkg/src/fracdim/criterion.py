"""Zero lattices, the index function k(eps) and the oscillation criterion for chirps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .boxcount import band_verdict
from .curves import ChirpSpec
from .errors import (HypothesisFailure, InversionError, LatticeExhaustedError, SchemaError,
                     UniquenessViolationError)
from .roots import bisect_vec

SCAN_POINTS = 33
_GL8 = np.polynomial.legendre.leggauss(8)
_GL16 = np.polynomial.legendre.leggauss(16)


@dataclass
class ZeroLattice:
    """a_k = q^-1(a + kT) and s_k = q^-1(a + t0 + kT) for k = k0..k_max (+1 for a)."""

    k: np.ndarray
    a_values: np.ndarray  # a_k for k0..k_max+1
    s_values: np.ndarray  # s_k for k0..k_max
    k0: int
    T: float
    t0: float
    spec: ChirpSpec = field(repr=False)

    @property
    def gaps(self):
        """a_k - a_{k+1} for k = k0..k_max."""
        return self.a_values[:-1] - self.a_values[1:]

    @property
    def k_max(self):
        return int(self.k[-1])

    def a(self, k):
        return self.a_values[np.asarray(k) - self.k0]


def zero_lattice(spec: ChirpSpec, k_max: int, t0: float | None = None) -> ZeroLattice:
    """Zeros of y below the domain end, by monotone inversion of q."""
    T, a0 = spec.waveform.half_period, spec.waveform.zero
    t0 = 0.5 * T if t0 is None else float(t0)
    if not 0 < t0 < T:
        raise SchemaError("t0 must lie in (0, T)")
    q_c = float(spec.phase(spec.domain_end))
    if a0 + k_max * T < q_c:
        raise SchemaError(f"k_max={k_max} leaves the lattice outside the domain (need k T >= {q_c:g})")
    k0 = max(1, math.ceil((q_c - a0) / T))
    k = np.arange(k0, k_max + 1)
    kk = np.arange(k0, k_max + 2)
    a_vals = spec.q_inverse(a0 + kk * T)
    s_vals = spec.q_inverse(a0 + t0 + k * T)
    if np.any(np.diff(a_vals) >= 0):
        raise InversionError("zero sequence is not strictly decreasing")
    if not (np.all(a_vals[1:] < s_vals) and np.all(s_vals < a_vals[:-1])):
        raise InversionError("s_k does not interleave the zeros")
    resid = np.abs(spec.y(a_vals))
    bad = resid > 1e-10 * spec.amplitude(a_vals)
    if np.any(bad):
        raise InversionError(f"y(a_k) not zero to 1e-10 p(a_k) at k={int(kk[bad][0])}; "
                             "rounding of q near that index exceeds the bound, use a smaller k_max")
    return ZeroLattice(k, a_vals, s_vals, int(k0), T, t0, spec)


def index_function(lattice: ZeroLattice, eps: float) -> int:
    """Smallest k with a_n - a_{n+1} <= eps for every lattice n >= k (scan from the tail)."""
    if not eps > 0:
        raise SchemaError("eps must be positive")
    g = lattice.gaps
    if g[-1] > eps:
        raise LatticeExhaustedError(
            f"gap at k_max={lattice.k_max} is {g[-1]:.3g} > eps={eps:.3g}; increase k_max")
    above = np.flatnonzero(g > eps)
    return lattice.k0 if above.size == 0 else int(lattice.k[above[-1]] + 1)


def index_sandwich(lattice: ZeroLattice, eps_values, beta: float):
    """Check (1/T)(eps/(T C2))^-b <= k(eps) <= (2/T)(eps/(T C2))^-b, b = beta/(beta+1), for a fitted C2.

    Such a C2 exists iff max/min of T k(eps) eps^b is at most 2; the fitted C2
    puts the smallest scaled value on the lower bound.
    """
    b = beta / (beta + 1)
    T = lattice.T
    eps = np.asarray(eps_values, dtype=float)
    ks = np.array([index_function(lattice, e) for e in eps], dtype=float)
    scaled = T * ks * eps**b
    c2 = float(scaled.min() ** (1 / b) / T)
    return {"ok": bool(scaled.max() / scaled.min() <= 2.0), "C2": c2, "k": ks.astype(int).tolist(),
            "scaled": scaled.tolist()}


def gap_extrema(spec: ChirpSpec, lattice: ZeroLattice):
    """Location and value of max |y| on each [a_{k+1}, a_k].

    Dense scan of y' (33 points), then bisection on its sign change.  More
    than one sign change in a gap means k < k0 of the uniqueness lemma.
    """
    lo, hi = lattice.a_values[1:], lattice.a_values[:-1]
    w = (np.arange(SCAN_POINTS) / (SCAN_POINTS - 1))[None, :]
    grid = lo[:, None] + (hi - lo)[:, None] * w
    d = spec.dy(grid)
    ch = (d[:, 1:] > 0) != (d[:, :-1] > 0)
    n_ch = ch.sum(axis=1)
    if np.any(n_ch != 1):
        i = int(np.flatnonzero(n_ch != 1)[0])
        raise UniquenessViolationError(f"{int(n_ch[i])} extrema in zero gap k={int(lattice.k[i])}",
                                       k=int(lattice.k[i]))
    j = np.argmax(ch, axis=1)
    rows = np.arange(lo.size)
    a = grid[rows, j]
    b = grid[rows, j + 1]
    s = bisect_vec(spec.dy, a, b, rel_tol=1e-13)
    return s, np.abs(spec.y(s))


def _gl(f, a, b, rule):
    x, w = rule
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * x[None, :]
    return half * (f(pts) @ w)


def variation_per_gap(spec: ChirpSpec, lattice: ZeroLattice, s_ext, rel_tol=1e-8):
    """integral of |y'| over each zero gap, split at the extremum so the integrand keeps one sign.

    Returns (values, converged mask) from Gauss-Legendre 16 checked against 8.
    """
    lo, hi = lattice.a_values[1:], lattice.a_values[:-1]
    f = lambda x: np.abs(spec.dy(x))
    v16 = _gl(f, lo, s_ext, _GL16) + _gl(f, s_ext, hi, _GL16)
    v8 = _gl(f, lo, s_ext, _GL8) + _gl(f, s_ext, hi, _GL8)
    ok = np.abs(v16 - v8) <= rel_tol * np.abs(v16) + 1e-300
    return v16, ok


@dataclass
class CriterionReport:
    s_target: float
    eps_values: list
    lhs_scaled: list
    rhs_scaled: list
    c1_band: tuple
    c2_band: tuple
    verdict: bool
    k_eps: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


def criterion_check(spec: ChirpSpec, lattice: ZeroLattice, ladder, s: float,
                    ratio_bound: float = 10.0) -> CriterionReport:
    """Evaluate both sides of the criterion across ``ladder`` at candidate dimension ``s``."""
    if not 1.0 <= s < 2.0:
        raise SchemaError(f"s must lie in [1, 2), got {s!r}")
    eps = np.asarray(list(ladder), dtype=float)
    if eps.size < 2 or np.any(np.diff(eps) >= 0):
        raise SchemaError("ladder must be strictly descending")
    s_ext, m = gap_extrema(spec, lattice)
    var, ok = variation_per_gap(spec, lattice, s_ext)
    gaps = lattice.gaps
    terms = m * gaps
    # suffix sums give sum_{n >= k} in O(1) per rung
    tail = np.cumsum(terms[::-1])[::-1]
    prefix = np.concatenate([[0.0], np.cumsum(var)])
    prefix_bad = np.concatenate([[0], np.cumsum(~ok)])
    lhs, rhs, ks, used, flags = [], [], [], [], []
    for e in eps:
        k = index_function(lattice, e)
        i = k - lattice.k0
        if prefix_bad[i] > 0:
            flags.append(f"quadrature_not_converged_eps={e!r}")
            continue
        a_k = lattice.a_values[i]
        lhs.append(float(tail[i]))
        rhs.append(float(a_k * spec.amplitude(a_k) + e * prefix[i]))
        ks.append(k)
        used.append(float(e))
    if len(used) < 2:
        raise SchemaError("fewer than two usable ladder rungs")
    used_a = np.array(used)
    lhs_s = np.array(lhs) / used_a ** (2 - s)
    rhs_s = np.array(rhs) / used_a ** (2 - s)
    deg_l, slope_l, why_l = band_verdict(lhs_s, used_a, ratio_bound)
    deg_r, slope_r, why_r = band_verdict(rhs_s, used_a, ratio_bound)
    verdict = bool(np.all(lhs_s > 0) and not deg_l and not deg_r)
    # truncated LHS: weight of the last lattice term relative to the smallest tail used
    tail_share = float(terms[-1] * lattice.k_max / tail[max(ks) - lattice.k0])
    diag = {"lhs_tail_slope": slope_l, "rhs_tail_slope": slope_r, "lhs_reasons": why_l,
            "rhs_reasons": why_r, "eps0": float(gaps.max()), "lhs_truncation": tail_share}
    return CriterionReport(s, used, lhs_s.tolist(), rhs_s.tolist(),
                           (float(lhs_s.min()), float(lhs_s.max())),
                           (float(rhs_s.min()), float(rhs_s.max())), verdict, ks, flags, diag)


def amplitude_bound(spec: ChirpSpec, lattice: ZeroLattice):
    """Fitted c0 in max|y| on [a_{k+1}, a_k] >= c0 (k+1)^(-alpha/beta)."""
    _, m = gap_extrema(spec, lattice)
    return float(np.min(m * (lattice.k + 1.0) ** (spec.alpha / spec.beta)))


class Envelope(NamedTuple):
    C1: float
    C2: float
    delta0: float


def envelope_ratio_bands(spec: ChirpSpec, n: int = 4001, x_min: float | None = None):
    """Per-ratio (min, max) on (0, delta0] and delta0 itself.

    Ratios p/x^a, p'/x^(a-1), q/x^-b, -q'/x^(-b-1) and the inverse slope
    -(q^-1)'(u) u^(1/b+1) are scanned on a log grid of (0, c]; delta0 is the
    largest grid point below which every ratio stays positive and finite.
    """
    a, b = spec.alpha, spec.beta
    c = spec.domain_end
    x = np.geomspace(c * 1e-8 if x_min is None else x_min, c, n)
    p, dp = spec.amplitude(x), spec.amplitude.d(x)
    q, dq = spec.phase(x), spec.phase.d(x)
    with np.errstate(all="ignore"):
        ratios = np.vstack([p / x**a, dp / x ** (a - 1), q / x**-b, -dq / x ** (-b - 1),
                            -1.0 / dq * q ** (1 / b + 1)])
    good = np.all(np.isfinite(ratios) & (ratios > 0), axis=0)
    if not good[0]:
        raise HypothesisFailure("envelope ratios fail already at the smallest grid point")
    last = n - 1 if np.all(good) else int(np.argmin(good)) - 1
    names = ["p", "dp", "q", "dq", "q_inverse"]
    bands = {nm: (float(v.min()), float(v.max())) for nm, v in zip(names, ratios[:, :last + 1])}
    return bands, float(x[last])


def envelope_constants(spec: ChirpSpec, n: int = 4001, x_min: float | None = None) -> Envelope:
    """Grid-certified (C1, C2, delta0): C1/C2 are the min/max of all envelope ratios on (0, delta0]."""
    bands, delta0 = envelope_ratio_bands(spec, n, x_min)
    return Envelope(min(v[0] for v in bands.values()), max(v[1] for v in bands.values()), delta0)
