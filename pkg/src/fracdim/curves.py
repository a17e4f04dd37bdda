"""Curve families: chirp graphs near 0, polar spirals and phase trajectories.

Every callable carries its analytic derivatives (``Smooth``); generators never
difference numerically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (DegeneratePointError, InvalidDomainError, NumericDomainError,
                     PrecisionError, ResourceLimitError, SchemaError)
from .roots import invert_monotone

MAX_PERIODS = 10**6
MAX_POINTS = 6 * 10**7


class Smooth:
    """A function bundled with its derivatives ``(f, f', f'', ...)``."""

    def __init__(self, funcs: Sequence[Callable], name: str = "custom"):
        if not funcs:
            raise ValueError("need at least the function itself")
        self._funcs = tuple(funcs)
        self.name = name

    def __call__(self, x):
        return self._funcs[0](np.asarray(x, dtype=float))

    def d(self, x, order: int = 1):
        if order == 0:
            return self(x)
        if order >= len(self._funcs):
            raise ValueError(f"{self.name}: derivative of order {order} not supplied")
        return self._funcs[order](np.asarray(x, dtype=float))

    @property
    def order(self) -> int:
        """Highest derivative available."""
        return len(self._funcs) - 1

    def inverse(self, u, lo, hi, increasing):
        return invert_monotone(self, u, lo, hi, increasing)

    def describe(self):
        return {"kind": self.name}


class PowerLaw(Smooth):
    """``coef * x**exponent`` with derivatives of every order."""

    def __init__(self, exponent: float, coef: float = 1.0):
        self.exponent = float(exponent)
        self.coef = float(coef)
        self.name = "power"

    def __call__(self, x):
        return self.coef * np.power(np.asarray(x, dtype=float), self.exponent)

    def d(self, x, order: int = 1):
        c = self.coef
        k = self.exponent
        for j in range(order):
            c *= k - j
        if c == 0.0:
            return np.zeros_like(np.asarray(x, dtype=float))
        return c * np.power(np.asarray(x, dtype=float), k - order)

    @property
    def order(self) -> int:
        return 10**9

    def inverse(self, u, lo=None, hi=None, increasing=None):
        return np.power(np.asarray(u, dtype=float) / self.coef, 1.0 / self.exponent)

    def describe(self):
        return {"kind": "power", "exponent": self.exponent, "coef": self.coef}


def constant(value: float = 1.0) -> Smooth:
    v = float(value)
    zero = lambda x: np.zeros_like(x)
    s = Smooth([lambda x: np.full_like(x, v), zero, zero, zero], name="constant")
    s.describe = lambda: {"kind": "constant", "value": v}
    return s


@dataclass(frozen=True)
class Waveform:
    """Periodic S with period ``2 * half_period`` and zeros at ``zero + k * half_period``."""

    name: str
    f: Callable
    df: Callable
    half_period: float
    zero: float

    def __call__(self, t):
        return self.f(t)


SIN = Waveform("sin", np.sin, np.cos, math.pi, 0.0)
COS = Waveform("cos", np.cos, lambda t: -np.sin(t), math.pi, 0.5 * math.pi)
WAVEFORMS = {"sin": SIN, "cos": COS}


def _check_waveform(w: Waveform):
    # zeros at a and a+T, opposite signs on the two half-periods
    a, T = w.zero, w.half_period
    z = np.abs(w.f(np.array([a, a + T])))
    mid = w.f(np.array([a + 0.5 * T, a + 1.5 * T]))
    if np.any(z > 1e-12) or not mid[0] * mid[1] < 0:
        raise SchemaError(f"waveform {w.name!r} lacks alternating zeros at offset {a:g}")


def _probe(lo, hi, n=65):
    return np.geomspace(lo, hi, n) if lo > 0 else np.linspace(lo, hi, n)


@dataclass(frozen=True)
class ChirpSpec:
    """y(x) = p(x) S(q(x)) on (0, domain_end]."""

    alpha: float
    beta: float
    amplitude: Smooth | None = None
    phase: Smooth | None = None
    waveform: Waveform = SIN
    domain_end: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0 or not self.beta > 0:
            raise SchemaError(f"alpha and beta must be positive, got {self.alpha}, {self.beta}")
        if not self.domain_end > 0:
            raise SchemaError("domain_end must be positive")
        if self.amplitude is None:
            object.__setattr__(self, "amplitude", PowerLaw(self.alpha))
        if self.phase is None:
            object.__setattr__(self, "phase", PowerLaw(-self.beta))
        _check_waveform(self.waveform)
        x = _probe(self.domain_end * 1e-6, self.domain_end)
        p, q = self.amplitude(x), self.phase(x)
        if np.any(p <= 0) or np.any(np.diff(p) <= 0):
            raise SchemaError("amplitude must be positive and increasing on (0, c]")
        if np.any(q <= 0) or np.any(np.diff(q) >= 0):
            raise SchemaError("phase must be positive and decreasing on (0, c]")

    def y(self, x):
        return self.amplitude(x) * self.waveform.f(self.phase(x))

    def dy(self, x):
        q = self.phase(x)
        return (self.amplitude.d(x) * self.waveform.f(q)
                + self.amplitude(x) * self.phase.d(x) * self.waveform.df(q))

    def q_inverse(self, u):
        return self.phase.inverse(u, self.domain_end * 1e-12, self.domain_end, False)

    def describe(self):
        return {"family": "chirp", "alpha": self.alpha, "beta": self.beta,
                "waveform": self.waveform.name, "domain_end": self.domain_end,
                "amplitude": self.amplitude.describe(), "phase": self.phase.describe()}


@dataclass(frozen=True)
class SpiralSpec:
    """Polar graph r = f(phi) for phi >= phi_start."""

    alpha: float
    profile: Smooth | None = None
    phi_start: float = 2 * math.pi
    orientation: str = "counterclockwise"

    def __post_init__(self):
        if not self.alpha > 0:
            raise SchemaError(f"alpha must be positive, got {self.alpha}")
        if not self.phi_start >= 0:
            raise SchemaError("phi_start must be nonnegative")
        if self.orientation not in ("counterclockwise", "clockwise"):
            raise SchemaError(f"unknown orientation {self.orientation!r}")
        if self.profile is None:
            object.__setattr__(self, "profile", PowerLaw(-self.alpha))

    def describe(self):
        return {"family": "spiral", "alpha": self.alpha, "phi_start": self.phi_start,
                "orientation": self.orientation, "profile": self.profile.describe()}


@dataclass(frozen=True)
class PhaseSpec:
    """Phase trajectory (x, x') of x(t) = p(t) sin t for t >= t_start."""

    alpha: float
    amplitude: Smooth | None = None
    t_start: float = 2 * math.pi

    def __post_init__(self):
        # alpha = 0 is the harmonic limit p = 1, admitted for testing
        if not self.alpha >= 0:
            raise SchemaError(f"alpha must be nonnegative, got {self.alpha}")
        if not self.t_start > 0:
            raise SchemaError("t_start must be positive")
        if self.amplitude is None:
            object.__setattr__(self, "amplitude", PowerLaw(-self.alpha))
        if self.amplitude.order < 2:
            raise SchemaError("phase amplitude needs first and second derivatives")
        t = _probe(self.t_start, self.t_start * 1e4)
        p = self.amplitude(t)
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise SchemaError("amplitude must be positive on [t_start, inf)")

    def _p(self, t, order=0):
        v = self.amplitude.d(t, order)
        if not np.all(np.isfinite(v)):
            bad = np.atleast_1d(t)[~np.isfinite(np.atleast_1d(v))][0]
            raise NumericDomainError(f"amplitude derivative {order} not finite at t={bad!r}")
        return v

    def x(self, t):
        return self._p(t) * np.sin(t)

    def xdot(self, t):
        return self._p(t, 1) * np.sin(t) + self._p(t) * np.cos(t)

    def xddot(self, t):
        p, p1, p2 = self._p(t), self._p(t, 1), self._p(t, 2)
        return (p2 - p) * np.sin(t) + 2 * p1 * np.cos(t)

    def radicand(self, t):
        p, p1 = self._p(t), self._p(t, 1)
        g = p1 / p
        return 1.0 + g * g * np.sin(t) ** 2 + g * np.sin(2 * t)

    def r(self, t):
        return self._p(t) * np.sqrt(self.radicand(t))

    def drdt(self, t):
        p, p1, p2 = self._p(t), self._p(t, 1), self._p(t, 2)
        s, c = np.sin(t), np.cos(t)
        num = 2 * p * p1 * c * c + 0.5 * (2 * p1 * p1 + p * p2) * np.sin(2 * t) + p1 * p2 * s * s
        return num / self.r(t)

    def phase_rate(self, t):
        """d/dt of atan2(-x', x)."""
        x, v, a = self.x(t), self.xdot(t), self.xddot(t)
        return (v * v - x * a) / (x * x + v * v)

    def describe(self):
        return {"family": "phase", "alpha": self.alpha, "t_start": self.t_start,
                "amplitude": self.amplitude.describe()}


class Polyline:
    """Immutable ordered planar point sequence with bounding box and meta."""

    __slots__ = ("_xy", "meta", "bbox")

    def __init__(self, points, meta=None):
        xy = np.array(points, dtype=float, copy=True).reshape(-1, 2)
        if xy.shape[0] < 2:
            raise ValueError("a polyline needs at least 2 points")
        if not np.all(np.isfinite(xy)):
            raise NumericDomainError("polyline contains non-finite coordinates")
        step = np.diff(xy, axis=0)
        if np.any((step[:, 0] == 0) & (step[:, 1] == 0)):
            raise ValueError("consecutive polyline points must be distinct")
        xy.flags.writeable = False
        self._xy = xy
        self.meta = dict(meta or {})
        lo = xy.min(axis=0)
        hi = xy.max(axis=0)
        self.bbox = ((float(lo[0]), float(lo[1])), (float(hi[0]), float(hi[1])))

    @classmethod
    def from_xy(cls, x, y, meta=None):
        return cls(np.column_stack([np.asarray(x, float), np.asarray(y, float)]), meta)

    @property
    def points(self):
        return self._xy

    @property
    def x(self):
        return self._xy[:, 0]

    @property
    def y(self):
        return self._xy[:, 1]

    def __len__(self):
        return self._xy.shape[0]

    @property
    def diameter(self) -> float:
        (x0, y0), (x1, y1) = self.bbox
        return math.hypot(x1 - x0, y1 - y0)

    def segment_lengths(self):
        d = np.diff(self._xy, axis=0)
        return np.hypot(d[:, 0], d[:, 1])

    def max_segment(self) -> float:
        return float(self.segment_lengths().max())


def _dedupe(x, y, s):
    keep = np.ones(x.size, dtype=bool)
    keep[1:] = (np.diff(x) != 0) | (np.diff(y) != 0)
    return x[keep], y[keep], s[keep]


def _refine(s, evaluate, max_segment, max_points=MAX_POINTS, rounds=16):
    """Subdivide parameter steps uniformly until every chord is <= max_segment."""
    x, y = evaluate(s)
    for _ in range(rounds):
        L = np.hypot(np.diff(x), np.diff(y))
        m = np.ceil(L / max_segment).astype(np.int64)
        np.maximum(m, 1, out=m)
        if m.max() == 1:
            return s, x, y
        total = int(m.sum()) + 1
        if total > max_points:
            raise ResourceLimitError(
                f"refining to max_segment={max_segment:g} needs {total} points (cap {max_points})",
                cap=max_points)
        start = np.cumsum(m) - m
        off = np.arange(total - 1) - np.repeat(start, m)
        s_new = np.empty(total)
        s_new[:-1] = np.repeat(s[:-1], m) + off * np.repeat(np.diff(s) / m, m)
        s_new[-1] = s[-1]
        s = s_new
        x, y = evaluate(s)
    raise PrecisionError(f"could not refine below max_segment={max_segment:g}")


def _finite_or_raise(values, params, what):
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise NumericDomainError(f"{what} not finite at {params[bad][0]!r}")


def sample_chirp(spec: ChirpSpec, tau_min: float, points_per_period: int = 64,
                 max_segment: float | None = None, max_periods: int = MAX_PERIODS,
                 max_points: int = MAX_POINTS) -> Polyline:
    """Graph of y = p(tau) S(q(tau)) on [tau_min, c], sampled uniformly in q.

    Samples sit half a step away from the zeros ``a + k T`` of S, so every
    zero of y in range falls strictly between two samples with opposite signs.
    """
    c = spec.domain_end
    if not (0 < tau_min < c):
        raise InvalidDomainError(f"need 0 < tau_min < domain_end, got tau_min={tau_min!r}, c={c!r}")
    if points_per_period < 8:
        raise SchemaError("points_per_period must be at least 8")
    T, a = spec.waveform.half_period, spec.waveform.zero
    u_lo, u_hi = float(spec.phase(c)), float(spec.phase(tau_min))
    periods = (u_hi - u_lo) / (2 * T)
    if periods > max_periods:
        raise ResourceLimitError(
            f"{periods:.3g} periods over [tau_min, c] exceed the cap of {max_periods}", cap=max_periods)
    m = math.ceil(points_per_period / 2)
    du = T / m
    j0 = math.floor((u_lo - a) / du - 0.5) + 1
    j1 = math.ceil((u_hi - a) / du - 0.5) - 1
    u = np.concatenate([[u_lo], a + (np.arange(j0, j1 + 1) + 0.5) * du, [u_hi]])
    u = u[np.concatenate([[True], np.diff(u) > 0])]

    def evaluate(uu):
        tau = spec.q_inverse(uu)
        tau[0], tau[-1] = c, tau_min
        yy = spec.amplitude(tau) * spec.waveform.f(uu)
        _finite_or_raise(yy, tau, "chirp value")
        return tau, yy

    if max_segment is not None:
        u, tau, yv = _refine(u, evaluate, max_segment, max_points)
    else:
        tau, yv = evaluate(u)
    tau, yv, _ = _dedupe(tau[::-1], yv[::-1], u[::-1])
    meta = {"spec": spec.describe(), "tau_min": tau_min, "points_per_period": points_per_period,
            "max_segment": max_segment}
    return Polyline.from_xy(tau, yv, meta)


def sample_spiral(spec: SpiralSpec, phi_end: float, points_per_turn: int = 64,
                  max_segment: float | None = None, max_points: int = MAX_POINTS) -> Polyline:
    """Cartesian points of r = f(phi) on [phi_start, phi_end]."""
    if not phi_end > spec.phi_start:
        raise InvalidDomainError(f"phi_end={phi_end!r} must exceed phi_start={spec.phi_start!r}")
    if points_per_turn < 16:
        raise SchemaError("points_per_turn must be at least 16")
    n = math.ceil((phi_end - spec.phi_start) * points_per_turn / (2 * math.pi))
    if n + 1 > max_points:
        raise ResourceLimitError(f"{n + 1} samples exceed the cap of {max_points}", cap=max_points)
    phi = np.linspace(spec.phi_start, phi_end, n + 1)
    sgn = -1.0 if spec.orientation == "clockwise" else 1.0

    def evaluate(ph):
        r = spec.profile(ph)
        _finite_or_raise(r, ph, "spiral profile")
        return r * np.cos(ph), sgn * r * np.sin(ph)

    if max_segment is not None:
        phi, x, y = _refine(phi, evaluate, max_segment, max_points)
    else:
        x, y = evaluate(phi)
    x, y, _ = _dedupe(x, y, phi)
    meta = {"spec": spec.describe(), "phi_end": phi_end, "points_per_turn": points_per_turn,
            "max_segment": max_segment}
    return Polyline.from_xy(x, y, meta)


def sample_phase_curve(spec: PhaseSpec, t_end: float, points_per_period: int = 64,
                       max_segment: float | None = None, max_points: int = MAX_POINTS) -> Polyline:
    """Points (x(t), x'(t)) with analytic x'."""
    if not t_end > spec.t_start:
        raise InvalidDomainError(f"t_end={t_end!r} must exceed t_start={spec.t_start!r}")
    if points_per_period < 1:
        raise SchemaError("points_per_period must be positive")
    n = math.ceil((t_end - spec.t_start) * points_per_period / (2 * math.pi))
    if n + 1 > max_points:
        raise ResourceLimitError(f"{n + 1} samples exceed the cap of {max_points}", cap=max_points)
    t = np.linspace(spec.t_start, t_end, n + 1)

    def evaluate(tt):
        return spec.x(tt), spec.xdot(tt)

    if max_segment is not None:
        t, x, v = _refine(t, evaluate, max_segment, max_points)
    else:
        x, v = evaluate(t)
    x, v, _ = _dedupe(x, v, t)
    meta = {"spec": spec.describe(), "t_end": t_end, "points_per_period": points_per_period,
            "max_segment": max_segment}
    return Polyline.from_xy(x, v, meta)


def eval_r(spec: PhaseSpec, t):
    """Distance of the phase point from the origin, vectorized over ``t``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < spec.t_start):
        raise InvalidDomainError(f"t must be >= t_start={spec.t_start!r}")
    rad = spec.radicand(t)
    if np.any(~(rad > 0)):
        bad = np.atleast_1d(t)[~(np.atleast_1d(rad) > 0)][0]
        raise NumericDomainError(f"radicand of r(t) is not positive at t={bad!r}")
    return spec.amplitude(t) * np.sqrt(rad)


def _wrap(d):
    return (d + math.pi) % (2 * math.pi) - math.pi


def unwrap_phase(spec: PhaseSpec, t_grid, convention: str = "mirrored"):
    """Continuous angle of the phase point along ``t_grid``.

    ``mirrored`` uses atan2(-x', x) (angle increasing for large t); ``direct``
    uses atan2(x', x).  Steps where the angle could move by pi/2 or more
    (judged from the wrapped difference and the analytic rate) are bisected.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1 or np.any(np.diff(t) <= 0):
        raise InvalidDomainError("t_grid must be a strictly ascending 1-d sequence")
    if t[0] < spec.t_start:
        raise InvalidDomainError(f"t_grid starts before t_start={spec.t_start!r}")
    if convention not in ("mirrored", "direct"):
        raise SchemaError(f"unknown convention {convention!r}")
    sgn = -1.0 if convention == "mirrored" else 1.0

    def angle(tt):
        x, v = spec.x(tt), spec.xdot(tt)
        dead = (x == 0) & (v == 0)
        if np.any(dead):
            raise DegeneratePointError(f"phase point vanishes at t={tt[dead][0]!r}")
        return np.arctan2(sgn * v, x)

    def increments(a, b, depth):
        d = _wrap(angle(b) - angle(a))
        rate = np.maximum(np.abs(spec.phase_rate(a)), np.abs(spec.phase_rate(b)))
        bad = (np.abs(d) >= 0.5 * math.pi) | ((b - a) * rate >= 0.5 * math.pi)
        if np.any(bad):
            if depth >= 60:
                raise PrecisionError("phase step could not be resolved by bisection")
            m = 0.5 * (a[bad] + b[bad])
            d[bad] = increments(a[bad], m, depth + 1) + increments(m, b[bad], depth + 1)
        return d

    phi0 = angle(t[:1])[0]
    if t.size == 1:
        return np.array([phi0])
    inc = increments(t[:-1], t[1:], 0)
    return phi0 + np.concatenate([[0.0], np.cumsum(inc)])


def monotone_onset(values) -> int | None:
    """First index from which ``values`` is strictly increasing, or None."""
    d = np.diff(np.asarray(values, dtype=float))
    if d.size == 0:
        return 0
    bad = np.flatnonzero(d <= 0)
    if bad.size == 0:
        return 0
    if bad[-1] == d.size - 1:
        return None
    return int(bad[-1] + 1)
