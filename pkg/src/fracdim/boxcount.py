"""Box counting, epsilon-neighborhood area and dimension fits for polylines."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .curves import Polyline
from .errors import InsufficientResolutionError, PrecisionError, ResourceLimitError, SchemaError

BITMAP_CELLS = 2**31
MAX_INTERVAL_ROWS = 6 * 10**7
MAX_GRID_CELLS = 2.0**50
MIN_WINDOW = 5


def thread_count() -> int:
    """Worker threads, capped by ``FRACDIM_THREADS`` (default: hardware count)."""
    env = os.environ.get("FRACDIM_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise SchemaError(f"FRACDIM_THREADS must be an integer, got {env!r}") from None
        return max(1, n)
    return os.cpu_count() or 1


def parallel_map(fn, items, threads=None):
    items = list(items)
    n = min(threads or thread_count(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class EpsilonLadder:
    eps_values: tuple
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        e = np.asarray(self.eps_values, dtype=float)
        if e.ndim != 1 or e.size < 1 or np.any(~(e > 0)):
            raise SchemaError("ladder values must be positive")
        if e.size > 1:
            ratio = e[:-1] / e[1:]
            if np.any(ratio < 1.2) or np.any(ratio > 4):
                raise SchemaError("consecutive ladder ratios must lie in [1.2, 4]")
        object.__setattr__(self, "eps_values", tuple(float(v) for v in e))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    def __len__(self):
        return len(self.eps_values)

    @classmethod
    def dyadic(cls, k_first: int, k_last: int, origin=(0.0, 0.0), eps0: float = 1.0):
        """Rungs eps0 * 2**-k for k = k_first..k_last."""
        return cls(tuple(eps0 * 2.0 ** -k for k in range(k_first, k_last + 1)), origin)

    @classmethod
    def for_curve(cls, curve: Polyline, k_last: int, k_first: int | None = None):
        """Dyadic ladder anchored at the bbox corner, starting at the first rung below the diameter."""
        (x0, y0), (x1, y1) = curve.bbox
        if k_first is None:
            k_first = math.ceil(-math.log2(max(x1 - x0, y1 - y0)))
        return cls.dyadic(k_first, k_last, origin=(x0, y0))


@dataclass(frozen=True)
class BoxCountTable:
    eps: tuple
    counts: tuple

    def rows(self):
        return list(zip(self.eps, self.counts))


@dataclass
class DimEstimate:
    dimension: float
    raw_slope: float
    stderr: float
    r2: float
    window: tuple
    table: BoxCountTable
    flags: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


@dataclass
class MinkowskiEstimate:
    s: float
    band: tuple
    degenerate_flag: bool
    eps: tuple
    areas: tuple
    ratios: tuple
    tail_slope: float
    reasons: list = field(default_factory=list)


def _check_precision(curve: Polyline, eps: float):
    if not eps > 0:
        raise SchemaError(f"eps must be positive, got {eps!r}")
    if eps < 1e3 * np.finfo(float).eps * curve.diameter:
        raise PrecisionError(f"eps={eps:g} is below the resolvable floor for diameter {curve.diameter:g}")


def count_boxes(curve: Polyline, eps: float, origin=None) -> int:
    """Closed eps-grid cells (anchored at ``origin``) met by the polyline."""
    _check_precision(curve, eps)
    (bx0, by0), (bx1, by1) = curve.bbox
    ox, oy = (bx0, by0) if origin is None else (float(origin[0]), float(origin[1]))
    umin, umax = (bx0 - ox) / eps, (bx1 - ox) / eps
    vmin, vmax = (by0 - oy) / eps, (by1 - oy) / eps
    if max(abs(umin), abs(umax), abs(vmin), abs(vmax)) > 2.0**50:
        raise PrecisionError("grid indices exceed exact integer range; move the origin closer")
    i0, j0 = math.floor(umin) - 1, math.floor(vmin) - 1
    nx, ny = math.floor(umax) - i0 + 2, math.floor(vmax) - j0 + 2
    cells = nx * ny
    if cells >= 2**62:
        raise ResourceLimitError(f"grid of {cells} cells cannot be indexed", cap=2**62)
    x, y = curve.x, curve.y
    if cells <= BITMAP_CELLS:
        bits = np.zeros((cells + 63) // 64, dtype=np.uint64)
        _kernels.walk_cells(x, y, ox, oy, eps, i0, j0, ny, bits, np.empty(0, dtype=np.int64))
        return int(np.bitwise_count(bits).sum(dtype=np.int64))
    keys = np.empty(max(1024, 4 * len(curve)), dtype=np.int64)
    keys, n = _kernels.walk_cells(x, y, ox, oy, eps, i0, j0, ny, np.empty(0, dtype=np.uint64), keys)
    return int(np.unique(keys[:n]).size)


def count_table(curve: Polyline, ladder: EpsilonLadder, threads=None) -> BoxCountTable:
    counts = parallel_map(lambda e: count_boxes(curve, e, ladder.origin), ladder.eps_values, threads)
    return BoxCountTable(ladder.eps_values, tuple(counts))


def neighborhood_area(curve: Polyline, eps: float, resolution_factor: int = 8, origin=None,
                      max_cells: float = MAX_GRID_CELLS,
                      max_rows: int = MAX_INTERVAL_ROWS) -> float:
    """Area of {p : d(p, curve) < eps} on a grid of side eps/resolution_factor.

    A cell counts when its center lies strictly within eps of some segment.
    """
    if not eps > 0:
        raise SchemaError(f"eps must be positive, got {eps!r}")
    if int(resolution_factor) != resolution_factor or resolution_factor < 4:
        raise SchemaError("resolution_factor must be an integer >= 4")
    h = eps / resolution_factor
    _check_precision(curve, h)
    (bx0, by0), (bx1, by1) = curve.bbox
    ox, oy = (bx0, by0) if origin is None else (float(origin[0]), float(origin[1]))
    cells = ((bx1 - bx0 + 2 * eps) / h + 1) * ((by1 - by0 + 2 * eps) / h + 1)
    if cells > max_cells:
        raise ResourceLimitError(
            f"neighborhood grid of ~{cells:.3g} cells exceeds the cap of {max_cells:.3g}; "
            "use a larger eps or a smaller resolution_factor", cap=max_cells)
    buf = np.empty((max(4096, len(curve)), 3), dtype=np.int64)
    buf, n = _kernels.stadium_columns(curve.x, curve.y, eps, h, ox, oy, buf)
    if n > max_rows:
        raise ResourceLimitError(f"neighborhood grid produced {n} interval rows (cap {max_rows})",
                                 cap=max_rows)
    rows = buf[:n]
    rows = rows[np.lexsort((rows[:, 1], rows[:, 0]))]
    return float(_kernels.merged_interval_cells(rows)) * h * h


def _fit(le, ln):
    n = le.size
    slope, icpt = np.polyfit(le, ln, 1)
    resid = ln - (slope * le + icpt)
    ss_res = float(resid @ resid)
    dev = ln - ln.mean()
    ss_tot = float(dev @ dev)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    sxx = float(((le - le.mean()) ** 2).sum())
    stderr = math.sqrt(ss_res / (n - 2) / sxx) if n > 2 and sxx > 0 else 0.0
    return float(slope), float(icpt), stderr, r2


def fit_table(table: BoxCountTable, admissible, min_window: int = MIN_WINDOW, diagnostics=None):
    """Best contiguous admissible window by r^2 (ties: longer, then finer)."""
    eps = np.asarray(table.eps, dtype=float)
    le = np.log(1.0 / eps)
    ln = np.log(np.asarray(table.counts, dtype=float))
    best = None
    n = eps.size
    for i in range(n):
        for j in range(i + min_window - 1, n):
            if not all(admissible[i:j + 1]):
                break
            slope, _, se, r2 = _fit(le[i:j + 1], ln[i:j + 1])
            key = (round(r2, 12), j - i, i)
            if best is None or key > best[0]:
                best = (key, slope, se, r2, (i, j))
    if best is None:
        raise InsufficientResolutionError(
            f"no admissible window of {min_window} rungs", diagnostics or {})
    _, slope, se, r2, window = best
    flags = []
    if not 1.0 <= slope <= 2.0:
        flags.append("raw_slope_out_of_range")
    if not 0.9 <= slope <= 2.1:
        flags.append("raw_slope_invalid")
    return DimEstimate(dimension=min(2.0, max(1.0, slope)), raw_slope=slope, stderr=se, r2=r2,
                       window=window, table=table, flags=flags, diagnostics=diagnostics or {})


def estimate_box_dim(curve: Polyline, ladder: EpsilonLadder, min_window: int = MIN_WINDOW,
                     threads=None) -> DimEstimate:
    """Slope of log N against log(1/eps) over the best admissible window.

    The largest rung is never used, nor any rung with eps < 2 * (longest segment).
    """
    if len(ladder) < 6:
        raise SchemaError("ladder needs at least 6 rungs")
    seg = curve.max_segment()
    saturated = [seg > 0.5 * e for e in ladder.eps_values]
    admissible = [False] + [not s for s in saturated[1:]]
    diag = {"max_segment": seg, "saturated": saturated, "admissible": admissible}
    if sum(admissible) < min_window:
        raise InsufficientResolutionError(
            f"only {sum(admissible)} admissible rungs (longest segment {seg:g})", diag)
    table = count_table(curve, ladder, threads)
    return fit_table(table, admissible, min_window, diag)


DRIFT_SLOPE = 0.07


def band_verdict(ratios, eps, ratio_bound=10.0, drift_slope=DRIFT_SLOPE):
    """Degeneracy heuristic for a finite sequence of scaled contents.

    Degenerate when the band ratio exceeds ``ratio_bound``, or when the
    second half of the ladder is monotone and its log-log slope against eps
    exceeds ``drift_slope`` in magnitude (a trend to 0 or infinity).
    """
    r = np.asarray(ratios, dtype=float)
    e = np.asarray(eps, dtype=float)
    reasons = []
    if np.any(~(r > 0)) or np.any(~np.isfinite(r)):
        return True, float("nan"), ["nonpositive_or_nonfinite"]
    lo, hi = float(r.min()), float(r.max())
    if hi / lo > ratio_bound:
        reasons.append("band_ratio")
    half = r.size // 2
    tail_r, tail_e = r[half:], e[half:]
    slope = float(np.polyfit(np.log(tail_e), np.log(tail_r), 1)[0]) if tail_r.size >= 2 else 0.0
    d = np.diff(tail_r)
    monotone = bool(np.all(d > 0) or np.all(d < 0))
    if monotone and abs(slope) > drift_slope:
        reasons.append("monotone_drift")
    return bool(reasons), slope, reasons


def minkowski_band(curve: Polyline, s: float, ladder: EpsilonLadder, resolution_factor: int = 8,
                   ratio_bound: float = 10.0, threads=None, areas=None) -> MinkowskiEstimate:
    """Band of |A_eps| / eps^(2-s) across the ladder, with the degeneracy flag.

    ``areas`` may pass precomputed neighborhood areas for the same ladder.
    """
    if not 1.0 <= s <= 2.0:
        raise SchemaError(f"s must lie in [1, 2], got {s!r}")
    if len(ladder) < 6:
        raise SchemaError("ladder needs at least 6 rungs")
    eps = np.asarray(ladder.eps_values)
    if areas is None:
        areas = parallel_map(lambda e: neighborhood_area(curve, e, resolution_factor, ladder.origin),
                             ladder.eps_values, threads)
    areas = np.asarray(areas, dtype=float)
    ratios = areas / eps ** (2.0 - s)
    flag, slope, reasons = band_verdict(ratios, eps, ratio_bound)
    return MinkowskiEstimate(s=s, band=(float(ratios.min()), float(ratios.max())), degenerate_flag=flag,
                             eps=tuple(eps.tolist()), areas=tuple(areas.tolist()),
                             ratios=tuple(ratios.tolist()), tail_slope=slope, reasons=reasons)
