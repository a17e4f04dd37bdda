"""Closed-form dimensions and the validation sweep that checks estimates against them."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .boxcount import EpsilonLadder, estimate_box_dim
from .curves import ChirpSpec, PhaseSpec, SpiralSpec, sample_chirp, sample_phase_curve, sample_spiral
from .errors import FracDimError, InsufficientResolutionError, InvalidDomainError, SchemaError


def spiral_dim(alpha: float, rectifiable_branch: bool = False) -> float:
    """2/(1+alpha) for alpha in (0, 1).

    With ``rectifiable_branch`` set, alpha >= 1 returns 1 (finite length).
    """
    if rectifiable_branch and alpha >= 1:
        return 1.0
    if not 0 < alpha < 1:
        raise InvalidDomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    return 2.0 / (1.0 + alpha)


def chirp_dim(alpha: float, beta: float = 1.0) -> float:
    """2 - (alpha+1)/(beta+1) for 0 < alpha <= beta."""
    if not 0 < alpha <= beta:
        raise InvalidDomainError(f"need 0 < alpha <= beta, got alpha={alpha!r}, beta={beta!r}")
    return 2.0 - (alpha + 1.0) / (beta + 1.0)


def dimension_pair(alpha: float):
    """(phase dimension, oscillatory dimension) = (2/(1+alpha), (3-alpha)/2)."""
    if not 0 < alpha < 1:
        raise InvalidDomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    return 2.0 / (1.0 + alpha), (3.0 - alpha) / 2.0


@dataclass
class ValidationRow:
    family: str
    params: tuple  # (alpha, beta); beta is None outside the chirp family
    theoretical: float
    estimated: float | None
    abs_error: float | None
    passed: bool
    tolerance: float
    window: tuple | None = None
    reason: str | None = None


FAMILIES = ("spiral", "chirp", "phase-curve")
MIN_OCTAVES = 8

# Settings that reproduce the dimension formulas at laptop cost; see README for
# the finite-scale reasoning behind phi_start and the per-alpha finest rungs.
DEFAULTS = {
    "spiral": {"phi_start": 0.15, "phi_end": 1e4 * math.pi, "points_per_turn": 64,
               "k_last": {"0.25": 11, "0.5": 14, "0.75": 17}},
    "chirp": {"beta": 1.0, "tau_min": 1e-4, "points_per_period": 64, "k_last": 12},
    "phase-curve": {"t_start": 1.0, "t_end": 1e4 * math.pi, "points_per_period": 64,
                    "k_last": {"0.5": 15, "0.75": 17}},
}
DEFAULT_SWEEP = {"family": "spiral", "alphas": [0.25, 0.5, 0.75], "tolerance": 0.05}


def _k_last(setting, alpha):
    if isinstance(setting, dict):
        for key, val in setting.items():
            if float(key) == alpha:
                return int(val)
        raise SchemaError(f"k_last has no entry for alpha={alpha!r}")
    return int(setting)


def _sample(family, alpha, cfg, h):
    if family == "spiral":
        spec = SpiralSpec(alpha, phi_start=cfg["phi_start"])
        return sample_spiral(spec, cfg["phi_end"], cfg["points_per_turn"], max_segment=h)
    if family == "chirp":
        spec = ChirpSpec(alpha, cfg["beta"])
        return sample_chirp(spec, cfg["tau_min"], cfg["points_per_period"], max_segment=h)
    spec = PhaseSpec(alpha, t_start=cfg["t_start"])
    return sample_phase_curve(spec, cfg["t_end"], cfg["points_per_period"], max_segment=h)


def estimate_for(family, alpha, cfg, threads=None):
    """Sample the family member and estimate its box dimension on a dyadic ladder.

    Segments are refined to half the finest rung unless ``max_segment`` is set.
    A ladder shorter than ``min_octaves`` octaves is refused rather than fitted.
    """
    k_last = _k_last(cfg["k_last"], alpha)
    h = cfg.get("max_segment") or 2.0 ** -(k_last + 1)
    curve = _sample(family, alpha, cfg, h)
    ladder = EpsilonLadder.for_curve(curve, k_last, cfg.get("k_first"))
    octaves = math.log2(ladder.eps_values[0] / ladder.eps_values[-1])
    need = cfg.get("min_octaves", MIN_OCTAVES)
    if octaves < need:
        raise InsufficientResolutionError(
            f"ladder spans {octaves:.3g} octaves, fewer than {need}",
            {"eps_first": ladder.eps_values[0], "eps_last": ladder.eps_values[-1]})
    return estimate_box_dim(curve, ladder, threads=threads)


def theoretical(family, alpha, beta=1.0):
    if family == "chirp":
        return chirp_dim(alpha, beta)
    return spiral_dim(alpha)


def validate(config, threads=None):
    """One ValidationRow per alpha of the sweep; a pure function of ``config``.

    ``config``: {"family", "alphas", "tolerance", "settings"}; settings
    override DEFAULTS for the family.  Estimator errors become failed rows
    with the reason recorded.
    """
    family = config["family"]
    if family not in FAMILIES:
        raise SchemaError(f"unknown family {family!r}")
    alphas = [float(a) for a in config["alphas"]]
    if not alphas:
        raise SchemaError("empty sweep")
    tol = float(config.get("tolerance", 0.05))
    cfg = dict(DEFAULTS[family])
    cfg.update(config.get("settings", {}))
    beta = float(cfg["beta"]) if family == "chirp" else None
    theo = [theoretical(family, a, beta) for a in alphas]  # domain errors abort the sweep

    def row(i):
        alpha = alphas[i]
        try:
            est = estimate_for(family, alpha, cfg, threads)
        except FracDimError as err:
            return ValidationRow(family, (alpha, beta), theo[i], None, None, False, tol, None,
                                 f"{type(err).__name__}: {err}")
        err_abs = abs(est.dimension - theo[i])
        ok = err_abs <= tol
        notes = ([] if ok else ["estimate outside tolerance"]) + list(est.flags)
        return ValidationRow(family, (alpha, beta), theo[i], est.dimension, err_abs, ok, tol,
                             tuple(est.window), "; ".join(notes) or None)

    # rows hold tens of millions of points each, so they run in turn and the
    # thread budget goes to the rungs inside each estimate
    return [row(i) for i in range(len(alphas))]
