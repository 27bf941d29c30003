"""Canned control scripts and obstacle courses.

These provide the scripted analogs of the data-collection drives and the
drift course: a varied-curvature training sweep, a counter-clockwise drift
command sequence, and the loose/tight gate layouts.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError
from .evalkit import CAR_WIDTH, DEFAULT_CAR_LENGTH, DriftScenario, Rect
from .replay import CommandBuffer
from .simcore import AV_LIMIT, ControlScript, ScriptSegment

LOOSE_GAP = 2.13   # m
TIGHT_GAP = 0.81   # m
BOX_SIZE = 0.56    # m, square cardboard-box obstacle

# Speeds and curvature magnitudes visited by the training sweep.  Chosen to
# bracket the circle-test speed (2 m/s) densely and to cover the commanded
# yaw-rate range used by the drift course, while respecting |v*c| <= 4.
# The low range is sampled finely (and dwelt on longer, see LOW_CURVATURE):
# small commanded yaw rates are where the inverse map must be most precise.
SWEEP_SPEEDS = (1.0, 1.5, 2.0, 2.5, 3.0, 4.0)
SWEEP_CURVATURES = (0.05, 0.06, 0.07, 0.08, 0.09, 0.1, 0.11, 0.12, 0.13,
                    0.14, 0.15, 0.16, 0.18, 0.2, 0.22, 0.25, 0.3, 0.35, 0.4,
                    0.45, 0.5, 0.55, 0.6, 0.63, 0.65, 0.7, 0.75, 0.8, 0.85,
                    0.9, 0.95, 1.0, 1.05, 1.1, 1.15)


LOW_CURVATURE = 0.25   # segments at or below this magnitude dwell twice as long


def training_sweep_script(dwell: float = 4.0,
                          speeds=SWEEP_SPEEDS,
                          curvatures=SWEEP_CURVATURES,
                          low_boost: float = 2.0) -> ControlScript:
    """Piecewise-constant sweep over (speed, +-curvature) combinations.

    Per speed, curvature walks up the positive magnitudes and back down the
    negative ones, so consecutive commands differ by one small step and the
    yaw rate crosses zero only once per speed block.  This keeps transition
    transients from polluting the low-curvature training rows.  Segments at
    |c| <= LOW_CURVATURE dwell low_boost times longer: small yaw rates need
    the most resolution in the learned inverse but contribute the least to
    a squared-error fit.  Pairs with |v*c| > AV_LIMIT are skipped.
    """
    if dwell <= 0:
        raise ValidationError("dwell must be positive")
    if low_boost < 1.0:
        raise ValidationError("low_boost must be >= 1")
    mags = sorted(curvatures)
    segs = []
    t = 0.0
    for v in speeds:
        ordered = [c for c in mags if abs(v * c) <= AV_LIMIT]
        for c in ordered + [-c for c in reversed(ordered)]:
            segs.append(ScriptSegment(t, v, c))
            t += dwell * (low_boost if abs(c) <= LOW_CURVATURE else 1.0)
    if not segs:
        raise ValidationError("no feasible (v, c) pairs in the sweep")
    return ControlScript(tuple(segs))


def _segment_dwell(c: float, dwell: float, low_boost: float) -> float:
    return dwell * (low_boost if abs(c) <= LOW_CURVATURE else 1.0)


def sweep_duration(script: ControlScript, dwell: float = 4.0,
                   low_boost: float = 2.0) -> float:
    """Total time covered by a sweep built with the same dwell settings."""
    last = script.segments[-1]
    return last.t_start + _segment_dwell(last.c, dwell, low_boost)


# Drift command sequence: straight approach, one aggressive counter-clockwise
# arc whose ideal correction saturates the actuator, straight exit.
DRIFT_APPROACH = (2.0, 0.0, 1.5)   # (v, c, seconds)
DRIFT_TURN = (3.0, 0.8, 2.0)
DRIFT_EXIT = (2.0, 0.0, 1.0)


def drift_buffer(rate: float = 20.0) -> CommandBuffer:
    """The loose-drift teleoperation buffer, one (v, av) row per tick."""
    rows = []
    for v, c, seconds in (DRIFT_APPROACH, DRIFT_TURN, DRIFT_EXIT):
        n = int(round(seconds * rate))
        rows.extend([(v, v * c)] * n)
    return CommandBuffer(rows=rows)


def drift_duration() -> float:
    return DRIFT_APPROACH[2] + DRIFT_TURN[2] + DRIFT_EXIT[2]


def _gate_scenario(gap: float, cone: tuple[float, float],
                   direction: tuple[float, float]) -> DriftScenario:
    """Cone plus a square box whose near face sits gap meters from the cone."""
    d = np.asarray(direction, dtype=float)
    d = d / np.hypot(*d)
    center = np.asarray(cone) + d * (gap + BOX_SIZE / 2.0)
    angle = math.atan2(d[1], d[0])
    box = Rect(cx=float(center[0]), cy=float(center[1]),
               w=BOX_SIZE, h=BOX_SIZE, angle=angle)
    return DriftScenario(boxes=(box,), cones=(cone,), gap_width=gap,
                         car_width=CAR_WIDTH, car_length=DEFAULT_CAR_LENGTH)


# The corrected counter-clockwise arc peaks near x=4.2 at y=1.3; the gate is
# laid radially outward there so the car threads between cone (inside the
# arc) and box (outside).
GATE_CONE = (3.6, 1.3)
GATE_DIRECTION = (1.0, 0.0)


def loose_scenario() -> DriftScenario:
    return _gate_scenario(LOOSE_GAP, GATE_CONE, GATE_DIRECTION)


def tight_scenario() -> DriftScenario:
    return _gate_scenario(TIGHT_GAP, GATE_CONE, GATE_DIRECTION)
