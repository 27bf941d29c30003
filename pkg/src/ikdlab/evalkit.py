"""Quantitative evaluation of executed trajectories.

Circle tests fit the steady-state trajectory with an algebraic circle fit
and compare measured curvature against the commanded one; drift scenarios
score obstacle clearance, collisions, gate passage, and the tightest turn
radius along the run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, ParseError, ValidationError
from .ikd import correct
from .mlp import MlpParams
from .simcore import (ControlScript, SimTrace, SlipParams, run_scenario,
                      slip_yaw_rate)

CAR_WIDTH = 0.48            # m
DEFAULT_CAR_LENGTH = 0.5    # m
TURN_AV_FLOOR = 0.5         # rad/s, samples below this are not "turning"
TRANSIENT_MULT = 5.0        # discard the first TRANSIENT_MULT*lag_tau seconds
MIN_REVOLUTIONS = 2.0       # full circles required after the transient


def fit_circle(points) -> tuple[tuple[float, float], float]:
    """Algebraic least-squares circle fit (exact on noiseless circular data).

    Solves [2x, 2y, 1] . [a, b, k] = x^2 + y^2 for center (a, b) and
    radius sqrt(k + a^2 + b^2).

    Returns:
        ((cx, cy), radius)
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise FitError("need at least 3 (x, y) points")
    if not np.all(np.isfinite(pts)):
        raise FitError("points must be finite")
    x, y = pts[:, 0], pts[:, 1]
    A = np.column_stack([2.0 * x, 2.0 * y, np.ones_like(x)])
    rhs = x * x + y * y
    sol, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
    if rank < 3:
        raise FitError("points are collinear or otherwise degenerate")
    a, b, k = sol
    r_sq = k + a * a + b * b
    if r_sq <= 0 or not np.isfinite(r_sq):
        raise FitError("fit produced a non-positive radius")
    return (float(a), float(b)), float(np.sqrt(r_sq))


@dataclass(frozen=True)
class CircleReport:
    """Measured vs commanded curvature for one constant-command run."""

    c_commanded: float
    r_fit: float
    c_measured: float
    deviation_pct: float
    ikd_enabled: bool

    def __post_init__(self):
        if self.r_fit <= 0:
            raise ValidationError("r_fit must be positive")
        if abs(self.c_measured * self.r_fit - 1.0) > 1e-6:
            raise ValidationError("c_measured must equal 1/r_fit")
        expect = 100.0 * abs(self.c_measured - abs(self.c_commanded)) / abs(self.c_commanded)
        if abs(self.deviation_pct - expect) > 1e-6:
            raise ValidationError("deviation_pct inconsistent with curvatures")


def circle_trace(v: float, c: float, p: SlipParams,
                 model: MlpParams | None = None) -> tuple[SimTrace, float]:
    """Run the constant-command scenario used by circle_test.

    Returns the trace and the curvature actually commanded (the corrected
    one when a model is supplied).
    """
    if c == 0:
        raise ValidationError("circle test needs a nonzero curvature")
    c_cmd = correct(model, v, c).c_corrected if model is not None else c
    # Steady-state yaw rate estimate sizes the run to >= MIN_REVOLUTIONS
    # full circles after the lag transient.
    av_ss = abs(slip_yaw_rate(v * c_cmd, v, p.beta))
    av_ss = max(av_ss, 0.1)
    transient = TRANSIENT_MULT * p.lag_tau
    duration = transient + (MIN_REVOLUTIONS + 0.2) * (2.0 * math.pi / av_ss)
    trace = run_scenario(ControlScript.constant(v, c_cmd), p, duration)
    return trace, c_cmd


def circle_test(v: float, c: float, p: SlipParams,
                model: MlpParams | None = None) -> CircleReport:
    """Drive a constant (v, c) command, fit the settled trajectory, report.

    The first TRANSIENT_MULT*lag_tau seconds are discarded before fitting.
    """
    trace, _ = circle_trace(v, c, p, model)
    t = trace.times()
    keep = t >= TRANSIENT_MULT * p.lag_tau
    _, r_fit = fit_circle(trace.xy()[keep])
    c_measured = 1.0 / r_fit
    deviation = 100.0 * abs(c_measured - abs(c)) / abs(c)
    return CircleReport(c_commanded=c, r_fit=r_fit, c_measured=c_measured,
                        deviation_pct=deviation, ikd_enabled=model is not None)


@dataclass(frozen=True)
class Rect:
    """Oriented rectangle: center, full extents, rotation angle (rad)."""

    cx: float
    cy: float
    w: float
    h: float
    angle: float = 0.0

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValidationError("rectangle extents must be positive")

    def corners(self) -> np.ndarray:
        ca, sa = math.cos(self.angle), math.sin(self.angle)
        hw, hh = self.w / 2.0, self.h / 2.0
        local = np.array([(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)])
        rot = np.array([(ca, -sa), (sa, ca)])
        return local @ rot.T + np.array([self.cx, self.cy])

    def to_local(self, point) -> np.ndarray:
        ca, sa = math.cos(self.angle), math.sin(self.angle)
        px = point[0] - self.cx
        py = point[1] - self.cy
        return np.array([ca * px + sa * py, -sa * px + ca * py])


def point_rect_signed_distance(point, rect: Rect) -> float:
    """Signed distance from a point to a rectangle (negative inside)."""
    q = rect.to_local(point)
    dx = abs(q[0]) - rect.w / 2.0
    dy = abs(q[1]) - rect.h / 2.0
    outside = math.hypot(max(dx, 0.0), max(dy, 0.0))
    inside = min(max(dx, dy), 0.0)
    return outside + inside


def _point_segment_distance(p, a, b) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    closest = a + t * ab
    return float(np.hypot(*(p - closest)))


def rect_rect_signed_distance(a: Rect, b: Rect) -> float:
    """Signed distance between oriented rectangles.

    Negative while overlapping (minus the separating-axis penetration
    depth); when disjoint, the exact minimum distance between boundaries.
    """
    ca, cb = a.corners(), b.corners()
    axes = []
    for ang in (a.angle, b.angle):
        axes.append(np.array([math.cos(ang), math.sin(ang)]))
        axes.append(np.array([-math.sin(ang), math.cos(ang)]))
    gaps = []
    for axis in axes:
        pa, pb = ca @ axis, cb @ axis
        gaps.append(max(pa.min() - pb.max(), pb.min() - pa.max()))
    max_gap = max(gaps)
    if max_gap <= 0.0:
        return max_gap  # overlapping: minus the smallest penetration depth
    best = math.inf
    for pts, poly in ((ca, cb), (cb, ca)):
        for p in pts:
            for i in range(4):
                d = _point_segment_distance(p, poly[i], poly[(i + 1) % 4])
                best = min(best, d)
    return best


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(o, a, b):
        v = (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
        return int(v > 0) - int(v < 0)

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    if d1 != d2 and d3 != d4:
        return True

    def on_seg(a, b, p):
        return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))

    if d1 == 0 and on_seg(q1, q2, p1):
        return True
    if d2 == 0 and on_seg(q1, q2, p2):
        return True
    if d3 == 0 and on_seg(p1, p2, q1):
        return True
    if d4 == 0 and on_seg(p1, p2, q2):
        return True
    return False


@dataclass(frozen=True)
class DriftScenario:
    """Obstacle course: box obstacles, cone markers, and the gate width."""

    boxes: tuple
    cones: tuple
    gap_width: float
    car_width: float = CAR_WIDTH
    car_length: float = DEFAULT_CAR_LENGTH

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        object.__setattr__(self, "cones",
                           tuple((float(x), float(y)) for x, y in self.cones))
        if self.gap_width < self.car_width:
            raise ValidationError(
                f"gap {self.gap_width} m narrower than the car ({self.car_width} m)")
        if self.car_length <= 0:
            raise ValidationError("car_length must be positive")

    @classmethod
    def from_json(cls, path: str) -> "DriftScenario":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: not valid JSON ({exc})") from None
        boxes = tuple(Rect(**b) for b in raw["boxes"])
        return cls(boxes=boxes, cones=tuple(tuple(c) for c in raw["cones"]),
                   gap_width=raw["gap_width"],
                   car_width=raw.get("car_width", CAR_WIDTH),
                   car_length=raw.get("car_length", DEFAULT_CAR_LENGTH))

    def to_json(self, path: str) -> None:
        payload = {
            "boxes": [{"cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h,
                       "angle": b.angle} for b in self.boxes],
            "cones": [list(c) for c in self.cones],
            "gap_width": self.gap_width,
            "car_width": self.car_width,
            "car_length": self.car_length,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass(frozen=True)
class ClearanceReport:
    """Collision/clearance outcome of one trace against one scenario."""

    min_clearance: float
    collided: bool
    min_turn_radius: float
    cleared_gate: bool

    def __post_init__(self):
        if self.collided and self.min_clearance > 0:
            raise ValidationError("collided requires min_clearance <= 0")


def _car_rect(state, scenario: DriftScenario) -> Rect:
    return Rect(cx=state.x, cy=state.y, w=scenario.car_length,
                h=scenario.car_width, angle=state.heading)


def _gate_segment(scenario: DriftScenario):
    """Gate to thread: from the first cone to the nearest point on the first box."""
    if not scenario.cones or not scenario.boxes:
        return None
    cone = np.array(scenario.cones[0])
    box = scenario.boxes[0]
    q = box.to_local(cone)
    q[0] = np.clip(q[0], -box.w / 2.0, box.w / 2.0)
    q[1] = np.clip(q[1], -box.h / 2.0, box.h / 2.0)
    ca, sa = math.cos(box.angle), math.sin(box.angle)
    nearest = np.array([box.cx + ca * q[0] - sa * q[1],
                        box.cy + sa * q[0] + ca * q[1]])
    return cone, nearest


def drift_eval(trace: SimTrace, scenario: DriftScenario) -> ClearanceReport:
    """Sweep the oriented car rectangle along the trace and score it.

    min_clearance is the smallest signed distance from the car body to any
    obstacle; min_turn_radius is taken over samples with |yaw rate| above
    TURN_AV_FLOOR; cleared_gate requires crossing the cone-to-box gate
    segment without ever colliding.
    """
    if len(trace.states) == 0:
        raise ValidationError("trace is empty")

    min_clearance = math.inf
    for state in trace.states:
        car = _car_rect(state, scenario)
        for box in scenario.boxes:
            min_clearance = min(min_clearance, rect_rect_signed_distance(car, box))
        for cone in scenario.cones:
            min_clearance = min(min_clearance, point_rect_signed_distance(cone, car))
    if not scenario.boxes and not scenario.cones:
        min_clearance = math.inf
    collided = bool(min_clearance < 0.0)

    min_turn_radius = math.inf
    for state in trace.states:
        if abs(state.av) > TURN_AV_FLOOR:
            min_turn_radius = min(min_turn_radius, abs(state.v) / abs(state.av))

    gate = _gate_segment(scenario)
    crossed = False
    if gate is not None:
        g0, g1 = gate
        xy = trace.xy()
        for i in range(len(xy) - 1):
            if _segments_intersect(xy[i], xy[i + 1], g0, g1):
                crossed = True
                break
    cleared_gate = bool(crossed and not collided)

    return ClearanceReport(min_clearance=float(min_clearance), collided=collided,
                           min_turn_radius=float(min_turn_radius),
                           cleared_gate=cleared_gate)


_CIRCLE_HEADER = "c_commanded,r_fit,c_measured,deviation_pct,ikd_enabled"
_COMPARE_HEADER = "commanded_c,executed_c,ikd_c,deviation_pct"


def emit_report(reports, path: str) -> None:
    """Write CircleReports as CSV, one row per report (header-only if empty)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_CIRCLE_HEADER + "\n")
        for r in reports:
            fh.write(f"{repr(float(r.c_commanded))},{repr(float(r.r_fit))},"
                     f"{repr(float(r.c_measured))},{repr(float(r.deviation_pct))},"
                     f"{int(r.ikd_enabled)}\n")


def read_report_csv(path: str) -> list[CircleReport]:
    """Read CircleReports back; field identities are re-validated on load."""
    reports = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != _CIRCLE_HEADER:
            raise ParseError(f"{path}:1: expected header {_CIRCLE_HEADER!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise ParseError(f"{path}:{lineno}: expected 5 columns")
            try:
                vals = [float(p) for p in parts[:4]]
                flag = bool(int(parts[4]))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric field") from None
            reports.append(CircleReport(c_commanded=vals[0], r_fit=vals[1],
                                        c_measured=vals[2], deviation_pct=vals[3],
                                        ikd_enabled=flag))
    return reports


def write_comparison_csv(rows, path: str) -> None:
    """Paired-run table: (commanded_c, executed_c, ikd_c, deviation_pct) rows."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_COMPARE_HEADER + "\n")
        for commanded_c, executed_c, ikd_c, deviation_pct in rows:
            fh.write(f"{repr(float(commanded_c))},{repr(float(executed_c))},"
                     f"{repr(float(ikd_c))},{repr(float(deviation_pct))}\n")
