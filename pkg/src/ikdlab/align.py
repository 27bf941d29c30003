"""Sensor alignment and dataset preparation.

Turns a (joystick, IMU) log pair into supervised training rows: estimate the
IMU transport delay by grid search, resample every channel onto an even
grid over the shifted overlap, merge recordings, prune straight-line rows,
and bin channel statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datalog import ImuLog, JoyLog
from .errors import InsufficientOverlapError, ParseError, ValidationError

# Plausible transport-delay band for the IMU stream; estimates outside it
# are flagged as suspect rather than rejected.
DELAY_MIN = 0.0
DELAY_MAX = 0.5

MIN_OVERLAP = 1.0          # s, shortest usable stream overlap
DEFAULT_DELAY_STEP = 0.001  # s, grid resolution of the delay search
DEFAULT_RATE = 40.0         # Hz, resampling rate of the training grid
DEFAULT_OBJECTIVE_CEILING = 0.5  # (rad/s)^2, above this the pair is corrupt
EPS_V = 0.05                # m/s, below this speed curvature is treated as 0
DEFAULT_EPS_C = 1e-4        # 1/m, curvature magnitude treated as straight


@dataclass(frozen=True)
class DelayEstimate:
    """Result of the delay grid search.

    ``in_range`` marks whether the argmin fell inside the plausible band;
    ``corrupt`` marks an objective so large the two streams likely do not
    describe the same drive.
    """

    delay: float
    objective: float
    in_range: bool
    corrupt: bool

    def __post_init__(self):
        if self.objective < 0:
            raise ValidationError("objective must be non-negative")


@dataclass(frozen=True)
class AlignedDataset:
    """Evenly sampled training rows (v_joy, av_joy, av_imu) at a fixed period."""

    v_joy: np.ndarray
    av_joy: np.ndarray
    av_imu: np.ndarray
    period: float

    def __post_init__(self):
        for name in ("v_joy", "av_joy", "av_imu"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.v_joy.size
        if self.av_joy.size != n or self.av_imu.size != n:
            raise ValidationError("channel lengths differ")
        if n and not (np.all(np.isfinite(self.v_joy))
                      and np.all(np.isfinite(self.av_joy))
                      and np.all(np.isfinite(self.av_imu))):
            raise ValidationError("dataset contains non-finite values")
        if n and (np.max(np.abs(self.av_joy)) > 4.0 + 1e-9
                  or np.max(np.abs(self.av_imu)) > 4.0 + 1e-9):
            raise ValidationError("angular velocity outside [-4, 4] rad/s")
        if self.period < 0:
            raise ValidationError("period must be non-negative")

    def __len__(self) -> int:
        return self.v_joy.size

    @property
    def idx(self) -> np.ndarray:
        return np.arange(len(self))


def _overlap_window(joy: JoyLog, imu: ImuLog, delay: float) -> tuple[float, float]:
    """Joystick-time window on which both streams are defined after shifting."""
    lo = max(joy.t[0], imu.t[0] - delay)
    hi = min(joy.t[-1], imu.t[-1] - delay)
    return lo, hi


def scan_delays(joy: JoyLog, imu: ImuLog,
                search: tuple[float, float] = (DELAY_MIN, DELAY_MAX),
                step: float = DEFAULT_DELAY_STEP) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the alignment objective on the full delay grid.

    For each candidate delay d the objective is the mean squared error
    between av_joy at its own timestamps and the IMU stream linearly
    interpolated at (t + d), restricted to the shifted overlap.  Candidates
    whose overlap is shorter than MIN_OVERLAP get objective = +inf.

    Returns:
        (delays, objectives) arrays of equal length.
    """
    lo, hi = search
    if not lo < hi:
        raise ValidationError("search range must satisfy lo < hi")
    if step <= 0:
        raise ValidationError("step must be positive")
    if len(joy) < 2 or len(imu) < 2:
        raise InsufficientOverlapError("each stream needs at least two samples")

    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    delays = lo + np.arange(n) * step
    objectives = np.full(n, np.inf)
    for i, d in enumerate(delays):
        w_lo, w_hi = _overlap_window(joy, imu, d)
        if w_hi - w_lo < MIN_OVERLAP:
            continue
        mask = (joy.t >= w_lo) & (joy.t <= w_hi)
        if not np.any(mask):
            continue
        t = joy.t[mask]
        imu_at = np.interp(t + d, imu.t, imu.av_z)
        err = joy.av[mask] - imu_at
        objectives[i] = float(np.mean(err * err))
    return delays, objectives


def estimate_delay(joy: JoyLog, imu: ImuLog,
                   search: tuple[float, float] = (DELAY_MIN, DELAY_MAX),
                   step: float = DEFAULT_DELAY_STEP,
                   objective_ceiling: float = DEFAULT_OBJECTIVE_CEILING) -> DelayEstimate:
    """Estimate the IMU transport delay by exhaustive grid search.

    The returned delay is the grid argmin of the alignment objective, ties
    broken toward the smaller delay.  Raises InsufficientOverlapError when
    no candidate leaves at least MIN_OVERLAP seconds of shifted overlap.
    """
    delays, objectives = scan_delays(joy, imu, search, step)
    if not np.any(np.isfinite(objectives)):
        raise InsufficientOverlapError(
            f"streams overlap less than {MIN_OVERLAP} s at every candidate delay")
    k = int(np.argmin(objectives))  # first minimum = smallest delay on ties
    delay = float(delays[k])
    objective = float(objectives[k])
    return DelayEstimate(
        delay=delay,
        objective=objective,
        in_range=DELAY_MIN <= delay <= DELAY_MAX,
        corrupt=objective > objective_ceiling,
    )


def build_dataset(joy: JoyLog, imu: ImuLog, delay: float,
                  rate: float = DEFAULT_RATE) -> AlignedDataset:
    """Resample both logs onto an even grid over the delay-shifted overlap.

    Grid timestamps live on the joystick clock; the IMU channel is read at
    (t + delay).  All three channels are linearly interpolated.
    """
    if rate <= 0:
        raise ValidationError("rate must be positive")
    if len(joy) < 2 or len(imu) < 2:
        raise ValidationError("each stream needs at least two samples")
    w_lo, w_hi = _overlap_window(joy, imu, delay)
    if w_hi <= w_lo:
        raise ValidationError("streams do not overlap at this delay")
    n = int(np.floor((w_hi - w_lo) * rate + 1e-9))
    if n == 0:
        raise ValidationError("overlap shorter than one sample period")
    grid = w_lo + np.arange(n) / rate
    return AlignedDataset(
        v_joy=np.interp(grid, joy.t, joy.v),
        av_joy=np.interp(grid, joy.t, joy.av),
        av_imu=np.interp(grid + delay, imu.t, imu.av_z),
        period=1.0 / rate,
    )


def merge_datasets(parts: list[AlignedDataset]) -> AlignedDataset:
    """Concatenate datasets in argument order; indices are renumbered from 0."""
    if not parts:
        return AlignedDataset(v_joy=np.empty(0), av_joy=np.empty(0),
                              av_imu=np.empty(0), period=0.0)
    period = parts[0].period
    for p in parts[1:]:
        if p.period != period:
            raise ValidationError(
                f"cannot merge datasets with periods {period} and {p.period}")
    return AlignedDataset(
        v_joy=np.concatenate([p.v_joy for p in parts]),
        av_joy=np.concatenate([p.av_joy for p in parts]),
        av_imu=np.concatenate([p.av_imu for p in parts]),
        period=period,
    )


def row_curvature(v_joy: np.ndarray, av_joy: np.ndarray,
                  eps_v: float = EPS_V) -> np.ndarray:
    """Commanded curvature av/v per row, defined as 0 below the speed guard."""
    v_joy = np.asarray(v_joy, dtype=float)
    av_joy = np.asarray(av_joy, dtype=float)
    safe_v = np.where(np.abs(v_joy) < eps_v, 1.0, v_joy)
    return np.where(np.abs(v_joy) < eps_v, 0.0, av_joy / safe_v)


def prune_zero_curvature(d: AlignedDataset, eps_c: float = DEFAULT_EPS_C,
                         eps_v: float = EPS_V) -> AlignedDataset:
    """Drop straight-line rows (|commanded curvature| <= eps_c)."""
    if eps_c < 0:
        raise ValidationError("eps_c must be non-negative")
    c = row_curvature(d.v_joy, d.av_joy, eps_v)
    keep = np.abs(c) > eps_c
    return AlignedDataset(v_joy=d.v_joy[keep], av_joy=d.av_joy[keep],
                          av_imu=d.av_imu[keep], period=d.period)


def histogram(values, bins: int, vrange: tuple[float, float]) -> np.ndarray:
    """Equal-width bin counts; out-of-range values land in the edge bins.

    Total count always equals len(values).
    """
    lo, hi = vrange
    if bins < 1:
        raise ValidationError("bins must be >= 1")
    if not lo < hi:
        raise ValidationError("range must satisfy lo < hi")
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return np.zeros(bins, dtype=int)
    width = (hi - lo) / bins
    idx = np.floor((values - lo) / width).astype(int)
    idx = np.clip(idx, 0, bins - 1)
    return np.bincount(idx, minlength=bins)


_DATASET_HEADER = "idx,v_joy,av_joy,av_imu"
_HIST_HEADER = "bin_lo,bin_hi,count"


def write_dataset_csv(d: AlignedDataset, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_DATASET_HEADER + "\n")
        for i in range(len(d)):
            fh.write(f"{i},{repr(float(d.v_joy[i]))},"
                     f"{repr(float(d.av_joy[i]))},{repr(float(d.av_imu[i]))}\n")


def read_dataset_csv(path: str, period: float = 1.0 / DEFAULT_RATE) -> AlignedDataset:
    """Read training rows; the sample period is not stored in the file and
    must be supplied by the caller (defaults to the standard 40 Hz grid)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != _DATASET_HEADER:
            raise ParseError(f"{path}:1: expected header {_DATASET_HEADER!r}")
        v_joy, av_joy, av_imu = [], [], []
        expected_idx = 0
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ParseError(f"{path}:{lineno}: expected 4 columns")
            try:
                idx = int(parts[0])
                row = [float(p) for p in parts[1:]]
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric field in {line!r}") from None
            if idx != expected_idx:
                raise ValidationError(
                    f"{path}:{lineno}: idx {idx} breaks contiguity (expected {expected_idx})")
            expected_idx += 1
            v_joy.append(row[0])
            av_joy.append(row[1])
            av_imu.append(row[2])
    return AlignedDataset(v_joy=np.array(v_joy), av_joy=np.array(av_joy),
                          av_imu=np.array(av_imu), period=period)


def write_histogram_csv(counts: np.ndarray, vrange: tuple[float, float],
                        path: str) -> None:
    lo, hi = vrange
    bins = len(counts)
    width = (hi - lo) / bins
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_HIST_HEADER + "\n")
        for i, count in enumerate(counts):
            fh.write(f"{repr(lo + i * width)},{repr(lo + (i + 1) * width)},"
                     f"{int(count)}\n")
