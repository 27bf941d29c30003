"""CSV log containers for the joystick and IMU recorder exports.

Two row layouts are supported: joystick logs (t, v, av) and IMU logs
(t, av_z).  Files are UTF-8 CSV with a mandatory header row; floats are
written with repr so a read-back is value-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CorruptLogError, ParseError, ValidationError

DEFAULT_IDLE_EPS = 1e-3


def _check_stream(name: str, t: np.ndarray, *channels: np.ndarray) -> None:
    if t.ndim != 1:
        raise ValidationError(f"{name}: t must be 1-D")
    for ch in channels:
        if ch.shape != t.shape:
            raise ValidationError(f"{name}: channel shape {ch.shape} != t shape {t.shape}")
    for arr in (t, *channels):
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValidationError(f"{name}: non-finite values present")
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise ValidationError(f"{name}: t must be strictly increasing")


@dataclass(frozen=True)
class JoyLog:
    """Joystick log: commanded linear velocity and angular velocity over time."""

    t: np.ndarray
    v: np.ndarray
    av: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "av", np.asarray(self.av, dtype=float))
        _check_stream("JoyLog", self.t, self.v, self.av)

    def __len__(self) -> int:
        return self.t.size


@dataclass(frozen=True)
class ImuLog:
    """IMU log: yaw-axis angular velocity over time."""

    t: np.ndarray
    av_z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "av_z", np.asarray(self.av_z, dtype=float))
        _check_stream("ImuLog", self.t, self.av_z)

    def __len__(self) -> int:
        return self.t.size


_JOY_HEADER = "t,v,av"
_IMU_HEADER = "t,av_z"


def _write_rows(path: str, header: str, columns: tuple[np.ndarray, ...]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in zip(*columns):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def _read_rows(path: str, header: str) -> list[list[float]]:
    ncol = header.count(",") + 1
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != header:
            raise ParseError(f"{path}:1: expected header {header!r}, got {first!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != ncol:
                raise ParseError(f"{path}:{lineno}: expected {ncol} columns, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric field in {line!r}") from None
    return rows


def write_joy_csv(log: JoyLog, path: str) -> None:
    _write_rows(path, _JOY_HEADER, (log.t, log.v, log.av))


def read_joy_csv(path: str) -> JoyLog:
    rows = _read_rows(path, _JOY_HEADER)
    arr = np.array(rows, dtype=float).reshape(len(rows), 3)
    return JoyLog(t=arr[:, 0], v=arr[:, 1], av=arr[:, 2])


def write_imu_csv(log: ImuLog, path: str) -> None:
    _write_rows(path, _IMU_HEADER, (log.t, log.av_z))


def read_imu_csv(path: str) -> ImuLog:
    rows = _read_rows(path, _IMU_HEADER)
    arr = np.array(rows, dtype=float).reshape(len(rows), 2)
    return ImuLog(t=arr[:, 0], av_z=arr[:, 1])


def trim_idle(joy: JoyLog, imu: ImuLog,
              eps: float = DEFAULT_IDLE_EPS) -> tuple[JoyLog, ImuLog]:
    """Drop the idle lead-in and tail of a recording.

    Removes the maximal prefix and suffix of the joystick log where both
    |v| < eps and |av| < eps, then trims the IMU log to the surviving
    joystick time window.  Raises CorruptLogError when nothing survives.
    """
    if eps < 0:
        raise ValidationError("eps must be non-negative")
    if len(joy) == 0:
        raise CorruptLogError("joystick log is empty")
    active = (np.abs(joy.v) >= eps) | (np.abs(joy.av) >= eps)
    if not np.any(active):
        raise CorruptLogError("log is all idle rows; nothing left after trimming")
    lo = int(np.argmax(active))
    hi = int(len(active) - np.argmax(active[::-1]))  # one past the last active row
    joy_out = JoyLog(t=joy.t[lo:hi], v=joy.v[lo:hi], av=joy.av[lo:hi])
    t0, t1 = joy_out.t[0], joy_out.t[-1]
    keep = (imu.t >= t0) & (imu.t <= t1)
    return joy_out, ImuLog(t=imu.t[keep], av_z=imu.av_z[keep])
