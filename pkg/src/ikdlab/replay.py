"""Replays a recorded command sequence through the simulator at 20 Hz.

The recorded joystick rows become a circular command buffer; each replay
tick consumes one (v, av) pair, optionally rewrites it through the learned
correction, and holds it across the simulator's finer integration steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .datalog import JoyLog
from .errors import ParseError, ValidationError
from .ikd import AV_LIMIT, c_from_av_v, correct
from .mlp import MlpParams
from .simcore import (DEFAULT_DT, ControlCommand, SimTrace, SlipParams,
                      VehicleState, step_dynamics)

DEFAULT_REPLAY_RATE = 20.0  # Hz, command consumption rate


@dataclass
class CommandBuffer:
    """Circular buffer of (v, av) command rows with a read cursor."""

    rows: list
    cursor: int = 0

    def __post_init__(self):
        if not self.rows:
            raise ValidationError("command buffer must be non-empty")
        self.rows = [(float(v), float(av)) for v, av in self.rows]
        for v, av in self.rows:
            if not (math.isfinite(v) and math.isfinite(av)):
                raise ValidationError("buffer rows must be finite")
        if not 0 <= self.cursor < len(self.rows):
            raise ValidationError("cursor out of range")

    def __len__(self) -> int:
        return len(self.rows)


def load_buffer(joy: JoyLog) -> CommandBuffer:
    """Build a replay buffer from a joystick log, preserving row order."""
    if len(joy) == 0:
        raise ValidationError("cannot build a buffer from an empty log")
    return CommandBuffer(rows=list(zip(joy.v.tolist(), joy.av.tolist())))


def next_command(buf: CommandBuffer) -> tuple[float, float]:
    """Return the row under the cursor, then advance circularly."""
    row = buf.rows[buf.cursor]
    buf.cursor = (buf.cursor + 1) % len(buf.rows)
    return row


def write_buffer_txt(buf: CommandBuffer, path: str) -> None:
    """One "v,av" pair per line, no header."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v, av in buf.rows:
            fh.write(f"{repr(v)},{repr(av)}\n")


def read_buffer_txt(path: str) -> CommandBuffer:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(f"{path}:{lineno}: expected 'v,av', got {line!r}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric field in {line!r}") from None
    if not rows:
        raise ParseError(f"{path}: no command rows found")
    return CommandBuffer(rows=rows)


def execute_replay(buf: CommandBuffer, p: SlipParams,
                   model: MlpParams | None = None,
                   rate: float = DEFAULT_REPLAY_RATE,
                   duration: float = 1.0,
                   dt: float = DEFAULT_DT,
                   stride: int = 1,
                   initial_state: VehicleState | None = None) -> SimTrace:
    """Drive the simulator from the buffer, one command per tick.

    At every replay tick the next (v, av) row is consumed (plus stride-1
    skipped rows when decimating), converted to curvature, optionally
    rewritten by the correction model, and zero-order-held until the next
    tick.  Returns the ground-truth trace.
    """
    if rate <= 0:
        raise ValidationError("rate must be positive")
    if duration <= 0:
        raise ValidationError("duration must be positive")
    if stride < 1:
        raise ValidationError("stride must be >= 1")

    n = int(math.floor(duration / dt + 1e-9))
    state = initial_state if initial_state is not None else VehicleState()
    states = [state]
    commands = []
    held: ControlCommand | None = None
    last_tick = -1
    for i in range(n):
        tick = int(math.floor(i * dt * rate + 1e-9))
        if tick > last_tick:
            v, av = next_command(buf)
            for _ in range(stride - 1):
                next_command(buf)
            av = max(-AV_LIMIT, min(AV_LIMIT, av))  # actuator command range
            c = c_from_av_v(av, v)
            if model is not None:
                c = correct(model, v, c).c_corrected
            held = ControlCommand(v, c)
            last_tick = tick
        state = step_dynamics(state, held, p, dt)
        states.append(state)
        commands.append(held)
    return SimTrace(dt=dt, states=tuple(states), commands=tuple(commands))
