"""Command-line pipeline: collect, align, train, correct, replay, eval.

One executable with subcommands covering the whole workflow; every run is
seeded through the config (or --seed), so repeated invocations write
byte-identical artifacts.  Output tree: logs/, datasets/, models/,
reports/, plots/ under the resolved output root.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import align as align_mod
from . import datalog, evalkit, ikd, mlp, replay as replay_mod, scenarios, svgplot
from .errors import IkdError, ValidationError
from .simcore import SimTrace, SlipParams, emit_sensor_logs, run_scenario

DEFAULT_OUT = "out"
ENV_OUT = "IKD_OUT_DIR"
DEFAULT_CIRCLE_CURVATURES = (0.12, 0.63, 0.80)
DEFAULT_CIRCLE_V = 2.0
SUBDIRS = ("logs", "datasets", "models", "reports", "plots")


@dataclass(frozen=True)
class PipelineConfig:
    """Run configuration; seeds are always explicit, never wall-clock."""

    seed: int = 0
    slip: SlipParams = field(default_factory=SlipParams)
    scenario_file: str | None = None
    joy_hz: float = 40.0
    imu_hz: float = 40.0
    replay_hz: float = 20.0
    delay_search: tuple[float, float] = (align_mod.DELAY_MIN, align_mod.DELAY_MAX)
    delay_step: float = align_mod.DEFAULT_DELAY_STEP
    pad: float = 1.0
    train: mlp.TrainConfig = field(default_factory=mlp.TrainConfig)
    out_dir: str | None = None

    @classmethod
    def from_json(cls, path: str) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {"seed", "slip_file", "scenario_file", "rates", "delay_search",
                 "delay_step", "pad", "train", "out_dir"}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"{path}: unknown config keys {sorted(unknown)}")
        if "seed" not in raw:
            raise ValidationError(f"{path}: config must set an explicit seed")
        seed = int(raw["seed"])
        slip = (SlipParams.from_json(raw["slip_file"]) if "slip_file" in raw
                else SlipParams(seed=seed))
        rates = raw.get("rates", {})
        train_raw = dict(raw.get("train", {}))
        train_raw.setdefault("seed", seed)
        search = raw.get("delay_search",
                         [align_mod.DELAY_MIN, align_mod.DELAY_MAX])
        return cls(
            seed=seed,
            slip=slip,
            scenario_file=raw.get("scenario_file"),
            joy_hz=float(rates.get("joy", 40.0)),
            imu_hz=float(rates.get("imu", 40.0)),
            replay_hz=float(rates.get("replay", 20.0)),
            delay_search=(float(search[0]), float(search[1])),
            delay_step=float(raw.get("delay_step", align_mod.DEFAULT_DELAY_STEP)),
            pad=float(raw.get("pad", 1.0)),
            train=mlp.TrainConfig(**train_raw),
            out_dir=raw.get("out_dir"),
        )


def _resolve_out(args, cfg: PipelineConfig) -> str:
    out = args.out or cfg.out_dir or os.environ.get(ENV_OUT) or DEFAULT_OUT
    for sub in SUBDIRS:
        os.makedirs(os.path.join(out, sub), exist_ok=True)
    return out


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_json(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed,
                      slip=replace(cfg.slip, seed=args.seed),
                      train=replace(cfg.train, seed=args.seed))
    return cfg


def _load_scenario(cfg: PipelineConfig) -> evalkit.DriftScenario:
    if cfg.scenario_file:
        return evalkit.DriftScenario.from_json(cfg.scenario_file)
    return scenarios.loose_scenario()


def write_trace_csv(trace: SimTrace, path: str) -> None:
    """Ground-truth trace rows: t,x,y,heading,v,av."""
    t = trace.times()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,x,y,heading,v,av\n")
        for i, s in enumerate(trace.states):
            fh.write(f"{repr(float(t[i]))},{repr(s.x)},{repr(s.y)},"
                     f"{repr(s.heading)},{repr(s.v)},{repr(s.av)}\n")


def cmd_collect(args) -> int:
    cfg = _load_config(args)
    out = _resolve_out(args, cfg)
    if args.script:
        from .simcore import ControlScript
        script = ControlScript.from_json(args.script)
        duration = args.duration if args.duration else script.t_end + args.dwell
    else:
        script = scenarios.training_sweep_script(dwell=args.dwell)
        duration = scenarios.sweep_duration(script, dwell=args.dwell)
    trace = run_scenario(script, cfg.slip, duration)
    joy, imu = emit_sensor_logs(trace, cfg.slip, joy_rate=cfg.joy_hz,
                                imu_rate=cfg.imu_hz, pad=cfg.pad)
    joy_path = os.path.join(out, "logs", "joy.csv")
    imu_path = os.path.join(out, "logs", "imu.csv")
    datalog.write_joy_csv(joy, joy_path)
    datalog.write_imu_csv(imu, imu_path)
    print(f"collected {len(joy)} joy rows, {len(imu)} imu rows "
          f"({duration:.1f} s simulated)")
    return 0


def cmd_align(args) -> int:
    cfg = _load_config(args)
    out = _resolve_out(args, cfg)
    joy_path = args.joy or os.path.join(out, "logs", "joy.csv")
    imu_path = args.imu or os.path.join(out, "logs", "imu.csv")
    joy = datalog.read_joy_csv(joy_path)
    imu = datalog.read_imu_csv(imu_path)
    joy, imu = datalog.trim_idle(joy, imu)

    est = align_mod.estimate_delay(joy, imu, search=cfg.delay_search,
                                   step=cfg.delay_step)
    delays, objectives = align_mod.scan_delays(joy, imu, search=cfg.delay_search,
                                               step=cfg.delay_step)
    dataset = align_mod.build_dataset(joy, imu, est.delay, rate=cfg.joy_hz)
    pruned = align_mod.prune_zero_curvature(dataset)

    align_mod.write_dataset_csv(pruned, os.path.join(out, "datasets", "dataset.csv"))
    with open(os.path.join(out, "reports", "delay.json"), "w",
              encoding="utf-8") as fh:
        json.dump({"delay": est.delay, "objective": est.objective,
                   "in_range": est.in_range, "corrupt": est.corrupt},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out, "reports", "delay_scan.csv"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write("delay,objective\n")
        for d, o in zip(delays, objectives):
            if np.isfinite(o):
                fh.write(f"{repr(float(d))},{repr(float(o))}\n")

    counts = align_mod.histogram(pruned.v_joy, bins=20, vrange=(0.0, 5.0))
    align_mod.write_histogram_csv(counts, (0.0, 5.0),
                                  os.path.join(out, "reports", "vel_hist.csv"))
    flags = []
    if not est.in_range:
        flags.append("delay-out-of-range")
    if est.corrupt:
        flags.append("corrupt")
    suffix = f" [{' '.join(flags)}]" if flags else ""
    print(f"delay {est.delay:.3f} s (objective {est.objective:.6f}), "
          f"{len(pruned)} training rows{suffix}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    out = _resolve_out(args, cfg)
    data_path = args.dataset or os.path.join(out, "datasets", "dataset.csv")
    dataset = align_mod.read_dataset_csv(data_path, period=1.0 / cfg.joy_hz)
    params, curve = mlp.train(dataset, cfg.train)
    model_path = os.path.join(out, "models", "model.json")
    mlp.save_model(params, model_path)
    mlp.write_loss_csv(curve, os.path.join(out, "reports", "loss.csv"))
    print(f"trained {cfg.train.epochs} epochs on {len(dataset)} rows; "
          f"final test mse {curve.test_mse[-1]:.6f}; model at {model_path}")
    return 0


def cmd_correct(args) -> int:
    model = mlp.load_model(args.model)
    result = ikd.correct(model, args.v, args.c)
    print(result.to_json())
    return 0


def cmd_replay(args) -> int:
    cfg = _load_config(args)
    out = _resolve_out(args, cfg)
    buf = replay_mod.read_buffer_txt(args.buffer)
    model = mlp.load_model(args.model) if args.model else None
    duration = args.duration or len(buf) / cfg.replay_hz
    trace = replay_mod.execute_replay(buf, cfg.slip, model=model,
                                      rate=cfg.replay_hz, duration=duration,
                                      stride=args.stride)
    trace_path = os.path.join(out, "reports", "replay_trace.csv")
    write_trace_csv(trace, trace_path)
    print(f"replayed {duration:.2f} s ({len(trace)} steps) -> {trace_path}")
    return 0


def _parse_curvatures(text: str) -> list[float]:
    try:
        vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ValidationError(f"bad curvature list {text!r}") from None
    if not vals:
        raise ValidationError("curvature list is empty")
    if any(c == 0 for c in vals):
        raise ValidationError("circle test needs nonzero curvatures")
    return vals


def cmd_eval_circle(args) -> int:
    cfg = _load_config(args)
    out = _resolve_out(args, cfg)
    curvatures = (_parse_curvatures(args.curvatures) if args.curvatures
                  else list(DEFAULT_CIRCLE_CURVATURES))
    model = mlp.load_model(args.model) if args.model else None

    reports = []
    comparison = []
    for c in curvatures:
        plain = evalkit.circle_test(args.v, c, cfg.slip)
        reports.append(plain)
        traces = [("uncorrected", evalkit.circle_trace(args.v, c, cfg.slip)[0].xy())]
        if model is not None:
            corrected = evalkit.circle_test(args.v, c, cfg.slip, model)
            reports.append(corrected)
            comparison.append((c, plain.c_measured, corrected.c_measured,
                               corrected.deviation_pct))
            traces.append(("corrected",
                           evalkit.circle_trace(args.v, c, cfg.slip, model)[0].xy()))
        svgplot.svg_trajectory(traces,
                               os.path.join(out, "plots", f"circle_{c:.2f}.svg"),
                               title=f"circle test c={c:.2f} v={args.v:.1f}")

    evalkit.emit_report(reports, os.path.join(out, "reports", "circle_reports.csv"))
    if comparison:
        evalkit.write_comparison_csv(
            comparison, os.path.join(out, "reports", "circle_comparison.csv"))
    for r in reports:
        tag = "ikd" if r.ikd_enabled else "raw"
        print(f"c={r.c_commanded:.3f} [{tag}] measured {r.c_measured:.4f} "
              f"(r={r.r_fit:.3f} m, deviation {r.deviation_pct:.2f}%)")
    return 0


def cmd_eval_drift(args) -> int:
    cfg = _load_config(args)
    out = _resolve_out(args, cfg)
    buf_rows = (replay_mod.read_buffer_txt(args.buffer).rows if args.buffer
                else scenarios.drift_buffer(rate=cfg.replay_hz).rows)
    model = mlp.load_model(args.model) if args.model else None
    duration = args.duration or len(buf_rows) / cfg.replay_hz

    if cfg.scenario_file:
        courses = {"custom": evalkit.DriftScenario.from_json(cfg.scenario_file)}
    else:
        courses = {"loose": scenarios.loose_scenario(),
                   "tight": scenarios.tight_scenario()}

    runs = {"uncorrected": None}
    if model is not None:
        runs["corrected"] = model
    report = {}
    traces = []
    for run_name, run_model in runs.items():
        buf = replay_mod.CommandBuffer(rows=list(buf_rows))
        trace = replay_mod.execute_replay(buf, cfg.slip, model=run_model,
                                          rate=cfg.replay_hz, duration=duration)
        traces.append((run_name, trace.xy()))
        report[run_name] = {}
        for course_name, course in courses.items():
            r = evalkit.drift_eval(trace, course)
            report[run_name][course_name] = {
                "min_clearance": r.min_clearance,
                "collided": r.collided,
                "min_turn_radius": r.min_turn_radius,
                "cleared_gate": r.cleared_gate,
            }

    with open(os.path.join(out, "reports", "drift_report.json"), "w",
              encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    first_course = next(iter(courses.values()))
    svgplot.svg_trajectory(traces, os.path.join(out, "plots", "drift.svg"),
                           scenario=first_course, title="drift replay")
    for run_name, by_course in report.items():
        for course_name, r in by_course.items():
            print(f"{run_name}/{course_name}: clearance {r['min_clearance']:.3f} m, "
                  f"collided {r['collided']}, min turn radius "
                  f"{r['min_turn_radius']:.3f} m, cleared gate {r['cleared_gate']}")
    return 0


def cmd_plot(args) -> int:
    cfg = _load_config(args)
    out = _resolve_out(args, cfg)
    made = []
    if args.loss:
        rows = np.loadtxt(args.loss, delimiter=",", skiprows=1, ndmin=2)
        dest = os.path.join(out, "plots", "loss.svg")
        svgplot.svg_line_chart([("train", rows[:, 0], rows[:, 1]),
                                ("test", rows[:, 0], rows[:, 2])],
                               dest, title="training loss",
                               xlabel="epoch", ylabel="mse")
        made.append(dest)
    if args.hist:
        rows = np.loadtxt(args.hist, delimiter=",", skiprows=1, ndmin=2)
        dest = os.path.join(out, "plots", "vel_hist.svg")
        svgplot.svg_bar_chart(rows[:, 2], (rows[0, 0], rows[-1, 1]), dest,
                              title="velocity histogram", xlabel="v [m/s]")
        made.append(dest)
    if args.delay_scan:
        rows = np.loadtxt(args.delay_scan, delimiter=",", skiprows=1, ndmin=2)
        dest = os.path.join(out, "plots", "delay_scan.svg")
        svgplot.svg_line_chart([("objective", rows[:, 0], rows[:, 1])], dest,
                               title="alignment error vs delay",
                               xlabel="delay [s]", ylabel="mse")
        made.append(dest)
    if not made:
        raise ValidationError("nothing to plot; pass --loss, --hist or --delay-scan")
    print("wrote " + ", ".join(made))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ikdlab",
        description="slip simulator, log alignment, inverse-model training "
                    "and closed-loop evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="pipeline config JSON")
        p.add_argument("--seed", type=int, help="override every seed")
        p.add_argument("--out", help=f"output root (default ${ENV_OUT} or ./{DEFAULT_OUT})")

    p = sub.add_parser("collect", help="run the scripted drive and emit sensor logs")
    common(p)
    p.add_argument("--dwell", type=float, default=4.0,
                   help="seconds per sweep segment")
    p.add_argument("--script", help="custom control script JSON")
    p.add_argument("--duration", type=float,
                   help="override simulated duration (with --script)")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("align", help="estimate delay and build the training dataset")
    common(p)
    p.add_argument("--joy", help="joystick CSV (default <out>/logs/joy.csv)")
    p.add_argument("--imu", help="IMU CSV (default <out>/logs/imu.csv)")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("train", help="fit the inverse model on the dataset")
    common(p)
    p.add_argument("--dataset", help="dataset CSV (default <out>/datasets/dataset.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("correct", help="one-shot correction query")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("replay", help="replay a command buffer through the simulator")
    common(p)
    p.add_argument("--buffer", required=True, help="buffer txt (v,av per line)")
    p.add_argument("--model", help="correction model JSON")
    p.add_argument("--duration", type=float, help="seconds (default one buffer pass)")
    p.add_argument("--stride", type=int, default=1,
                   help="buffer rows consumed per tick (decimation)")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("eval-circle", help="constant-curvature circle tests")
    common(p)
    p.add_argument("--model", help="correction model JSON")
    p.add_argument("--v", type=float, default=DEFAULT_CIRCLE_V)
    p.add_argument("--curvatures", help="comma-separated curvature list")
    p.set_defaults(func=cmd_eval_circle)

    p = sub.add_parser("eval-drift", help="drift replay scored against the gate")
    common(p)
    p.add_argument("--buffer", help="buffer txt (default built-in drift sequence)")
    p.add_argument("--model", help="correction model JSON")
    p.add_argument("--duration", type=float)
    p.set_defaults(func=cmd_eval_drift)

    p = sub.add_parser("plot", help="render CSV artifacts as SVG charts")
    common(p)
    p.add_argument("--loss", help="loss curve CSV")
    p.add_argument("--hist", help="histogram CSV")
    p.add_argument("--delay-scan", dest="delay_scan", help="delay scan CSV")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IkdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc.filename}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
