"""gaitforge command line: walk, validate, replay, table."""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys

from . import comm
from .gait import (DEFAULT_STAGE_MS, GaitError, check_narrative, format_narrative_report,
                   generate_cycle, range_violations, read_gait_table, read_narrative,
                   serialize_gait_table)
from .model import JOINT_IDS, BipedGeometry, ModelError, forward_kinematics, load_geometry
from .servo import (FRAME_PERIOD_MS, ServoConfigError, ServoRangeError, default_configs,
                    frame_to_joints, load_servo_configs)
from .stability import (StabilityError, StabilitySample, analyze_trajectory, center_of_mass,
                        static_margin, support_polygon)

CSV_HEADER = (["t_ms"] + [f"{j}_us" for j in JOINT_IDS] + [f"{j}_rad" for j in JOINT_IDS]
              + ["com_x", "com_y", "com_z", "margin_m", "y_zmp", "support", "stable"])

_CONFIG_ERRORS = (GaitError, ModelError, ServoConfigError, ServoRangeError, StabilityError,
                  comm.CommandError, OSError)


class ScriptError(ValueError):
    pass


def _styled(text, code, stream):
    if os.environ.get("GAITFORGE_NO_COLOR") or not getattr(stream, "isatty", lambda: False)():
        return text
    return f"\x1b[{code}m{text}\x1b[0m"


def _segments(frames, period):
    """Split frames into runs of uniformly spaced timestamps."""
    runs = []
    for i, f in enumerate(frames):
        if runs and f.t_ms - frames[i - 1].t_ms == period:
            runs[-1].append(i)
        else:
            runs.append([i])
    return runs


def _static_sample(t, pose, contacts, geom):
    com = tuple(float(c) for c in center_of_mass(geom, pose).xyz)
    poly = support_polygon(pose, contacts)
    return StabilitySample(t, com, poly, static_margin(poly, com[:2]), 0.0, com[1])


def analyze_frames(frames, supports, geom, cfgs, period=FRAME_PERIOD_MS):
    """Report rows (one per frame) for a frame stream with per-frame support tags.

    Runs too short to difference (fewer than 3 frames) are treated as static.
    """
    joints = [frame_to_joints(f, cfgs) for f in frames]
    poses = [forward_kinematics(geom, j) for j in joints]
    samples = [None] * len(frames)
    for run in _segments(frames, period):
        rows = [(frames[i].t_ms, poses[i], supports[i].contacts) for i in run]
        if len(run) >= 3:
            out = analyze_trajectory(rows, geom)
        else:
            out = [_static_sample(*r, geom) for r in rows]
        for i, s in zip(run, out):
            samples[i] = s
    return [(f, j, s, sup) for f, j, s, sup in zip(frames, joints, samples, supports)]


def report_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for frame, joints, s, support in rows:
        w.writerow([frame.t_ms, *frame.pulses_us, *(repr(a) for a in joints.angles),
                    *(repr(c) for c in s.com), repr(s.margin_m), repr(s.y_zmp),
                    support.value, int(s.stable)])
    return buf.getvalue()


def _summary(rows, out):
    if not rows:
        print("frames: 0", file=out)
        return True
    margins = [s.margin_m for _, _, s, _ in rows]
    unstable = [s.t_ms for _, _, s, _ in rows if not s.stable]
    print(f"frames: {len(rows)}", file=out)
    print(f"min margin: {min(margins):.6f} m", file=out)
    print(f"mean margin: {sum(margins) / len(margins):.6f} m", file=out)
    if unstable:
        print(_styled(f"unstable frames ({len(unstable)}): " + " ".join(map(str, unstable)),
                      "31", out), file=out)
    else:
        print(_styled("all frames statically stable", "32", out), file=out)
    return not unstable


def _load_common(args):
    geom = load_geometry(args.geometry) if args.geometry else BipedGeometry()
    cfgs = load_servo_configs(args.servos) if args.servos else default_configs()
    table = read_gait_table(args.gait)
    return geom, cfgs, table


def _emit(text, path):
    """Write ``text`` to ``path`` (``-`` is stdout); returns the stream for summaries."""
    if path == "-":
        sys.stdout.write(text)
        return sys.stderr
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return sys.stdout


def cmd_walk(args) -> int:
    geom, cfgs, table = _load_common(args)
    traj = generate_cycle(table, args.stage_ms, args.cycles)
    rows = analyze_frames(traj.frames, traj.support, geom, cfgs)
    out = _emit(report_csv(rows), args.out)
    return 0 if _summary(rows, out) else 2


def cmd_validate(args) -> int:
    cfgs = load_servo_configs(args.servos) if args.servos else default_configs()
    table = read_gait_table(args.gait)
    narrative = read_narrative(args.narrative)
    results = check_narrative(table, narrative, cfgs)
    violations = range_violations(table, cfgs)
    print(f"gait {table.name}: {len(table.stages)} stages")
    if violations:
        for stage, v in violations:
            print(_styled(f"range: stage {stage} {v}", "31", sys.stdout))
    else:
        print("range: ok")
    print("narrative:")
    sys.stdout.write(format_narrative_report(results))
    return 1 if violations else 0


def parse_script(text):
    """Script lines are ``CMD ...`` or ``WAIT <ms>``; ``#`` comments allowed."""
    steps = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("WAIT"):
                toks = line.split(" ")
                if len(toks) != 2 or not toks[1].isdigit():
                    raise ScriptError(f"expected 'WAIT <ms>', got {line!r}")
                steps.append(("wait", int(toks[1])))
            else:
                steps.append(("cmd", comm.parse_command(line)))
        except (comm.CommandError, ScriptError) as e:
            raise ScriptError(f"script line {n}: {e}") from None
    return steps


def replay(steps, table, stage_ms, slave_cfgs, max_drain_ms=10**8):
    """Drive master and slave on a simulated clock.

    Returns ``(wire_log, frames, supports)`` for the frames the slave accepted.
    """
    master = comm.Master(table, stage_ms)
    slave = comm.Slave(slave_cfgs)
    log, frames, supports = [], [], []
    clock = 0

    def tick(t):
        start = len(master.emitted)
        lines = master.tick(t)
        # support tags travel beside the wire, not on it
        for line, (_, support) in zip(lines, master.emitted[start:]):
            ack = slave.apply(line)
            log.append(f"> {line}")
            log.append(f"< {ack}")
            if ack.startswith("ACK"):
                frames.append(slave.last_frame)
                supports.append(support)
    for kind, value in steps:
        if kind == "cmd":
            master.submit(value)
            tick(clock)
        else:
            end = clock + value
            t = (clock // FRAME_PERIOD_MS + 1) * FRAME_PERIOD_MS
            while t <= end:
                tick(t)
                t += FRAME_PERIOD_MS
            clock = end
            tick(clock)
    limit = clock + max_drain_ms
    while master.running and clock < limit:
        clock = (clock // FRAME_PERIOD_MS + 1) * FRAME_PERIOD_MS
        tick(clock)
    return log, frames, supports


def cmd_replay(args) -> int:
    geom, cfgs, table = _load_common(args)
    with open(args.script, encoding="utf-8") as fh:
        steps = parse_script(fh.read())
    log, frames, supports = replay(steps, table, args.stage_ms, cfgs)
    if args.log:
        with open(args.log, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("".join(line + "\n" for line in log))
    rows = analyze_frames(frames, supports, geom, cfgs)
    out = _emit(report_csv(rows), args.out)
    print(f"wire lines: {len(log)}", file=out)
    return 0 if _summary(rows, out) else 2


def cmd_table(args) -> int:
    sys.stdout.write(serialize_gait_table(read_gait_table(args.source)))
    return 0


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser():
    p = argparse.ArgumentParser(prog="gaitforge", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def run_opts(sp):
        sp.add_argument("--geometry", help="geometry key=value config")
        sp.add_argument("--servos", help="servo config file")
        sp.add_argument("--gait", default="builtin", help="gait table path or 'builtin'")
        sp.add_argument("--stage-ms", type=_positive_int, default=DEFAULT_STAGE_MS)
        sp.add_argument("--out", default="-", help="CSV report path ('-' for stdout)")

    walk = sub.add_parser("walk", help="generate a walk and analyze stability")
    run_opts(walk)
    walk.add_argument("--cycles", type=_positive_int, default=1)
    walk.set_defaults(func=cmd_walk)

    val = sub.add_parser("validate", help="range-check a table and compare with the narrative")
    val.add_argument("--gait", default="builtin")
    val.add_argument("--narrative", default="builtin")
    val.add_argument("--servos")
    val.set_defaults(func=cmd_validate)

    rep = sub.add_parser("replay", help="run a command script through master and slave")
    rep.add_argument("script")
    run_opts(rep)
    rep.add_argument("--log", help="wire log path")
    rep.set_defaults(func=cmd_replay)

    tab = sub.add_parser("table", help="print a gait table in canonical form")
    tab.add_argument("source", nargs="?", default="builtin")
    tab.set_defaults(func=cmd_table)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (*_CONFIG_ERRORS, ScriptError) as e:
        print(f"gaitforge: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
