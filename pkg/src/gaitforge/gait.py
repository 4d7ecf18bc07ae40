"""Five-stage forward walking pattern: keyframe table, interpolation into
20 ms frames, cycle generation and the rotation-narrative checker."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .model import JOINT_IDS
from .servo import FRAME_PERIOD_MS, MAX_US, MIN_US, PwmFrame, default_configs, validate_frame

DEFAULT_STAGE_MS = 500


class GaitError(ValueError):
    pass


class GaitFormatError(GaitError):
    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno else message)


class Support(str, enum.Enum):
    DOUBLE = "D"
    SINGLE_LEFT = "SL"
    SINGLE_RIGHT = "SR"

    @property
    def contacts(self):
        """(right_in_contact, left_in_contact)"""
        return (self is not Support.SINGLE_LEFT, self is not Support.SINGLE_RIGHT)

    @property
    def swing_leg(self):
        return {Support.SINGLE_LEFT: "right", Support.SINGLE_RIGHT: "left"}.get(self)


@dataclass(frozen=True)
class Stage:
    index: int
    pulses_us: tuple
    support: Support = Support.DOUBLE

    def __post_init__(self):
        pulses = tuple(int(p) for p in self.pulses_us)
        if len(pulses) != 10:
            raise GaitError(f"stage {self.index}: expected 10 pulses, got {len(pulses)}")
        for jid, p in zip(JOINT_IDS, pulses):
            if not MIN_US <= p <= MAX_US:
                raise GaitError(f"stage {self.index}: {jid} pulse out of range: {p}")
        object.__setattr__(self, "pulses_us", pulses)
        object.__setattr__(self, "support", Support(self.support))

    @property
    def swing_leg(self):
        return self.support.swing_leg


@dataclass(frozen=True)
class GaitTable:
    name: str
    stages: tuple
    joint_ids: tuple = JOINT_IDS

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if len(self.stages) < 2:
            raise GaitError("a gait table needs at least 2 stages")
        if tuple(self.joint_ids) != JOINT_IDS:
            raise GaitError("joint_ids must follow RJ1..RJ5, LJ1..LJ5")
        if not self.name or any(c.isspace() for c in self.name):
            raise GaitError(f"bad table name {self.name!r}")

    def stage(self, index: int) -> Stage:
        return self.stages[index - 1]


# Rows per joint, columns stages I..V.
FORWARD_TABLE = {
    "RJ1": (870, 891, 891, 870, 870),
    "RJ2": (1152, 1043, 1043, 1152, 826),
    "RJ3": (957, 1043, 1043, 957, 957),
    "RJ4": (957, 935, 935, 957, 1109),
    "RJ5": (1696, 1500, 1500, 1500, 1522),
    "LJ1": (2152, 2152, 2152, 2152, 2152),
    "LJ2": (1043, 1087, 826, 1043, 1043),
    "LJ3": (957, 891, 891, 957, 957),
    "LJ4": (1935, 1913, 1913, 1935, 1935),
    "LJ5": (1761, 2000, 1783, 1826, 2000),
}
FORWARD_SUPPORT = (Support.DOUBLE, Support.SINGLE_RIGHT, Support.DOUBLE,
                   Support.SINGLE_LEFT, Support.DOUBLE)


def builtin_forward_table() -> GaitTable:
    stages = [Stage(k + 1, tuple(FORWARD_TABLE[j][k] for j in JOINT_IDS), FORWARD_SUPPORT[k])
              for k in range(5)]
    return GaitTable("forward", tuple(stages))


def serialize_gait_table(table: GaitTable) -> str:
    lines = [f"GAIT {table.name} STAGES {len(table.stages)}",
             "SUPPORT " + " ".join(s.support.value for s in table.stages)]
    for i, jid in enumerate(JOINT_IDS):
        lines.append(jid + " " + " ".join(str(s.pulses_us[i]) for s in table.stages))
    return "\n".join(lines) + "\n"


def _int_token(tok, lineno):
    if not (tok.isascii() and tok.isdigit()):
        raise GaitFormatError(lineno, f"expected integer, got {tok!r}")
    return int(tok)


def load_gait_table(text: str) -> GaitTable:
    """Parse the plain-text gait table format; see serialize_gait_table."""
    lines = [(n, raw.split("#", 1)[0].split()) for n, raw in enumerate(text.splitlines(), 1)]
    lines = [(n, toks) for n, toks in lines if toks]
    if not lines:
        raise GaitFormatError(0, "empty gait table")

    n, toks = lines[0]
    if len(toks) != 4 or toks[0] != "GAIT" or toks[2] != "STAGES":
        raise GaitFormatError(n, "expected 'GAIT <name> STAGES <k>'")
    name, k = toks[1], _int_token(toks[3], n)
    if k < 2:
        raise GaitFormatError(n, "need at least 2 stages")

    if len(lines) < 2 or lines[1][1][0] != "SUPPORT":
        raise GaitFormatError(lines[1][0] if len(lines) > 1 else n, "expected SUPPORT line")
    n, toks = lines[1]
    if len(toks) - 1 != k:
        raise GaitFormatError(n, f"expected {k} support tags")
    try:
        support = [Support(t) for t in toks[1:]]
    except ValueError:
        bad = next(t for t in toks[1:] if t not in {s.value for s in Support})
        raise GaitFormatError(n, f"unknown support tag {bad!r}") from None

    rows = {}
    for n, toks in lines[2:]:
        jid = toks[0]
        if jid not in JOINT_IDS:
            raise GaitFormatError(n, f"unknown joint {jid!r}")
        if jid in rows:
            raise GaitFormatError(n, f"duplicate joint {jid}")
        if len(toks) - 1 != k:
            raise GaitFormatError(n, f"expected {k} values, got {len(toks) - 1}")
        values = [_int_token(t, n) for t in toks[1:]]
        for v in values:
            if not MIN_US <= v <= MAX_US:
                raise GaitFormatError(n, f"pulse out of range: {v}")
        rows[jid] = values
    missing = [j for j in JOINT_IDS if j not in rows]
    if missing:
        raise GaitFormatError(0, f"expected 10 joint rows, missing {' '.join(missing)}")

    stages = [Stage(i + 1, tuple(rows[j][i] for j in JOINT_IDS), support[i]) for i in range(k)]
    return GaitTable(name, tuple(stages))


def read_gait_table(source) -> GaitTable:
    """``"builtin"`` or a path to a table file."""
    if str(source) == "builtin":
        return builtin_forward_table()
    return load_gait_table(Path(source).read_text(encoding="utf-8"))


def _check_duration(duration_ms, frame_period_ms):
    if (not isinstance(duration_ms, int) or duration_ms <= 0
            or duration_ms % frame_period_ms):
        raise GaitError(f"duration {duration_ms!r} ms must be a positive multiple of "
                        f"{frame_period_ms} ms")


def _lerp_round(a: int, b: int, k: int, n: int) -> int:
    # round(a + (b - a) k / n), half away from zero, in exact integer arithmetic
    num = a * n + (b - a) * k
    q = (2 * abs(num) + n) // (2 * n)
    return q if num >= 0 else -q


def interpolate_transition(src: Stage, dst: Stage, duration_ms: int,
                           frame_period_ms: int = FRAME_PERIOD_MS, t0_ms: int = 0):
    """Frames k = 1..n of a linear pulse-space move; the last equals ``dst``."""
    _check_duration(duration_ms, frame_period_ms)
    n = duration_ms // frame_period_ms
    return [PwmFrame(t0_ms + k * frame_period_ms,
                     tuple(_lerp_round(a, b, k, n) for a, b in zip(src.pulses_us, dst.pulses_us)))
            for k in range(1, n + 1)]


@dataclass(frozen=True)
class Trajectory:
    frames: tuple
    support: tuple  # one Support per frame
    frame_period_ms: int = FRAME_PERIOD_MS

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "support", tuple(Support(s) for s in self.support))
        if len(self.frames) != len(self.support):
            raise GaitError("one support tag per frame required")
        for a, b in zip(self.frames, self.frames[1:]):
            if b.t_ms - a.t_ms != self.frame_period_ms:
                raise GaitError(f"frame spacing broken at t={b.t_ms} ms")

    def __len__(self):
        return len(self.frames)


def generate_cycle(table: GaitTable, stage_duration_ms: int = DEFAULT_STAGE_MS,
                   n_cycles: int = 1, frame_period_ms: int = FRAME_PERIOD_MS) -> Trajectory:
    """Stage-1 hold frame at t=0, then 1->2->...->k->1 per cycle.

    Each interpolated frame carries the support of its destination stage.
    """
    if not isinstance(n_cycles, int) or n_cycles < 1:
        raise GaitError("n_cycles must be >= 1")
    _check_duration(stage_duration_ms, frame_period_ms)
    stages = table.stages
    first = stages[0]
    frames = [PwmFrame(0, first.pulses_us)]
    support = [first.support]
    for _ in range(n_cycles):
        for src, dst in zip(stages, stages[1:] + (first,)):
            step = interpolate_transition(src, dst, stage_duration_ms, frame_period_ms,
                                          frames[-1].t_ms)
            frames.extend(step)
            support.extend([dst.support] * len(step))
    return Trajectory(tuple(frames), tuple(support), frame_period_ms)


def frames_per_cycle(table: GaitTable, stage_duration_ms: int,
                     frame_period_ms: int = FRAME_PERIOD_MS) -> int:
    return len(table.stages) * (stage_duration_ms // frame_period_ms)


# ---------------------------------------------------------------------------
# rotation narrative

class Direction(str, enum.Enum):
    CW = "cw"
    ACW = "acw"
    NONE = "none"


@dataclass(frozen=True)
class NarrativeEntry:
    src: int
    dst: int
    joint_id: str
    expected: Direction


def parse_narrative(text: str):
    """Lines of ``<from>-><to> <JOINT_ID> <cw|acw|none>``."""
    entries = []
    for n, raw in enumerate(text.splitlines(), 1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        if len(toks) != 3 or "->" not in toks[0]:
            raise GaitFormatError(n, "expected '<from>-><to> <JOINT_ID> <cw|acw|none>'")
        a, _, b = toks[0].partition("->")
        try:
            src, dst = int(a), int(b)
            direction = Direction(toks[2])
        except ValueError:
            raise GaitFormatError(n, f"bad narrative entry {raw.strip()!r}") from None
        if toks[1] not in JOINT_IDS:
            raise GaitFormatError(n, f"unknown joint {toks[1]!r}")
        entries.append(NarrativeEntry(src, dst, toks[1], direction))
    return tuple(entries)


def builtin_narrative():
    text = resources.files("gaitforge").joinpath("data/narrative_forward.txt").read_text("utf-8")
    return parse_narrative(text)


def read_narrative(source):
    if source is None or str(source) == "builtin":
        return builtin_narrative()
    return parse_narrative(Path(source).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class NarrativeResult:
    entry: NarrativeEntry
    delta_us: int
    observed: Direction
    status: str  # "match" | "mismatch" | "zero-but-specified"


def check_narrative(table: GaitTable, spec, cfgs=None):
    """Compare each stated rotation against the table.

    Positive joint angle is taken as anticlockwise; the angle change has the
    sign of delta_pulse * servo_sign.
    """
    cfgs = cfgs or default_configs()
    signs = {c.joint_id: c.sign for c in cfgs}
    k = len(table.stages)
    results = []
    for e in spec:
        if e.joint_id not in signs:
            raise GaitError(f"unknown joint {e.joint_id!r} in narrative")
        if not (1 <= e.src <= k and 1 <= e.dst <= k):
            raise GaitError(f"narrative transition {e.src}->{e.dst} not in table")
        i = JOINT_IDS.index(e.joint_id)
        delta = table.stage(e.dst).pulses_us[i] - table.stage(e.src).pulses_us[i]
        turn = delta * signs[e.joint_id]
        observed = Direction.ACW if turn > 0 else Direction.CW if turn < 0 else Direction.NONE
        if observed is e.expected:
            status = "match"
        elif observed is Direction.NONE:
            status = "zero-but-specified"
        else:
            status = "mismatch"
        results.append(NarrativeResult(e, delta, observed, status))
    return results


def format_narrative_report(results) -> str:
    lines = ["transition joint expected delta_us observed status"]
    for r in results:
        e = r.entry
        lines.append(f"{e.src}->{e.dst} {e.joint_id} {e.expected.value} {r.delta_us:+d} "
                     f"{r.observed.value} {r.status}")
    counts = {s: sum(r.status == s for r in results)
              for s in ("match", "mismatch", "zero-but-specified")}
    lines.append("summary " + " ".join(f"{k}={v}" for k, v in counts.items()))
    return "\n".join(lines) + "\n"


def range_violations(table: GaitTable, cfgs=None):
    """(stage index, Violation) for every out-of-range pulse in the table."""
    out = []
    for s in table.stages:
        out.extend((s.index, v) for v in validate_frame(PwmFrame(0, s.pulses_us), cfgs))
    return out
