"""Master/slave controller emulation over a checksummed line protocol.

Wire frame::

    F <t_ms> <p1> ... <p10> *<CK>

where CK is the XOR of every byte before the space that precedes ``*``,
written as two uppercase hex digits.  The slave answers each line with
``ACK <t_ms>`` or ``ERR <code> <detail>`` (1 checksum, 2 parse, 3 range).
"""
from __future__ import annotations

import functools
import operator
import re
from dataclasses import dataclass

from .gait import DEFAULT_STAGE_MS, GaitTable, builtin_forward_table, generate_cycle
from .servo import FRAME_PERIOD_MS, PwmFrame, default_configs, validate_frame

ERR_CHECKSUM = 1
ERR_PARSE = 2
ERR_RANGE = 3

_INT = re.compile(r"(?:0|[1-9][0-9]*)\Z")
_TRAILER = re.compile(r"(.*) \*([0-9A-F]{2})\Z", re.S)


class CommandError(ValueError):
    pass


@dataclass(frozen=True)
class Forward:
    cycles: int

    def __post_init__(self):
        if self.cycles < 1:
            raise CommandError("cycles must be ≥ 1")


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class SetStageDuration:
    ms: int

    def __post_init__(self):
        if self.ms <= 0 or self.ms % FRAME_PERIOD_MS:
            raise CommandError(f"stage duration must be a positive multiple of {FRAME_PERIOD_MS} ms")


def _int_arg(tok):
    if not _INT.match(tok):
        raise CommandError(f"expected a non-negative integer, got {tok!r}")
    return int(tok)


def parse_command(line: str):
    """``CMD FWD <n>``, ``CMD STOP`` or ``CMD DUR <ms>``."""
    toks = line.rstrip("\n").split(" ")
    if len(toks) < 2 or toks[0] != "CMD":
        raise CommandError(f"expected 'CMD <verb>', got {line.strip()!r}")
    verb, args = toks[1], toks[2:]
    if verb == "STOP" and not args:
        return Stop()
    if verb in ("FWD", "DUR") and len(args) == 1:
        value = _int_arg(args[0])
        if verb == "FWD":
            if value < 1:
                raise CommandError(f"cycles must be ≥ 1, got {args[0]!r}")
            return Forward(value)
        if value <= 0 or value % FRAME_PERIOD_MS:
            raise CommandError(f"stage duration {args[0]!r} must be a positive multiple of "
                               f"{FRAME_PERIOD_MS} ms")
        return SetStageDuration(value)
    if verb not in ("FWD", "DUR", "STOP"):
        raise CommandError(f"unknown verb {verb!r}")
    raise CommandError(f"wrong number of arguments for {verb}")


# ---------------------------------------------------------------------------
# wire frames

class WireError(ValueError):
    code = ERR_PARSE


class ChecksumError(WireError):
    code = ERR_CHECKSUM


class WireParseError(WireError):
    code = ERR_PARSE


class WireArityError(WireError):
    code = ERR_PARSE


def checksum(body: str) -> int:
    return functools.reduce(operator.xor, body.encode("utf-8"), 0)


def encode_frame(frame: PwmFrame) -> str:
    body = "F " + " ".join(str(v) for v in (frame.t_ms, *frame.pulses_us))
    return f"{body} *{checksum(body):02X}"


def decode_frame(line: str) -> PwmFrame:
    if line.endswith("\n"):
        line = line[:-1]
    m = _TRAILER.match(line)
    if not m:
        raise WireParseError("missing or malformed checksum trailer")
    body, ck = m.groups()
    expected = checksum(body)
    if expected != int(ck, 16):
        raise ChecksumError(f"checksum {ck} != {expected:02X}")
    toks = body.split(" ")
    if toks[0] != "F":
        raise WireParseError(f"expected frame tag 'F', got {toks[0]!r}")
    for tok in toks[1:]:
        if not _INT.match(tok):
            raise WireParseError(f"malformed field {tok!r}")
    if len(toks) != 12:
        raise WireArityError(f"expected 10 pulses, got {len(toks) - 2}")
    t, *pulses = (int(tok) for tok in toks[1:])
    return PwmFrame(t, tuple(pulses))


# ---------------------------------------------------------------------------
# controllers

class Master:
    """Turns commands into a timed frame stream.  Time is supplied by the caller."""

    def __init__(self, table: GaitTable | None = None, stage_duration_ms: int = DEFAULT_STAGE_MS):
        self.table = table or builtin_forward_table()
        self.stage_duration_ms = stage_duration_ms
        self.now_ms = 0
        self._pending = []  # (PwmFrame, Support) with absolute timestamps
        self._stage_one = set()  # pending indices holding a Stage-I posture
        self._cursor = 0
        self._stop_at = None
        self._last_t = None
        self.emitted = []  # (PwmFrame, Support) in emission order

    @property
    def running(self) -> bool:
        return self._cursor < len(self._pending)

    def submit(self, cmd):
        if isinstance(cmd, SetStageDuration):
            self.stage_duration_ms = cmd.ms
        elif isinstance(cmd, Forward):
            self._forward(cmd.cycles)
        elif isinstance(cmd, Stop):
            self._stop()
        else:
            raise CommandError(f"unsupported command {cmd!r}")

    def _forward(self, cycles):
        traj = generate_cycle(self.table, self.stage_duration_ms, cycles)
        per_cycle = (len(traj) - 1) // cycles
        items = list(zip(traj.frames, traj.support))
        if self.running:
            # continue from the closing Stage-I frame of the current plan
            start = self._pending[-1][0].t_ms
            base = len(self._pending) - 1
            items = items[1:]
            offsets = range(1, cycles + 1)
        else:
            earliest = self.now_ms if self._last_t is None else max(self.now_ms, self._last_t + 1)
            start = -(-earliest // FRAME_PERIOD_MS) * FRAME_PERIOD_MS
            self._pending, self._stage_one, self._cursor = [], set(), 0
            base = 0
            offsets = range(0, cycles + 1)
        self._pending.extend((f.shifted(start), s) for f, s in items)
        self._stage_one.update(base + c * per_cycle for c in offsets)
        self._stop_at = None

    def _stop(self):
        if not self.running:
            return
        if self._cursor > 0 and self._cursor - 1 in self._stage_one:
            self._halt()
            return
        self._stop_at = min(i for i in self._stage_one if i >= self._cursor)

    def _halt(self):
        self._pending, self._stage_one, self._cursor, self._stop_at = [], set(), 0, None

    def tick(self, now_ms):
        """Wire lines for every not-yet-sent frame due at or before ``now_ms``."""
        if now_ms < self.now_ms:
            raise ValueError(f"tick at {now_ms} ms precedes previous tick at {self.now_ms} ms")
        self.now_ms = now_ms
        lines = []
        while self.running and self._pending[self._cursor][0].t_ms <= now_ms:
            frame, support = self._pending[self._cursor]
            lines.append(encode_frame(frame))
            self.emitted.append((frame, support))
            self._last_t = frame.t_ms
            self._cursor += 1
            if self._cursor - 1 == self._stop_at or not self.running:
                self._halt()
                break
        return lines


class Slave:
    """Validates and applies wire frames; errors are answered in-band."""

    def __init__(self, configs=None):
        self.configs = tuple(configs or default_configs())
        self.last_frame = None
        self.error_count = 0

    def apply(self, line: str) -> str:
        try:
            frame = decode_frame(line)
        except WireError as e:
            self.error_count += 1
            return f"ERR {e.code} {_one_line(e)}"
        violations = validate_frame(frame, self.configs)
        if violations:
            self.error_count += 1
            return f"ERR {ERR_RANGE} " + " ".join(f"{v.joint_id}={v.pulse_us}" for v in violations)
        self.last_frame = frame
        return f"ACK {frame.t_ms}"


def _one_line(e):
    return " ".join(str(e).split()) or type(e).__name__


def master_tick(state: Master, now_ms):
    """Advance ``state`` in place; returns ``(state, lines)``."""
    return state, state.tick(now_ms)


def slave_apply(state: Slave, line: str):
    """Apply ``line`` to ``state`` in place; returns ``(state, ack)``."""
    return state, state.apply(line)
