"""MG-996 style hobby servos: pulse width <-> joint angle, range checks, 20 ms frames."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .model import JOINT_IDS, JointVector

FRAME_PERIOD_MS = 20
MIN_US = 800
MAX_US = 2400
DEFAULT_SCALE = 0.1125  # deg/us: 1600 us of travel spans 180 deg

# Stage-I pulses of the forward gait: the erect stance, used as zero angle.
STAGE_ONE_PULSES = (870, 1152, 957, 957, 1696, 2152, 1043, 957, 1935, 1761)


class ServoRangeError(ValueError):
    def __init__(self, joint_id, value, lo, hi):
        self.joint_id = joint_id
        self.value = value
        super().__init__(f"{joint_id}: {value} outside reachable range [{lo}, {hi}]")


class ServoConfigError(ValueError):
    pass


def round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


@dataclass(frozen=True)
class ServoConfig:
    joint_id: str
    neutral_us: int
    sign: int = 1
    min_us: int = MIN_US
    max_us: int = MAX_US
    scale_deg_per_us: float = DEFAULT_SCALE

    def __post_init__(self):
        if self.joint_id not in JOINT_IDS:
            raise ServoConfigError(f"unknown joint {self.joint_id!r}")
        if self.sign not in (1, -1):
            raise ServoConfigError(f"{self.joint_id}: sign must be +1 or -1")
        if not self.min_us < self.max_us:
            raise ServoConfigError(f"{self.joint_id}: min must be below max")
        if not self.min_us <= self.neutral_us <= self.max_us:
            raise ServoConfigError(f"{self.joint_id}: neutral {self.neutral_us} outside [min, max]")
        if not (math.isfinite(self.scale_deg_per_us) and self.scale_deg_per_us > 0):
            raise ServoConfigError(f"{self.joint_id}: scale must be > 0")

    def angle_span(self):
        """Reachable (low, high) angle in radians."""
        a = pulse_to_angle(self, self.min_us)
        b = pulse_to_angle(self, self.max_us)
        return min(a, b), max(a, b)


def default_configs():
    """Right leg sign +1, left leg sign -1 (mirror mounting), Stage-I neutrals."""
    return tuple(ServoConfig(jid, neutral, 1 if jid.startswith("R") else -1)
                 for jid, neutral in zip(JOINT_IDS, STAGE_ONE_PULSES))


def pulse_to_angle(cfg: ServoConfig, pulse_us) -> float:
    if not cfg.min_us <= pulse_us <= cfg.max_us:
        raise ServoRangeError(cfg.joint_id, pulse_us, cfg.min_us, cfg.max_us)
    return math.radians(cfg.sign * (pulse_us - cfg.neutral_us) * cfg.scale_deg_per_us)


def angle_to_pulse(cfg: ServoConfig, angle: float) -> int:
    if not math.isfinite(angle):
        raise ServoRangeError(cfg.joint_id, angle, *cfg.angle_span())
    pulse = round_half_away(cfg.neutral_us + math.degrees(angle) / (cfg.sign * cfg.scale_deg_per_us))
    if not cfg.min_us <= pulse <= cfg.max_us:
        raise ServoRangeError(cfg.joint_id, angle, *cfg.angle_span())
    return pulse


@dataclass(frozen=True)
class PwmFrame:
    """One 20 ms servo frame.  Range is not enforced here; see validate_frame."""
    t_ms: int
    pulses_us: tuple

    def __post_init__(self):
        pulses = tuple(self.pulses_us)
        if len(pulses) != 10:
            raise ValueError(f"expected 10 pulses, got {len(pulses)}")
        if not all(isinstance(p, int) for p in pulses):
            raise ValueError("pulses must be whole microseconds")
        if self.t_ms < 0:
            raise ValueError("t_ms must be >= 0")
        object.__setattr__(self, "pulses_us", pulses)

    def shifted(self, dt_ms) -> PwmFrame:
        return PwmFrame(self.t_ms + dt_ms, self.pulses_us)


@dataclass(frozen=True)
class Violation:
    joint_id: str
    pulse_us: int
    min_us: int
    max_us: int

    def __str__(self):
        return f"{self.joint_id}={self.pulse_us} outside [{self.min_us}, {self.max_us}]"


def validate_frame(frame: PwmFrame, cfgs=None):
    """Every out-of-range pulse as a Violation; an empty list means ok."""
    cfgs = cfgs or default_configs()
    return [Violation(c.joint_id, p, c.min_us, c.max_us)
            for c, p in zip(cfgs, frame.pulses_us)
            if not c.min_us <= p <= c.max_us]


def frame_to_joints(frame: PwmFrame, cfgs=None) -> JointVector:
    cfgs = cfgs or default_configs()
    return JointVector(tuple(pulse_to_angle(c, p) for c, p in zip(cfgs, frame.pulses_us)))


def parse_servo_configs(text: str):
    """Parse ``<JOINT_ID> neutral=<int> sign=<+1|-1> [min=] [max=] [scale=]`` lines.

    Joints not listed keep their defaults.
    """
    cfgs = {c.joint_id: c for c in default_configs()}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        jid, *fields = line.split()
        if jid not in JOINT_IDS:
            raise ServoConfigError(f"line {lineno}: unknown joint {jid!r}")
        if jid in seen:
            raise ServoConfigError(f"line {lineno}: duplicate joint {jid}")
        seen.add(jid)
        opts = {}
        for f in fields:
            key, eq, value = f.partition("=")
            if not eq or key not in ("neutral", "sign", "min", "max", "scale") or key in opts:
                raise ServoConfigError(f"line {lineno}: bad field {f!r}")
            opts[key] = value
        if "neutral" not in opts or "sign" not in opts:
            raise ServoConfigError(f"line {lineno}: neutral= and sign= are required")
        if opts["sign"] not in ("+1", "-1", "1"):
            raise ServoConfigError(f"line {lineno}: sign must be +1 or -1")
        try:
            cfgs[jid] = ServoConfig(
                jid,
                int(opts["neutral"]),
                int(opts["sign"]),
                int(opts.get("min", MIN_US)),
                int(opts.get("max", MAX_US)),
                float(opts.get("scale", DEFAULT_SCALE)),
            )
        except ServoConfigError as e:
            raise ServoConfigError(f"line {lineno}: {e}") from None
        except ValueError:
            raise ServoConfigError(f"line {lineno}: non-numeric value") from None
    return tuple(cfgs[j] for j in JOINT_IDS)


def load_servo_configs(path):
    return parse_servo_configs(Path(path).read_text(encoding="utf-8"))
