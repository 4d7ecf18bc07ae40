import random
import string

import pytest
from hypothesis import given, settings, strategies as st

from gaitforge.comm import (
    ChecksumError,
    CommandError,
    Forward,
    Master,
    SetStageDuration,
    Slave,
    Stop,
    WireArityError,
    WireParseError,
    checksum,
    decode_frame,
    encode_frame,
    master_tick,
    parse_command,
    slave_apply,
)
from gaitforge.gait import builtin_forward_table, generate_cycle
from gaitforge.servo import STAGE_ONE_PULSES, PwmFrame, validate_frame

frames = st.builds(PwmFrame, st.integers(0, 10**7).map(lambda k: 20 * k),
                   st.lists(st.integers(800, 2400), min_size=10, max_size=10).map(tuple))


def random_frame(rng):
    return PwmFrame(20 * rng.randint(0, 10**6), tuple(rng.randint(800, 2400) for _ in range(10)))


def single_char_mutations(line):
    alphabet = string.printable.strip() + " "
    for i, c in enumerate(line):
        for r in alphabet:
            if r != c:
                yield line[:i] + r + line[i + 1:]


def run_master(master, until_ms, step=20, start=0):
    out = []
    for t in range(start, until_ms + 1, step):
        out.extend(master.tick(t))
    return out


# -- commands --------------------------------------------------------------

def test_parse_commands():
    assert parse_command("CMD FWD 2") == Forward(2)
    assert parse_command("CMD STOP") == Stop()
    assert parse_command("CMD DUR 400\n") == SetStageDuration(400)


@pytest.mark.parametrize("line,token", [
    ("CMD FWD 0", "≥ 1"),
    ("CMD FWD two", "'two'"),
    ("CMD FWD -1", "'-1'"),
    ("CMD DUR 30", "'30'"),
    ("CMD JUMP 1", "'JUMP'"),
    ("cmd FWD 1", "cmd"),
    ("CMD  FWD 1", "''"),
    ("CMD STOP 1", "STOP"),
])
def test_parse_command_errors(line, token):
    with pytest.raises(CommandError, match=token):
        parse_command(line)


# -- wire ------------------------------------------------------------------

def test_encode_format():
    f = PwmFrame(0, STAGE_ONE_PULSES)
    line = encode_frame(f)
    body = "F 0 870 1152 957 957 1696 2152 1043 957 1935 1761"
    assert line == f"{body} *{checksum(body):02X}"
    ck = 0
    for ch in body:
        ck ^= ord(ch)
    assert line.endswith(f"*{ck:02X}")


@settings(max_examples=300)
@given(frames)
def test_round_trip(f):
    assert decode_frame(encode_frame(f)) == f
    assert decode_frame(encode_frame(f) + "\n") == f


def test_round_trip_and_injective_sample():
    rng = random.Random(3)
    sample = {random_frame(rng) for _ in range(2000)}
    lines = {encode_frame(f) for f in sample}
    assert len(lines) == len(sample)
    assert all(decode_frame(encode_frame(f)) == f for f in sample)


def test_single_char_mutations_rejected():
    rng = random.Random(11)
    total = rejected = 0
    for _ in range(20):
        line = encode_frame(random_frame(rng))
        for m in single_char_mutations(line):
            total += 1
            try:
                decode_frame(m)
            except ValueError:
                rejected += 1
    assert rejected / total >= 0.99


def test_checksum_zeroed_is_checksum_error():
    line = encode_frame(PwmFrame(0, STAGE_ONE_PULSES))
    assert not line.endswith("*00")
    with pytest.raises(ChecksumError):
        decode_frame(line[:-2] + "00")


def _with_checksum(body):
    return f"{body} *{checksum(body):02X}"


def test_decode_error_kinds():
    with pytest.raises(WireArityError):
        decode_frame(_with_checksum("F 0 " + " ".join(["1500"] * 9)))
    with pytest.raises(WireParseError):
        decode_frame(_with_checksum("F 0 " + " ".join(["15x0"] * 10)))
    with pytest.raises(WireParseError):
        decode_frame(_with_checksum("G 0 " + " ".join(["1500"] * 10)))
    with pytest.raises(WireParseError):
        decode_frame("F 0 1500")
    # lowercase hex in the trailer is malformed, not merely a wrong checksum
    body = next(b for b in (f"F {20 * k} " + " ".join(["1500"] * 10) for k in range(100))
                if any(c in "ABCDEF" for c in f"{checksum(b):02X}"))
    with pytest.raises(WireParseError):
        decode_frame(f"{body} *{checksum(body):02x}")


# -- master ----------------------------------------------------------------

def test_master_forward_one_matches_gait():
    m = Master()
    m.submit(Forward(1))
    lines = run_master(m, 3000)
    expected = generate_cycle(builtin_forward_table(), 500, 1).frames
    assert [decode_frame(l) for l in lines] == list(expected)
    assert not m.running


def test_master_idle_emits_nothing():
    m = Master()
    assert run_master(m, 1000) == []


def test_master_stop_drains_to_stage_one():
    m = Master()
    m.submit(Forward(3))
    lines = run_master(m, 700)
    m.submit(Stop())
    lines += run_master(m, 10_000, start=720)
    got = [decode_frame(l) for l in lines]
    assert got[-1].pulses_us == STAGE_ONE_PULSES
    assert got[-1].t_ms == 2500  # end of the first cycle
    assert len(got) == 126


def test_master_stop_at_stage_one_halts_immediately():
    m = Master()
    m.submit(Forward(2))
    lines = run_master(m, 2500)
    m.submit(Stop())
    assert run_master(m, 5000, start=2520) == []
    assert decode_frame(lines[-1]).pulses_us == STAGE_ONE_PULSES


def test_master_stop_before_first_tick_sends_hold_frame():
    m = Master()
    m.submit(Forward(1))
    m.submit(Stop())
    lines = run_master(m, 1000)
    assert [decode_frame(l) for l in lines] == [PwmFrame(0, STAGE_ONE_PULSES)]


def test_master_forward_while_running_extends():
    m = Master()
    m.submit(Forward(1))
    lines = run_master(m, 1000)
    m.submit(Forward(1))
    lines += run_master(m, 6000, start=1020)
    expected = generate_cycle(builtin_forward_table(), 500, 2).frames
    assert [decode_frame(l) for l in lines] == list(expected)


def test_master_later_walk_keeps_timestamps_increasing():
    m = Master()
    m.submit(Forward(1))
    lines = run_master(m, 2600)
    m.submit(SetStageDuration(100))
    m.submit(Forward(1))
    lines += run_master(m, 4000, start=2620)
    ts = [decode_frame(l).t_ms for l in lines]
    assert all(b > a for a, b in zip(ts, ts[1:]))
    assert len(lines) == 126 + 26


def test_master_tick_backwards_rejected():
    m = Master()
    m.tick(100)
    with pytest.raises(ValueError):
        m.tick(80)


def test_master_tick_function_form():
    m = Master()
    m.submit(Forward(1))
    state, lines = master_tick(m, 40)
    assert state is m and len(lines) == 3


def test_master_coarse_ticks_catch_up():
    m = Master()
    m.submit(Forward(1))
    lines = m.tick(1000) + m.tick(5000)
    assert [decode_frame(l) for l in lines] == list(generate_cycle(builtin_forward_table()).frames)


# -- slave -----------------------------------------------------------------

def test_slave_ack():
    s = Slave()
    line = encode_frame(PwmFrame(0, STAGE_ONE_PULSES))
    state, ack = slave_apply(s, line)
    assert ack == "ACK 0"
    assert s.last_frame == PwmFrame(0, STAGE_ONE_PULSES)


def test_slave_checksum_error_leaves_state():
    s = Slave()
    s.apply(encode_frame(PwmFrame(0, STAGE_ONE_PULSES)))
    bad = encode_frame(PwmFrame(20, (1500,) * 10))[:-2] + "00"
    assert s.apply(bad).startswith("ERR 1 ")
    assert s.last_frame.t_ms == 0
    assert s.error_count == 1


def test_slave_parse_error():
    s = Slave()
    assert s.apply(_with_checksum("F 0 1500")).startswith("ERR 2 ")
    assert s.apply("garbage").startswith("ERR 2 ")
    assert s.last_frame is None


def test_slave_range_error_names_joint():
    s = Slave()
    pulses = list(STAGE_ONE_PULSES)
    pulses[6] = 2500
    ack = s.apply(encode_frame(PwmFrame(20, tuple(pulses))))
    assert ack == "ERR 3 LJ2=2500"
    assert s.last_frame is None


def test_slave_safety_under_fuzz():
    rng = random.Random(5)
    s = Slave()
    pool = string.digits + " F*ABCDEF-x\n"
    for i in range(5000):
        f = PwmFrame(20 * i, tuple(rng.randint(600, 2600) for _ in range(10)))
        line = encode_frame(f)
        if rng.random() < 0.5:
            k = rng.randrange(len(line))
            line = line[:k] + rng.choice(pool) + line[k + 1:]
        ack = s.apply(line)
        assert ack.startswith(("ACK ", "ERR 1 ", "ERR 2 ", "ERR 3 "))
        assert "\n" not in ack
        if s.last_frame is not None:
            assert validate_frame(s.last_frame) == []


def test_end_to_end_equivalence_and_determinism():
    def run():
        m, s = Master(), Slave()
        m.submit(Forward(2))
        log, applied = [], []
        for t in range(0, 6000, 20):
            for line in m.tick(t):
                ack = s.apply(line)
                log += [line, ack]
                applied.append(s.last_frame)
        return log, applied

    log1, applied = run()
    log2, _ = run()
    assert log1 == log2
    assert applied == list(generate_cycle(builtin_forward_table(), 500, 2).frames)
