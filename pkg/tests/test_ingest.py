import socket
import threading
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sonobalance.geometry import RawSample
from sonobalance.ingest import (
    DATAGRAM_STRUCT,
    DropoutPolicy,
    MalformedRecord,
    Regularizer,
    ReplaySource,
    SimSource,
    SourceConfig,
    SourceKind,
    SourceUnavailable,
    StreamPump,
    UdpSource,
    encode_datagram,
    open_source,
    write_replay_csv,
)


def make_csv(tmp_path, rows, header="t_s,pitch_deg,roll_deg"):
    path = tmp_path / "replay.csv"
    path.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
    return path


def test_replay_three_rows(tmp_path):
    path = make_csv(tmp_path, ["0.0,1.0,2.0", "0.02,1.1,2.1", "0.04,1.2,2.2"])
    samples = list(ReplaySource(path).samples())
    assert len(samples) == 3
    assert samples[0] == RawSample(t=0.0, pitch=1.0, roll=2.0)
    assert [s.t for s in samples] == [0.0, 0.02, 0.04]


def test_replay_is_deterministic(tmp_path):
    path = make_csv(tmp_path, ["0.0,1.0,2.0", "0.02,1.1,2.1"])
    assert list(ReplaySource(path).samples()) == list(ReplaySource(path).samples())


def test_replay_malformed_row_names_line(tmp_path):
    path = make_csv(tmp_path, ["0.0,1.0,2.0", "0.02,not_a_number,2.1"])
    with pytest.raises(MalformedRecord) as err:
        list(ReplaySource(path).samples())
    assert err.value.line == 3


def test_replay_bad_header(tmp_path):
    path = make_csv(tmp_path, ["0.0,1.0,2.0"], header="time,p,r")
    with pytest.raises(MalformedRecord) as err:
        list(ReplaySource(path).samples())
    assert err.value.line == 1


def test_replay_missing_file(tmp_path):
    with pytest.raises(SourceUnavailable):
        ReplaySource(tmp_path / "nope.csv")


def test_write_replay_round_trip(tmp_path):
    samples = [RawSample(t=k * 0.02, pitch=0.1 * k, roll=-0.05 * k) for k in range(10)]
    path = tmp_path / "out.csv"
    write_replay_csv(path, samples)
    assert list(ReplaySource(path).samples()) == samples


def test_datagram_format_is_20_bytes():
    assert DATAGRAM_STRUCT.size == 20
    payload = encode_datagram(7, 123456, 1.5, -2.5)
    assert len(payload) == 20
    seq, ts, pitch, roll = DATAGRAM_STRUCT.unpack(payload)
    assert (seq, ts) == (7, 123456)
    assert pitch == pytest.approx(1.5)
    assert roll == pytest.approx(-2.5)


def test_udp_source_skips_corrupt_and_stale_datagrams():
    source = UdpSource(("127.0.0.1", 0))
    addr = source.address
    sender = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)

    received = []
    done = threading.Event()

    def consume():
        for sample in source.samples():
            received.append(sample)
            if len(received) >= 3:
                break
        done.set()

    thread = threading.Thread(target=consume, daemon=True)
    thread.start()
    time.sleep(0.05)
    sender.sendto(encode_datagram(1, 1_000_000, 1.0, 0.5), addr)
    sender.sendto(b"short", addr)                                   # malformed
    sender.sendto(encode_datagram(2, 1_020_000, 1.1, 0.6), addr)
    sender.sendto(encode_datagram(1, 1_040_000, 9.9, 9.9), addr)    # stale sequence
    sender.sendto(encode_datagram(3, 1_040_000, 1.2, 0.7), addr)
    assert done.wait(5.0), "udp consumer timed out"
    source.close()
    sender.close()

    assert [s.pitch for s in received] == pytest.approx([1.0, 1.1, 1.2])
    assert received[0].t == 0.0
    assert received[1].t == pytest.approx(0.02)
    assert source.malformed == 1
    assert source.dropped == 1


def test_udp_bind_conflict():
    first = UdpSource(("127.0.0.1", 0))
    with pytest.raises(SourceUnavailable):
        UdpSource(first.address)
    first.close()


def test_source_config_validation(tmp_path):
    with pytest.raises(ValueError):
        SourceConfig(kind=SourceKind.SIM, sample_rate=2.0)
    with pytest.raises(ValueError):
        SourceConfig(kind=SourceKind.SIM, sample_rate=2000.0)
    with pytest.raises(ValueError):
        SourceConfig(kind=SourceKind.REPLAY, path=None)
    with pytest.raises(SourceUnavailable):
        SourceConfig(kind=SourceKind.REPLAY, path=str(tmp_path / "missing.csv"))
    with pytest.raises(ValueError):
        SourceConfig(kind=SourceKind.UDP)


def test_open_source_sim_sample_count():
    from itertools import islice

    cfg = SourceConfig(kind=SourceKind.SIM, sample_rate=50.0, sim_seed=5)
    source = open_source(cfg)
    samples = list(islice(source.samples(), 3000))  # one 60 s session's worth
    source.close()
    assert len(samples) == 3000
    assert samples[-1].t == pytest.approx(59.98)
    assert all(s.t < 60.0 for s in samples)


def regular(n, rate=50.0, pitch=1.0):
    return [RawSample(t=k / rate, pitch=pitch, roll=0.0) for k in range(n)]


def test_regularize_identity_on_regular_input():
    stream = regular(100)
    out = list(Regularizer(stream, 50.0))
    assert out == stream


def test_regularize_is_idempotent():
    stream = regular(100)
    once = list(Regularizer(stream, 50.0))
    twice = list(Regularizer(once, 50.0))
    assert once == twice


def test_regularize_hold_last_fills_gap():
    stream = [RawSample(0.00, 1.0, 1.0), RawSample(0.02, 2.0, 2.0), RawSample(0.06, 4.0, 4.0)]
    reg = Regularizer(stream, 50.0, DropoutPolicy.HOLD_LAST)
    out = list(reg)
    assert [s.t for s in out] == pytest.approx([0.0, 0.02, 0.04, 0.06])
    assert out[2].pitch == 2.0  # previous value duplicated once
    assert reg.gap_count == 1


def test_regularize_interpolate_fills_midpoint():
    stream = [RawSample(0.00, 1.0, 1.0), RawSample(0.02, 2.0, 2.0), RawSample(0.06, 4.0, 4.0)]
    reg = Regularizer(stream, 50.0, DropoutPolicy.INTERPOLATE)
    out = list(reg)
    assert out[2].pitch == pytest.approx(3.0)
    assert out[2].roll == pytest.approx(3.0)
    assert reg.gap_count == 1


@given(st.lists(st.booleans(), min_size=10, max_size=300),
       st.sampled_from([DropoutPolicy.HOLD_LAST, DropoutPolicy.INTERPOLATE]))
@settings(max_examples=60)
def test_regularized_count_matches_duration(keep_flags, policy):
    # random dropout pattern; first and last samples always present
    rate = 50.0
    ticks = [k / rate for k in range(len(keep_flags) + 2)]
    kept = [ticks[0]] + [t for t, keep in zip(ticks[1:-1], keep_flags) if keep] + [ticks[-1]]
    stream = [RawSample(t=t, pitch=t, roll=0.0) for t in kept]
    out = list(Regularizer(stream, rate, policy))
    duration = kept[-1] - kept[0]
    expected = round(duration * rate) + 1
    assert abs(len(out) - expected) <= 1
    spacing = [b.t - a.t for a, b in zip(out, out[1:])]
    assert all(abs(s - 1 / rate) < 1e-9 for s in spacing)


def test_stream_pump_drops_oldest_on_overflow():
    class Burst:
        malformed = 0
        dropped = 0

        def samples(self):
            for k in range(500):
                yield RawSample(t=k * 0.02, pitch=0.0, roll=0.0)

        def set_warning(self, level):
            pass

        def close(self):
            pass

        def describe(self):
            return "burst"

    pump = StreamPump(Burst(), rate=50.0)  # queue holds 50 samples
    pump.start()
    time.sleep(0.2)  # let the producer overrun the buffer
    received = list(pump)
    assert pump.overflow_dropped > 0
    assert len(received) <= 500 - pump.overflow_dropped + 1
    assert received[-1].t == pytest.approx(499 * 0.02)


def test_sim_source_warning_feedback_reaches_simulator():
    from sonobalance.geometry import WarningLevel
    from sonobalance.simulate import SimConfig, SwaySimulator

    sim = SwaySimulator(SimConfig(seed=1), rate=50.0, feedback_enabled=True)
    source = SimSource(sim, sample_rate=50.0, duration=1.0)
    count = 0
    for _sample in source.samples():
        source.set_warning(WarningLevel.HIGH)
        count += 1
    assert count == 50
    assert sim._pending[-1] is WarningLevel.HIGH
