import numpy as np
import pytest
from hypothesis import given, strategies as st

from evcodec.errors import EventFormatError
from evcodec.events import (EventStream, format_events, parse_events,
                            raw_size_bits)

from streams import poisson_stream


def test_parse_single_line():
    stream = parse_events("0.000001 120 90 1", 240, 180)
    assert len(stream) == 1
    ev = stream.event(0)
    assert ev.t == pytest.approx(1e-6)
    assert (ev.x, ev.y, ev.p) == (120, 90, 1)


def test_parse_empty_input():
    stream = parse_events("", 240, 180)
    assert len(stream) == 0


def test_parse_skips_comments_and_blanks():
    text = "# header\n\n0.1 1 2 0\n   \n# more\n0.2 3 4 1\n"
    stream = parse_events(text, 10, 10)
    assert len(stream) == 2


def test_parse_decreasing_timestamp():
    with pytest.raises(EventFormatError, match="decreasing timestamp at line 2"):
        parse_events("0.5 0 0 0\n0.3 0 0 1", 10, 10)


def test_parse_malformed_line_reports_number():
    with pytest.raises(EventFormatError, match="line 3"):
        parse_events("0.1 0 0 0\n0.2 0 0 1\n0.3 0 0\n", 10, 10)


def test_parse_bad_field_types():
    with pytest.raises(EventFormatError, match="line 1"):
        parse_events("abc 0 0 0", 10, 10)


@pytest.mark.parametrize("line,msg", [
    ("0.1 10 0 0", "x=10"),
    ("0.1 0 10 0", "y=10"),
    ("0.1 0 0 2", "polarity 2"),
    ("-0.1 0 0 0", "negative"),
])
def test_parse_bounds_and_polarity(line, msg):
    with pytest.raises(EventFormatError, match=msg):
        parse_events(line, 10, 10)


def test_stream_validation():
    with pytest.raises(ValueError, match="non-decreasing"):
        EventStream(np.array([0.5, 0.3]), np.array([0, 0]), np.array([0, 0]),
                    np.array([0, 0]), 10, 10)
    with pytest.raises(ValueError, match="polarity"):
        EventStream(np.array([0.1]), np.array([0]), np.array([0]),
                    np.array([3]), 10, 10)
    with pytest.raises(ValueError, match="bounds"):
        EventStream(np.array([0.1]), np.array([12]), np.array([0]),
                    np.array([0]), 10, 10)


def test_serialize_parse_round_trip():
    stream = poisson_stream(3, 500)
    back = parse_events(format_events(stream), stream.sensor_width,
                        stream.sensor_height)
    assert len(back) == len(stream)
    np.testing.assert_allclose(back.t, stream.t, atol=1e-9)
    np.testing.assert_array_equal(back.x, stream.x)
    np.testing.assert_array_equal(back.y, stream.y)
    np.testing.assert_array_equal(back.p, stream.p)


@given(st.integers(0, 2000))
def test_raw_size_is_64_bits_per_event(n):
    stream = EventStream(np.linspace(0, 1, n), np.zeros(n, dtype=int),
                         np.zeros(n, dtype=int), np.zeros(n, dtype=int), 4, 4)
    assert raw_size_bits(stream) == 64 * n


def test_raw_size_examples():
    assert raw_size_bits(poisson_stream(0, 100)) == 6400
    assert raw_size_bits(poisson_stream(0, 0)) == 0
    assert raw_size_bits(poisson_stream(0, 1)) == 64


def test_raw_size_linear_under_concat():
    a = poisson_stream(1, 120)
    b = poisson_stream(2, 80)
    t = np.concatenate([a.t, b.t + a.t[-1] + 1.0])
    cat = EventStream(t, np.concatenate([a.x, b.x]), np.concatenate([a.y, b.y]),
                      np.concatenate([a.p, b.p]), a.sensor_width, a.sensor_height)
    assert raw_size_bits(cat) == raw_size_bits(a) + raw_size_bits(b)


def test_first_seconds_slices_from_stream_start():
    stream = poisson_stream(5, 400, duration=0.1)
    head = stream.first_seconds(0.02)
    assert len(head) > 0
    assert head.t[-1] < stream.t[0] + 0.02
    assert len(stream.first_seconds(1.0)) == len(stream)
