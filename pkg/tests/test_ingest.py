"""Log CSV parsing, day gridding, gap filling, and round-trip writing."""

import io
import math
from datetime import date, timedelta

import numpy as np
import pytest

from tvspc import (
    DayGrid,
    EmptyInputError,
    LogParseError,
    LogSchema,
    SchemaError,
    TimestampOrderError,
    UnfillableError,
    fill_and_assemble,
    grid_day,
    group_records_by_day,
    header_names,
    parse_log,
    write_log_csv,
)
from tvspc.ingest import format_timestamp, record_day, record_second

HEADER = "timestamp,a,b\n"


def test_header_names():
    assert header_names("timestamp,dc_voltage,humidity\n1,2,3\n") == (
        "dc_voltage",
        "humidity",
    )
    assert header_names(b"timestamp, a , b \n") == ("a", "b")


def test_header_rejects_bad_layout():
    with pytest.raises(SchemaError):
        header_names("time,a,b\n")
    with pytest.raises(SchemaError):
        header_names("timestamp\n")
    with pytest.raises(SchemaError):
        header_names("")


def test_parse_basic_log():
    text = HEADER + (
        "2021-06-01T00:00:00Z,1.5,2.5\n"
        "2021-06-01T00:00:01Z,1.25,NaN\n"
        "2021-06-01T00:00:03Z,,oops\n"
    )
    recs = parse_log(text, LogSchema())
    assert len(recs) == 3
    assert recs[0].values == (1.5, 2.5)
    assert recs[0].timestamp == 1622505600.0
    assert math.isnan(recs[1].values[1])  # explicit NaN cell
    assert math.isnan(recs[2].values[0])  # empty cell
    assert math.isnan(recs[2].values[1])  # unparseable cell
    assert recs[2].timestamp - recs[0].timestamp == 3.0


def test_parse_skips_blank_lines():
    text = HEADER + "2021-06-01T00:00:00Z,1,2\n\n2021-06-01T00:00:01Z,3,4\n\n"
    assert len(parse_log(text, LogSchema())) == 2


def test_parse_naive_timestamps_use_schema_offset():
    text = HEADER + "2021-06-01T01:00:00,1,2\n"
    utc = parse_log(text, LogSchema())[0]
    shifted = parse_log(text, LogSchema(tz_offset=timedelta(hours=2)))[0]
    assert utc.timestamp - shifted.timestamp == 7200.0


def test_parse_explicit_offset_wins():
    text = HEADER + "2021-06-01T03:00:00+02:00,1,2\n"
    rec = parse_log(text, LogSchema(tz_offset=timedelta(hours=-5)))[0]
    assert rec.timestamp == 1622509200.0  # 01:00 UTC


def test_parse_schema_name_check():
    text = HEADER + "2021-06-01T00:00:00Z,1,2\n"
    parse_log(text, LogSchema(variable_names=("a", "b")))
    with pytest.raises(SchemaError):
        parse_log(text, LogSchema(variable_names=("a", "c")))
    with pytest.raises(SchemaError):
        parse_log(text, LogSchema(variable_names=("a",)))


def test_parse_structural_errors():
    with pytest.raises(LogParseError) as info:
        parse_log(HEADER + "2021-06-01T00:00:00Z,1\n", LogSchema())
    assert "line 2" in str(info.value)
    with pytest.raises(LogParseError):
        parse_log(HEADER + "not-a-time,1,2\n", LogSchema())
    with pytest.raises(LogParseError):
        parse_log(b"\xff\xfe junk", LogSchema())


def test_parse_timestamp_order():
    text = HEADER + (
        "2021-06-01T00:00:02Z,1,2\n"
        "2021-06-01T00:00:01Z,1,2\n"
    )
    with pytest.raises(TimestampOrderError) as info:
        parse_log(text, LogSchema())
    assert "line 3" in str(info.value)
    # equal timestamps are also rejected
    text = HEADER + (
        "2021-06-01T00:00:02Z,1,2\n"
        "2021-06-01T00:00:02Z,1,2\n"
    )
    with pytest.raises(TimestampOrderError):
        parse_log(text, LogSchema())


def test_parse_empty_log():
    with pytest.raises(EmptyInputError):
        parse_log(HEADER, LogSchema())
    with pytest.raises(SchemaError):
        parse_log("", LogSchema())


def test_record_day_and_second():
    recs = parse_log(
        HEADER + "2021-06-01T23:59:59Z,1,2\n2021-06-02T00:00:00Z,3,4\n",
        LogSchema(),
    )
    assert record_day(recs[0]) == date(2021, 6, 1)
    assert record_day(recs[1]) == date(2021, 6, 2)
    assert record_second(recs[0]) == 86399
    assert record_second(recs[1]) == 0
    # a +02:00 wall clock shifts the day boundary
    off = timedelta(hours=2)
    assert record_day(recs[0], off) == date(2021, 6, 2)
    assert record_second(recs[0], off) == 7199


def test_group_records_by_day():
    recs = parse_log(
        HEADER
        + "2021-06-01T10:00:00Z,1,2\n"
        + "2021-06-01T10:00:01Z,1,2\n"
        + "2021-06-02T00:00:01Z,1,2\n",
        LogSchema(),
    )
    groups = group_records_by_day(recs)
    assert [d.isoformat() for d in groups] == ["2021-06-01", "2021-06-02"]
    assert len(groups[date(2021, 6, 1)]) == 2


def test_grid_day_places_and_overwrites():
    text = HEADER + (
        "2021-06-01T00:00:00Z,1,10\n"
        "2021-06-01T00:00:02Z,2,20\n"
        "2021-06-01T00:00:02.700Z,3,30\n"  # same second, later record wins
    )
    recs = parse_log(text, LogSchema())
    grid = grid_day(recs, date(2021, 6, 1), k_slices=5)
    assert grid.k_slices == 5
    assert grid.n_vars == 2
    assert grid.matrix[0, 0] == 1.0
    assert grid.matrix[2, 1] == 30.0
    assert grid.missing_mask[1].all()  # unobserved second
    assert not grid.missing_mask[2].any()


def test_grid_day_rejects_foreign_records():
    recs = parse_log(HEADER + "2021-06-02T00:00:00Z,1,2\n", LogSchema())
    with pytest.raises(ValueError):
        grid_day(recs, date(2021, 6, 1), k_slices=10)
    recs = parse_log(HEADER + "2021-06-01T00:00:30Z,1,2\n", LogSchema())
    with pytest.raises(ValueError):
        grid_day(recs, date(2021, 6, 1), k_slices=10)


def test_fill_and_assemble_fills_gaps():
    k = 6
    rng = np.random.default_rng(20)
    grids = []
    for i in range(3):
        matrix = rng.standard_normal((k, 2))
        mask = np.zeros((k, 2), dtype=bool)
        grids.append(
            DayGrid(day_id=date(2021, 6, 1 + i), matrix=matrix, missing_mask=mask)
        )
    # poke a middle gap and a leading gap into day 1
    m = grids[1].matrix.copy()
    mask = grids[1].missing_mask.copy()
    m[3, 0] = np.nan
    mask[3, 0] = True
    m[0, 1] = np.nan
    mask[0, 1] = True
    grids[1] = DayGrid(day_id=grids[1].day_id, matrix=m, missing_mask=mask)

    tensor = fill_and_assemble(grids, ("a", "b"))
    assert tensor.x.shape == (3, k, 2)
    assert tensor.x[1, 3, 0] == tensor.x[1, 2, 0]  # previous second's value
    assert tensor.x[1, 0, 1] == tensor.x[1, 1, 1]  # leading gap takes first seen
    assert np.isfinite(tensor.x).all()


def test_fill_and_assemble_sorts_days():
    k = 4
    mk = lambda d, fill: DayGrid(
        day_id=d,
        matrix=np.full((k, 1), fill),
        missing_mask=np.zeros((k, 1), dtype=bool),
    )
    tensor = fill_and_assemble(
        [mk(date(2021, 6, 3), 3.0), mk(date(2021, 6, 1), 1.0), mk(date(2021, 6, 2), 2.0)],
        ("a",),
    )
    assert tensor.day_ids == (date(2021, 6, 1), date(2021, 6, 2), date(2021, 6, 3))
    assert tensor.x[0, 0, 0] == 1.0
    assert tensor.x[2, 0, 0] == 3.0


def test_fill_and_assemble_whole_day_gap_is_fatal():
    k = 4
    matrix = np.full((k, 2), np.nan)
    matrix[:, 0] = 1.0
    mask = np.zeros((k, 2), dtype=bool)
    mask[:, 1] = True
    bad = DayGrid(day_id=date(2021, 6, 2), matrix=matrix, missing_mask=mask)
    good = DayGrid(
        day_id=date(2021, 6, 1),
        matrix=np.ones((k, 2)),
        missing_mask=np.zeros((k, 2), dtype=bool),
    )
    with pytest.raises(UnfillableError) as info:
        fill_and_assemble([good, bad], ("a", "b"))
    assert "2021-06-02" in str(info.value)
    assert "b" in str(info.value)


def test_fill_and_assemble_validation():
    k = 4
    g = DayGrid(
        day_id=date(2021, 6, 1),
        matrix=np.ones((k, 1)),
        missing_mask=np.zeros((k, 1), dtype=bool),
    )
    with pytest.raises(ValueError):
        fill_and_assemble([g], ("a",))
    with pytest.raises(ValueError):
        fill_and_assemble([g, g], ("a",))  # duplicate day
    g2 = DayGrid(
        day_id=date(2021, 6, 2),
        matrix=np.ones((k + 1, 1)),
        missing_mask=np.zeros((k + 1, 1), dtype=bool),
    )
    with pytest.raises(ValueError):
        fill_and_assemble([g, g2], ("a",))  # shape mismatch


def test_format_timestamp():
    assert format_timestamp(date(2021, 6, 1), 0) == "2021-06-01T00:00:00Z"
    assert format_timestamp(date(2021, 6, 1), 86399) == "2021-06-01T23:59:59Z"
    assert (
        format_timestamp(date(2021, 6, 1), 3661, timedelta(hours=5, minutes=30))
        == "2021-06-01T01:01:01+05:30"
    )
    assert (
        format_timestamp(date(2021, 6, 1), 60, timedelta(hours=-7))
        == "2021-06-01T00:01:00-07:00"
    )


def test_write_parse_round_trip_is_bit_exact():
    rng = np.random.default_rng(21)
    k = 50
    matrix = rng.standard_normal((k, 3)) * 1e3
    matrix[7, 1] = 1.0 / 3.0  # not representable in short decimal
    mask = np.zeros((k, 3), dtype=bool)
    mask[5, 0] = True
    buf = io.StringIO()
    write_log_csv(buf, date(2021, 6, 1), matrix, ("a", "b", "c"), missing_mask=mask)
    recs = parse_log(buf.getvalue(), LogSchema(variable_names=("a", "b", "c")))
    grid = grid_day(recs, date(2021, 6, 1), k_slices=k)
    assert np.array_equal(grid.missing_mask, mask)
    assert np.array_equal(grid.matrix[~mask], matrix[~mask])


def test_write_round_trip_with_offset():
    matrix = np.arange(8.0).reshape(4, 2)
    off = timedelta(hours=2)
    buf = io.StringIO()
    write_log_csv(buf, date(2021, 6, 1), matrix, ("a", "b"), tz_offset=off)
    recs = parse_log(buf.getvalue(), LogSchema(tz_offset=off))
    grid = grid_day(recs, date(2021, 6, 1), k_slices=4, tz_offset=off)
    assert np.array_equal(grid.matrix, matrix)
    assert "+02:00" in buf.getvalue().splitlines()[1]
