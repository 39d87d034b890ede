import io

import pytest

from wimaxsim.metrics import (
    CSV_HEADER, SimulationReport, aggregated_throughput, collision_probability,
    csv_row, csv_text, t16_rate, write_csv,
)


class TestAggregatedThroughput:
    def test_arithmetic(self):
        # 1000 segments of 960 payload bytes over 10 s = 768000 bit/s
        assert aggregated_throughput([1000 * 960], 10.0) == pytest.approx(768000.0)

    def test_idle(self):
        assert aggregated_throughput([], 5.0) == 0.0

    def test_additivity(self):
        one = aggregated_throughput([12345], 7.0)
        two = aggregated_throughput([12345, 12345], 7.0)
        assert two == pytest.approx(2 * one)

    def test_zero_window_rejected(self):
        with pytest.raises(ValueError):
            aggregated_throughput([1], 0.0)


class TestCollisionProbability:
    def test_vacuous(self):
        assert collision_probability(0, 0) == 0.0

    def test_counting(self):
        assert collision_probability(2, 4) == 0.5

    def test_no_collisions(self):
        assert collision_probability(0, 7) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            collision_probability(5, 4)


class TestT16Rate:
    def test_zero(self):
        assert t16_rate(0, 10, 100.0) == 0.0

    def test_arithmetic(self):
        assert t16_rate(50, 10, 100.0) == pytest.approx(0.05)

    def test_validation(self):
        with pytest.raises(ValueError):
            t16_rate(1, 0, 100.0)


def report(**overrides):
    base = dict(
        scenario="download_only", policy="rpg", n_ss=10, seed=1, frames=1000,
        duration_s=5.0, window_s=4.0, queue_limit=50, p_loss=0.0,
        throughput_bps=123456.789, collision_prob=0.5, collision_prob_periods=0.25,
        t16_rate=0.05, desync_events=2, wasted_grant_bytes=100, drops=3,
        per_flow_goodput_bps=(1.0, 2.0),
    )
    base.update(overrides)
    return SimulationReport(**base)


class TestCsv:
    def test_header_and_row_shape(self):
        text = csv_text([report()])
        lines = text.strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines[1].split(",")) == len(CSV_HEADER.split(","))

    def test_row_values(self):
        row = csv_row(report()).split(",")
        assert row[0] == "download_only"
        assert row[1] == "rpg"
        assert row[2] == "10"
        assert row[7] == "0.5"
        assert row[-1] == "0.25"

    def test_decimal_separator_is_dot(self):
        assert ";" not in csv_text([report()])
        assert "0.05" in csv_text([report()])

    def test_write_to_path(self, tmp_path):
        path = tmp_path / "out.csv"
        write_csv([report(), report(seed=2)], str(path))
        lines = path.read_text(encoding="utf-8").strip().split("\n")
        assert len(lines) == 3

    def test_report_is_immutable(self):
        r = report()
        with pytest.raises(AttributeError):
            r.throughput_bps = 0.0
