"""Report: table cells, variance bands, plot data files, determinism."""

import math

import pytest

from rcab.report import (
    ResultRow,
    emit_plots,
    rank_table,
    read_results,
    variance_summary,
)


def row(
    rank,
    trial=0,
    snapshot=15.0,
    augmenter="aflcem",
    extractor="vulnloc",
    target="m1",
    seed_id="poc_1B",
    n_crash=10,
    n_noncrash=20,
):
    return ResultRow(
        target=target,
        augmenter=augmenter,
        extractor=extractor,
        seed_id=seed_id,
        trial=trial,
        snapshot=snapshot,
        rank=rank,
        n_crash=n_crash,
        n_noncrash=n_noncrash,
        wall_ms=0,
    )


class TestRankTable:
    def test_single_trial_is_raw(self):
        rows = [row(3, snapshot=15.0), row(7, snapshot=120.0), row(2, snapshot=240.0)]
        table = rank_table(rows)
        assert table.techniques == ("aflcem x vulnloc",)
        assert [(t, s, c) for t, s, c in table.rows] == [
            ("m1", 15.0, ("3",)),
            ("m1", 120.0, ("7",)),
            ("m1", 240.0, ("2",)),
        ]

    def test_median_with_absent_as_infinity(self):
        rows = [row(1, trial=0), row(1, trial=1), row(math.inf, trial=2)]
        table = rank_table(rows, snapshot_subset=(15,))
        assert table.rows[0][2] == ("1",)

    def test_majority_absent_renders_dashes(self):
        rows = [row(math.inf, trial=0), row(math.inf, trial=1), row(4, trial=2)]
        table = rank_table(rows, snapshot_subset=(15,))
        assert table.rows[0][2] == ("--",)

    def test_all_nodata_renders_na(self):
        rows = [row(None, trial=0), row(None, trial=1)]
        table = rank_table(rows, snapshot_subset=(15,))
        assert table.rows[0][2] == ("N/A",)

    def test_default_points_scale(self):
        rows = [row(5, snapshot=150.0), row(9, snapshot=1200.0), row(2, snapshot=2400.0), row(1, snapshot=50.0)]
        table = rank_table(rows, scale=10)
        assert [s for _, s, _ in table.rows] == [150.0, 1200.0, 2400.0]


class TestVarianceSummary:
    def test_order_statistics(self):
        ranks = [9, 33, 47, 12, 15]
        rows = [row(r, trial=i) for i, r in enumerate(ranks)]
        bands = variance_summary(rows)
        assert len(bands) == 1
        band = bands[0]
        assert (band.min_rank, band.median_rank, band.max_rank) == (9, 15, 47)

    def test_identical_ranks_zero_width(self):
        rows = [row(4, trial=i) for i in range(5)]
        band = variance_summary(rows)[0]
        assert band.min_rank == band.median_rank == band.max_rank == 4

    def test_single_trial_warns(self, caplog):
        with caplog.at_level("WARNING"):
            variance_summary([row(3)])
        assert any("degenerate" in rec.message for rec in caplog.records)

    def test_absent_becomes_ceiling(self):
        rows = [row(2, trial=0), row(math.inf, trial=1), row(3, trial=2)]
        band = variance_summary(rows)[0]
        assert band.max_rank == math.inf
        assert band.min_rank == 2


class TestEmitPlots:
    def _rows_two_techniques_eight_snapshots(self):
        rows = []
        snapshots = [5.0, 15.0, 30.0, 45.0, 60.0, 120.0, 180.0, 240.0]
        for extractor, base in (("vulnloc", 1), ("aurora", 3)):
            for i, snap in enumerate(snapshots):
                rows.append(
                    row(base + (i % 3), snapshot=snap, extractor=extractor)
                )
        return rows

    def test_accuracy_csv_row_count(self, tmp_path):
        rows = self._rows_two_techniques_eight_snapshots()
        files = emit_plots(rows, tmp_path)
        accuracy = tmp_path / "fig_accuracy_m1.csv"
        assert accuracy in files
        lines = accuracy.read_text().splitlines()
        assert lines[0] == "technique,snapshot,rank"
        assert len(lines) == 1 + 2 * 8  # header + techniques x snapshots
        assert (tmp_path / "fig_accuracy_m1.svg").exists()

    def test_rerun_is_byte_identical_for_csvs(self, tmp_path):
        rows = self._rows_two_techniques_eight_snapshots()
        first_dir = tmp_path / "a"
        second_dir = tmp_path / "b"
        emit_plots(rows, first_dir)
        emit_plots(rows, second_dir)
        for csv_file in sorted(first_dir.glob("*.csv")):
            assert (second_dir / csv_file.name).read_bytes() == csv_file.read_bytes()

    def test_balance_deduplicated_across_extractors(self, tmp_path):
        rows = [
            row(1, extractor="vulnloc", n_crash=5, n_noncrash=9),
            row(2, extractor="aurora", n_crash=5, n_noncrash=9),
        ]
        emit_plots(rows, tmp_path)
        lines = (tmp_path / "fig_balance_m1.csv").read_text().splitlines()
        assert len(lines) == 2  # header + one campaign snapshot
        assert lines[1] == "aflcem,poc_1B,0,15,5,9"

    def test_every_figure_family_written(self, tmp_path):
        files = {p.name for p in emit_plots(self._rows_two_techniques_eight_snapshots(), tmp_path)}
        assert files == {
            "table2.csv",
            "fig_accuracy_m1.csv",
            "fig_accuracy_m1.svg",
            "fig_balance_m1.csv",
            "fig_balance_m1.svg",
            "fig_seeds_m1.csv",
            "fig_seeds_m1.svg",
            "fig_variance_m1.csv",
            "fig_variance_m1.svg",
        }


class TestReadResults:
    def test_missing_rows_rejected(self, tmp_path):
        path = tmp_path / "results.csv"
        path.write_text(
            "target,augmenter,extractor,seed_id,trial,snapshot,rank,"
            "n_crash,n_noncrash,wall_ms\n"
        )
        with pytest.raises(ValueError, match="no result rows"):
            read_results(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "results.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="expected header"):
            read_results(path)

    def test_round_trip_tokens(self, tmp_path):
        path = tmp_path / "results.csv"
        path.write_text(
            "target,augmenter,extractor,seed_id,trial,snapshot,rank,"
            "n_crash,n_noncrash,wall_ms\n"
            "m1,aflcem,vulnloc,poc_1B,0,15,3,1,2,0\n"
            "m1,aflcem,vulnloc,poc_1B,1,15,ABSENT,1,2,0\n"
            "m1,aflcem,vulnloc,poc_1B,2,15,NODATA,0,0,0\n"
        )
        rows = read_results(path)
        assert [r.rank for r in rows] == [3, math.inf, None]
