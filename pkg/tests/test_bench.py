"""Orchestrator: planning, matrix execution, results.csv determinism."""

import textwrap

import pytest

from rcab import bench
from rcab.augment import Budget
from rcab.bench import (
    ABSENT,
    NODATA,
    PlanError,
    campaigns,
    load_config,
    plan,
    run_plan,
    write_results,
)


def make_plan(mock_manifests, names=("m1",), **overrides):
    config = {
        "targets": [str(mock_manifests[n]) for n in names],
        "augmenters": ["aflcem", "concfuzz"],
        "extractors": ["vulnloc", "aurora"],
        "budget": Budget(execs=300),
        "schedule_scale": 10,
        "base_rng": 7,
        "trials": 2,
        "workers": 1,
    }
    config.update(overrides)
    return plan(config)


class TestPlan:
    def test_cross_product_counts(self, mock_manifests):
        experiment = make_plan(mock_manifests, trials=5)
        # 1 target x 2 augmenters x 1 seed x 5 trials
        assert experiment.campaign_count() == 10
        assert experiment.pairing_count() == 20

    def test_single_trial(self, mock_manifests):
        experiment = make_plan(mock_manifests, trials=1)
        assert experiment.campaign_count() == 2

    def test_empty_extractors_rejected(self, mock_manifests):
        with pytest.raises(PlanError, match="extractor"):
            make_plan(mock_manifests, extractors=[])

    def test_unknown_method_rejected(self, mock_manifests):
        with pytest.raises(PlanError, match="unknown augmenter"):
            make_plan(mock_manifests, augmenters=["aflcem", "wibble"])

    def test_unknown_target_rejected(self, mock_manifests):
        with pytest.raises(FileNotFoundError):
            make_plan(mock_manifests, targets=["/nonexistent/manifest.rcab"])

    def test_trial_rng_is_base_plus_index(self, mock_manifests):
        experiment = make_plan(mock_manifests, trials=3, base_rng=100)
        jobs = campaigns(experiment)
        assert sorted({j.rng_seed for j in jobs}) == [100, 101, 102]
        for job in jobs:
            assert job.rng_seed == 100 + job.trial

    def test_seed_id_carries_byte_length(self, mock_manifests):
        experiment = make_plan(mock_manifests)
        job = campaigns(experiment)[0]
        assert job.seed_id == "poc_1B"

    def test_out_of_range_seed_index(self, mock_manifests):
        with pytest.raises(PlanError, match="seed index"):
            make_plan(mock_manifests, seeds=[3])


class TestRunPlan:
    def test_matrix_complete_and_deterministic(self, mock_manifests):
        experiment = make_plan(mock_manifests, trials=2)
        rows = run_plan(experiment)
        schedule = experiment.schedule()
        # 2 augmenters x 2 extractors x 2 trials x |schedule|
        assert len(rows) == 4 * 2 * len(schedule)
        coords = {
            (r.target, r.augmenter, r.extractor, r.seed_id, r.trial, r.snapshot)
            for r in rows
        }
        assert len(coords) == len(rows)  # every coordinate exactly once
        snapshots = {r.snapshot for r in rows}
        assert snapshots == set(schedule)
        again = run_plan(experiment)
        assert rows == again

    def test_snapshot_times_follow_scaled_schedule(self, mock_manifests):
        experiment = make_plan(mock_manifests, budget=Budget(execs=200), schedule_scale=10)
        assert experiment.schedule() == [50, 150]

    def test_degenerate_snapshot_yields_nodata_then_recovers(self, tmp_path):
        # all-crash target: every extraction is degenerate
        target = tmp_path / "allcrash"
        (target / "seeds").mkdir(parents=True)
        (target / "seeds" / "poc.bin").write_bytes(b"\x00")
        manifest = target / "manifest.rcab"
        manifest.write_text(
            textwrap.dedent(
                """\
                id allcrash
                kind mock
                timeout_ms 1000

                block_map:
                1 ac.c:1

                ground_truth:
                ac.c:1

                seeds:
                seeds/poc.bin

                program:
                EMIT 1
                CRASH 11
                """
            )
        )
        experiment = plan(
            {
                "targets": [str(manifest)],
                "augmenters": ["aflcem"],
                "extractors": ["vulnloc", "aurora"],
                "budget": Budget(execs=100),
                "schedule_scale": 10,
                "trials": 1,
                "workers": 1,
            }
        )
        rows = run_plan(experiment)
        assert rows
        assert all(r.rank == NODATA for r in rows)
        assert all(r.n_noncrash == 0 for r in rows)

    def test_failed_campaign_emits_nodata_and_matrix_continues(self, mock_manifests, tmp_path):
        # make a copy of m1 whose registered seed does not crash
        src = mock_manifests["m1"]
        target = tmp_path / "badseed"
        (target / "seeds").mkdir(parents=True)
        (target / "seeds" / "poc.bin").write_bytes(bytes([0]))  # benign
        (target / "seeds" / "benign.bin").write_bytes(bytes([1]))
        manifest = target / "manifest.rcab"
        manifest.write_text(src.read_text())
        experiment = plan(
            {
                "targets": [str(manifest), str(mock_manifests["m1"])],
                "augmenters": ["aflcem"],
                "extractors": ["vulnloc"],
                "budget": Budget(execs=200),
                "schedule_scale": 10,
                "trials": 1,
                "workers": 1,
            }
        )
        rows = run_plan(experiment)
        schedule = experiment.schedule()
        # both targets carry id m1 (copied manifest); split rows by outcome
        assert len(rows) == 2 * len(schedule)
        assert sum(1 for r in rows if r.rank == NODATA) == len(schedule)
        assert sum(1 for r in rows if r.rank == 1) == len(schedule)

    def test_worker_pool_matches_inline(self, mock_manifests):
        inline = run_plan(make_plan(mock_manifests, trials=2, workers=1))
        pooled = run_plan(make_plan(mock_manifests, trials=2, workers=2))
        assert inline == pooled


class TestResultsCsv:
    def test_write_and_append(self, mock_manifests, tmp_path):
        experiment = make_plan(mock_manifests, trials=1)
        rows = run_plan(experiment)
        out = tmp_path / "results.csv"
        write_results(rows, out)
        text = out.read_text()
        assert text.startswith(
            "target,augmenter,extractor,seed_id,trial,snapshot,rank,"
            "n_crash,n_noncrash,wall_ms\n"
        )
        assert len(text.splitlines()) == len(rows) + 1
        write_results(rows, out)  # append keeps one header
        assert len(out.read_text().splitlines()) == 2 * len(rows) + 1

    def test_rank_tokens(self, mock_manifests, tmp_path):
        experiment = make_plan(mock_manifests, trials=1)
        rows = run_plan(experiment)
        out = tmp_path / "results.csv"
        write_results(rows, out)
        for line in out.read_text().splitlines()[1:]:
            token = line.split(",")[6]
            assert token.isdigit() or token in (ABSENT, NODATA)

    def test_wall_ms_zero_under_exec_budgets(self, mock_manifests, tmp_path):
        experiment = make_plan(mock_manifests, trials=1)
        rows = run_plan(experiment)
        assert all(r.wall_ms == 0 for r in rows)


class TestConfigFile:
    def test_load_config_resolves_paths(self, mock_manifests, tmp_path):
        cfg = tmp_path / "bench.cfg"
        manifest = mock_manifests["m1"]
        cfg.write_text(
            textwrap.dedent(
                f"""\
                trials 2
                budget 400execs
                schedule_scale 10
                base_rng 99
                workers 1
                out_dir results_here

                targets:
                {manifest}

                augmenters:
                aflcem

                extractors:
                vulnloc
                aurora
                """
            )
        )
        experiment = load_config(cfg)
        assert experiment.trials == 2
        assert experiment.budget == Budget(execs=400)
        assert experiment.base_rng == 99
        assert experiment.out_dir == (tmp_path / "results_here").resolve()
        assert experiment.extractors == ("vulnloc", "aurora")
        assert experiment.campaign_count() == 2
