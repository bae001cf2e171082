"""CLI exit codes and golden equivalence with the library operations."""

import csv
import json

import pytest

from fist.cli import main
from fist.sampledata import build_sample_report


@pytest.fixture()
def report_file(tmp_path):
    path = tmp_path / "report.md"
    path.write_text(build_sample_report(seed=2, report_number=1), encoding="utf-8")
    return path


class TestExitCodes:
    def test_prep_success(self, report_file, tmp_path, capsys):
        out = tmp_path / "ds.jsonl"
        assert main(["prep", "--in", str(report_file), "--out", str(out)]) == 0
        assert out.exists()

    def test_domain_error_is_1(self, tmp_path, capsys):
        missing_table = tmp_path / "plain.md"
        missing_table.write_text("# Only\nprose here.\n")
        assert main(["augment", "--in", str(missing_table), "--seed", "1"]) == 1

    def test_usage_error_is_2(self):
        with pytest.raises(SystemExit) as err:
            main(["prep", "--in-nonexistent-flag", "x"])
        assert err.value.code == 2

    def test_unknown_subcommand_is_2(self):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 2


class TestJsonFlag:
    def test_prep_json_output(self, report_file, tmp_path, capsys):
        out = tmp_path / "ds.jsonl"
        assert main(["prep", "--in", str(report_file), "--out", str(out), "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["pairs"] == len(out.read_text().splitlines())

    def test_error_json_output(self, tmp_path, capsys):
        missing_table = tmp_path / "plain.md"
        missing_table.write_text("# Only\nprose.\n")
        assert main(["augment", "--in", str(missing_table), "--seed", "1", "--json"]) == 1
        payload = json.loads(capsys.readouterr().out)
        assert "error" in payload


class TestGoldenEquivalence:
    def test_prep_matches_library(self, report_file, tmp_path, capsys):
        """The subcommand is a thin adapter: same seeds, same bytes."""
        from fist.cli import build_dataset
        from fist.dataprep import StyleAttrs, export_jsonl

        cli_out = tmp_path / "cli.jsonl"
        main(
            ["prep", "--in", str(report_file), "--out", str(cli_out),
             "--augment", "3", "--seed", "7", "--report-id", "report"]
        )
        lib_out = tmp_path / "lib.jsonl"
        pairs, _ = build_dataset(
            report_file.read_text(encoding="utf-8"), "report", augment=3, seed=7,
            jitter=0.05, style=StyleAttrs(), config_dir=None,
        )
        export_jsonl(pairs, lib_out)
        assert cli_out.read_bytes() == lib_out.read_bytes()

    def test_augment_deterministic_across_invocations(self, report_file, tmp_path, capsys):
        out_a = tmp_path / "a.md"
        out_b = tmp_path / "b.md"
        main(["augment", "--in", str(report_file), "--seed", "5", "--out", str(out_a)])
        main(["augment", "--in", str(report_file), "--seed", "5", "--out", str(out_b)])
        assert out_a.read_bytes() == out_b.read_bytes()


class TestMonitorCommand:
    def test_three_run_means_strictly_decrease(self, tmp_path, capsys):
        out = tmp_path / "scatter.csv"
        code = main(
            ["monitor", "--metric", "ce", "--out", str(out), "--prompts", "6",
             "--svg", "--json"]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        means = payload["per_run_mean"]
        assert (
            means["mock:untrained"] > means["mock:stage1"] > means["mock:stage2"]
        )
        assert out.with_suffix(".svg").exists()
        with out.open() as fh:
            rows = list(csv.DictReader(fh))
        labels = {r["run_label"] for r in rows}
        assert labels == {"mock:untrained", "mock:stage1", "mock:stage2"}


def test_cli_pipeline_flow(report_file, tmp_path, capsys):
    ds = tmp_path / "ds.jsonl"
    runs = tmp_path / "runs"
    main(["prep", "--in", str(report_file), "--out", str(ds), "--augment", "2"])
    capsys.readouterr()
    assert main(
        ["finetune", "--stage", "1", "--dataset", str(ds), "--run-dir", str(runs),
         "--eval-queries", "6", "--json"]
    ) == 0
    run_id = json.loads(capsys.readouterr().out)["run_id"]
    assert main(["eval", "--run", run_id, "--run-dir", str(runs), "--json"]) == 0
    eval_payload = json.loads(capsys.readouterr().out)
    assert eval_payload["state"] == "curation_open"

    from fist.pipeline import Pipeline

    pipe = Pipeline(root=runs)
    run = pipe.load_run(run_id)
    pipe.curation_apply(run_id, [(i.item_id, "creative") for i in run.review_items])

    assert main(["finetune", "--stage", "2", "--run", run_id, "--run-dir", str(runs),
                 "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["state"] == "stage2_ready"

    table_csv = tmp_path / "table.csv"
    assert main(["validate", "--run", run_id, "--run-dir", str(runs),
                 "--out", str(table_csv), "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["rows"] > 0
    assert table_csv.read_text().splitlines()[0].endswith('"Two-step FT, P"')

    items_json = tmp_path / "items.json"
    assert main(["review-export", "--run", run_id, "--run-dir", str(runs),
                 "--out", str(items_json)]) == 0
    exported = json.loads(items_json.read_text())
    assert exported["run_id"] == run_id
    assert all(i["human_label"] == "creative" for i in exported["items"])
