import json
import subprocess

import pytest
from click.testing import CliRunner

from platformrr.cli import main

pytestmark = pytest.mark.usefixtures("tmp_path")


def run(args, **kw):
    return CliRunner().invoke(main, args, catch_exceptions=False, **kw)


def sim_files(tmp_path, prefix="trial", extra=()):
    res = run(["--seed", "5", "simulate", "--preset", "table3", "--scale", "0.2",
               "--out-prefix", str(tmp_path / prefix), *extra])
    assert res.exit_code == 0, res.output
    return (
        str(tmp_path / f"{prefix}.records.csv"),
        str(tmp_path / f"{prefix}.design.json"),
        str(tmp_path / f"{prefix}.coarsening.json"),
    )


@pytest.mark.parametrize("cmd", [
    [], ["estimate"], ["contrast"], ["ni-test"], ["simulate"],
    ["resample"], ["mc"], ["repro"], ["validate"],
])
def test_help_screens(cmd):
    res = run([*cmd, "--help"])
    assert res.exit_code == 0
    assert "Usage:" in res.output


def test_simulate_writes_dataset_trio(tmp_path):
    records, design, coarsening = sim_files(tmp_path)
    header = open(records).readline().strip()
    assert header == "id,x,delta,arm,window,z"
    assert "window_sets" in json.load(open(design))
    json.load(open(coarsening))


def test_simulate_separate_writes_per_arm_files(tmp_path):
    run(["simulate", "--preset", "table3", "--scale", "0.2", "--design", "separate",
         "--out-prefix", str(tmp_path / "sep")])
    for a in (1, 2):
        assert (tmp_path / f"sep.arm{a}.records.csv").exists()
        assert (tmp_path / f"sep.arm{a}.design.json").exists()


def test_estimate_emits_joint_estimate_json(tmp_path):
    records, design, coarsening = sim_files(tmp_path)
    base = ["estimate", "--records", records, "--design", design,
            "--coarsening", coarsening, "--arms", "1,2", "--t", "6"]
    res = run(base)
    assert res.exit_code == 0
    payload = json.loads(res.output)
    assert payload["arms"] == [1, 2]
    assert len(payload["gamma"]) == 2
    assert len(payload["sigma_gamma"]) == 2
    km = run([*base, "--survival", "km"])
    assert json.loads(km.output)["gamma"] != payload["gamma"]


def test_estimate_is_rerun_identical(tmp_path):
    records, design, coarsening = sim_files(tmp_path)
    base = ["estimate", "--records", records, "--design", design,
            "--coarsening", coarsening, "--arms", "1,2", "--t", "6"]
    assert run(base).output == run(base).output
    assert run(["--threads", "3", *base]).output == run(base).output


def test_missing_required_option_is_usage_error(tmp_path):
    records, design, coarsening = sim_files(tmp_path)
    res = run(["estimate", "--records", records, "--design", design,
               "--coarsening", coarsening, "--arms", "1,2"])  # no --t
    assert res.exit_code == 2


def test_computation_failure_exits_three(tmp_path):
    records, design, coarsening = sim_files(tmp_path)
    res = run(["estimate", "--records", records, "--design", design,
               "--coarsening", coarsening, "--arms", "1,9", "--t", "6"])
    assert res.exit_code == 3
    assert "error:" in res.output


def test_contrast_platform_and_separate(tmp_path):
    records, design, coarsening = sim_files(tmp_path)
    res = run(["--format", "json", "contrast", "--records", records, "--design", design,
               "--coarsening", coarsening, "--arms", "1,2", "--t", "6"])
    assert res.exit_code == 0
    payload = json.loads(res.output)
    assert payload["source"] == "platform"
    assert payload["contrast_id"] == "additive"

    run(["simulate", "--preset", "table3", "--scale", "0.2", "--design", "separate",
         "--out-prefix", str(tmp_path / "sep")])
    res2 = run(["--format", "json", "contrast",
                "--records", str(tmp_path / "sep.arm1.records.csv"),
                "--separate-records", str(tmp_path / "sep.arm1.records.csv"),
                "--separate-records", str(tmp_path / "sep.arm2.records.csv"),
                "--design", str(tmp_path / "sep.arm1.design.json"),
                "--coarsening", str(tmp_path / "sep.arm1.coarsening.json"),
                "--arms", "1,2", "--t", "6", "--contrast", "multiplicative"])
    assert res2.exit_code == 0, res2.output
    payload2 = json.loads(res2.output)
    assert payload2["source"] == "separate"
    assert payload2["theta"] > 0


def test_ni_test_from_saved_estimate(tmp_path):
    records, design, coarsening = sim_files(tmp_path)
    est_path = tmp_path / "est.json"
    run(["--format", "json", "estimate", "--records", records, "--design", design,
         "--coarsening", coarsening, "--arms", "1,2", "--t", "6",
         "--out", str(est_path)])
    for method in ("intersection", "lrt"):
        res = run(["--format", "json", "ni-test", "--estimate-json", str(est_path),
                   "--method", method, "--ref-arm", "1", "--delta", "0.7",
                   "--epsilon", "0.3"])
        assert res.exit_code == 0, res.output
        payload = json.loads(res.output)
        assert payload["method"] == method
        assert isinstance(payload["reject"], bool)


def test_ni_test_from_records_and_bad_config(tmp_path):
    records, design, coarsening = sim_files(tmp_path)
    base = ["ni-test", "--records", records, "--design", design,
            "--coarsening", coarsening, "--arms", "1,2", "--t", "6",
            "--ref-arm", "1", "--epsilon", "0.3"]
    assert run([*base, "--delta", "0.7"]).exit_code == 0
    assert run([*base, "--delta", "-0.5"]).exit_code == 3


def test_resample_writes_files_and_echoes_paths(tmp_path):
    records, design, coarsening = sim_files(tmp_path)
    res = run(["resample", "--records", records, "--design", design,
               "--coarsening", coarsening, "--target-share", "1.0",
               "--typing", '{"1": "B_all"}',
               "--out-prefix", str(tmp_path / "res")])
    assert res.exit_code == 0, res.output
    written = res.output.splitlines()
    assert str(tmp_path / "res.records.csv") in written
    for path in written:
        assert (tmp_path / path.rsplit("/", 1)[1]).exists()
    kept = (tmp_path / "res.records.csv").read_text().splitlines()
    assert len(kept) > 1
    # typing also accepts a file path
    typing_file = tmp_path / "typing.json"
    typing_file.write_text('{"1": "B_all"}')
    res2 = run(["resample", "--records", records, "--design", design,
                "--coarsening", coarsening, "--target-share", "1.0",
                "--typing", str(typing_file), "--out-prefix", str(tmp_path / "res2")])
    assert res2.exit_code == 0, res2.output


def test_resample_infeasible_target_exits_three(tmp_path):
    records, design, coarsening = sim_files(tmp_path)
    res = run(["resample", "--records", records, "--design", design,
               "--coarsening", coarsening, "--target-share", "0.5",
               "--typing", '{"1": "B_sub"}',
               "--out-prefix", str(tmp_path / "res")])
    assert res.exit_code == 3
    assert "error:" in res.output


def test_mc_summary_csv_and_coverage(tmp_path):
    base = ["mc", "--preset", "section6", "--scale", "0.1", "--arms", "2,7",
            "--t", "6", "--reps", "4"]
    res = run(base)
    assert res.exit_code == 0, res.output
    lines = res.output.splitlines()
    assert lines[0] == "metric,mean,mc_se"
    assert lines[1].startswith("rr_2,")
    cov = run([*base, "--analysis", "coverage"])
    assert cov.exit_code == 0, cov.output
    assert cov.output.splitlines()[1].startswith("cover_2,")


def test_repro_table_study(tmp_path):
    out = tmp_path / "t3.csv"
    res = run(["repro", "table3", "--reps", "50", "--out", str(out)])
    assert res.exit_code == 0, res.output
    lines = out.read_text().splitlines()
    assert lines[0] == "design,power_arm1,power_arm2,power_contrast"
    assert len(lines) == 4


def test_validate_reports_clean_dataset(tmp_path):
    records, design, coarsening = sim_files(tmp_path)
    res = run(["--format", "json", "validate", "--records", records,
               "--design", design, "--coarsening", coarsening])
    assert res.exit_code == 0, res.output
    payload = json.loads(res.output)
    assert payload["n"] > 0
    assert payload["clean"] is True


def test_console_entry_point_runs():
    proc = subprocess.run(["platformrr", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "Usage:" in proc.stdout
