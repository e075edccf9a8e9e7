import csv
import io
import json

import numpy as np
import pytest

from markov_urng.bounds import CSV_HEADER
from markov_urng.cli import main
from markov_urng.extractor import ToeplitzSpec, hash_blocks, pack_bits, write_bits
from markov_urng.markov_core import binary_model, model_document

EXAMPLE = ["--example", "0.1,0.2"]


@pytest.fixture
def run(tmp_path, capsys):
    config_path = str(tmp_path / "config.json")

    def invoke(*argv):
        main(list(argv) + ["--config-path", config_path])
        return capsys.readouterr()

    return invoke


def test_spectrum_json(run):
    out = run("spectrum", *EXAMPLE, "--theta-grid", "1", "--format", "json").out
    payload = json.loads(out)
    assert payload["variants"] == ["single"]
    assert payload["rows"][0]["single"] == pytest.approx(0.2078594, abs=1e-6)
    assert payload["summary"]["entropy_rate"] == pytest.approx(0.383523, abs=1e-6)


def test_spectrum_csv_keeps_summary(run):
    out = run("spectrum", *EXAMPLE, "--theta-grid", "0.5:1:0.5", "--format", "csv").out
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 2
    for row in rows:
        assert float(row["entropy_rate"]) == pytest.approx(0.383523, abs=1e-6)
        assert float(row["min_entropy_rate"]) == pytest.approx(-np.log(0.9), abs=1e-6)
        assert float(row["variance_rate"]) > 0
    assert float(rows[1]["single"]) == pytest.approx(0.2078594, abs=1e-6)


def test_spectrum_in_bits(run):
    payload = json.loads(run("spectrum", *EXAMPLE, "--theta-grid", "1", "--format", "json", "--bits").out)
    assert payload["rows"][0]["single"] == pytest.approx(0.2078594 / np.log(2), abs=1e-6)
    assert payload["rows"][0]["theta"] == 1.0


def test_bound_csv(run):
    out = run("bound", *EXAMPLE, "--n", "1000", "--rate", "0.3", "--format", "csv").out
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == CSV_HEADER
    row = dict(zip(rows[0], rows[1]))
    assert row["theorem"] == "ach"
    assert float(row["value"]) > 0
    assert float(row["R"]) == pytest.approx(0.3)


def test_bound_with_log2m(run):
    payload = json.loads(run("bound", *EXAMPLE, "--n", "1000", "--log2M", "300", "--format", "json").out)
    assert payload["query"]["log_m"] == pytest.approx(300 * np.log(2))


def test_divergence_bound(run):
    payload = json.loads(
        run("bound", *EXAMPLE, "--n", "1000", "--rate", "0.5", "--theorem", "rer_upper", "--format", "json").out
    )
    assert payload["quantity"] == "rer_upper"
    assert payload["value"] > 0


def test_single_shot_bound(run):
    payload = json.loads(
        run("bound", *EXAMPLE, "--n", "8", "--log2M", "2", "--single-shot", "sphere_conv", "--format", "json").out
    )
    assert payload["theorem"] == "sphere_conv"
    assert 0 <= payload["value"] <= 1


def test_missing_block_length_exits_with_validation_code(run, capsys):
    with pytest.raises(SystemExit) as info:
        run("bound", *EXAMPLE, "--rate", "0.3")
    assert info.value.code == 2
    assert "Error:" in capsys.readouterr().err


def test_out_of_window_exits_with_infeasible_code(run):
    with pytest.raises(SystemExit) as info:
        run("bound", *EXAMPLE, "--n", "1000", "--rate", "0.5", "--theorem", "conv_sphere")
    assert info.value.code == 3


def test_command_is_required(run):
    with pytest.raises(SystemExit) as info:
        run()
    assert info.value.code == 2


def test_model_without_source(run):
    with pytest.raises(SystemExit) as info:
        run("spectrum")
    assert info.value.code == 2


def test_assumptions_from_model_file(run, tmp_path):
    path = tmp_path / "chain.json"
    path.write_text(json.dumps(model_document(binary_model(0.1, 0.2))))
    payload = json.loads(run("assumptions", "--model", str(path), "--format", "json").out)
    assert [r["assumption"] for r in payload["reports"]] == ["A1", "A2"]


def test_asymptotic_second_order(run):
    payload = json.loads(
        run("asymptotic", *EXAMPLE, "--regime", "second_order", "--n", "10000", "--epsilon", "0.5", "--format", "json").out
    )
    assert payload["value"] == pytest.approx(10000 * 0.383523, rel=1e-5)


def test_sweep_single_theorem(run):
    out = run("sweep", *EXAMPLE, "--n", "1000", "--eps-range", "2,6", "--theorem", "ach").out
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 2
    assert {row["theorem"] for row in rows} == {"ach"}


def test_extract_raw_file(run, tmp_path):
    raw = np.random.default_rng(8).integers(0, 2, size=64).astype(np.uint8)
    path = tmp_path / "raw.bin"
    write_bits(path, raw)
    payload = json.loads(
        run("extract", "--input", str(path), "--n", "16", "--m", "4", "--seed-hex", "9a3f0c", "--format", "json").out
    )
    spec = ToeplitzSpec.from_hex(16, 4, "9a3f0c")
    expected = hash_blocks(spec, raw.reshape(-1, 16)).ravel()
    assert payload["output_hex"] == pack_bits(expected).hex()
    assert payload["seed_hex"] == "9a3f04"
    assert payload["blocks"] == 4


def test_extract_to_file(run, tmp_path):
    out_path = tmp_path / "key.bin"
    run(
        "extract", *EXAMPLE, "--n", "16", "--m", "2", "--seed-hex", "ffff0f",
        "--blocks", "8", "--sample-seed", "3", "--out", str(out_path),
    )
    assert out_path.stat().st_size == 2


def test_verify_text(run):
    out = run("verify", *EXAMPLE, "--format", "text").out
    assert "PASS: 18 passed, 0 failed" in out


def test_text_report_to_file_is_plain(run, tmp_path):
    target = tmp_path / "assumptions.txt"
    result = run("assumptions", *EXAMPLE, "--format", "text", "--out", str(target))
    assert result.out == ""
    lines = target.read_text().splitlines()
    assert [line.split(":")[0] for line in lines] == ["A1", "A2"]
    assert "\x1b" not in target.read_text()


def test_config_commands(run):
    assert "Default format set to: json" in run("--set-default-format", "json").out
    payload = json.loads(run("spectrum", *EXAMPLE, "--theta-grid", "0.5").out)
    assert payload["rows"][0]["theta"] == 0.5
    shown = run("--show-config").out
    assert '"default_format": "json"' in shown
    assert "Configuration reset" in run("--reset-config").out
    assert "No configuration file to reset" in run("--reset-config").out


def test_bad_default_theta_grid(run):
    with pytest.raises(SystemExit) as info:
        run("--set-default-theta-grid=-3:0:1")
    assert info.value.code == 2
