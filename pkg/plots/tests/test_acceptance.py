"""End-to-end: drive the sampler CLI at desk scale, then turn its CSVs into
the two figures and confirm byte-stable output."""

import json
import subprocess
import sys

import pytest

from pgibbs_plots import load_spec, plot_acf, plot_update_rates


def run_cli(*argv):
    proc = subprocess.run([sys.executable, "-m", "pgibbs.cli", *argv],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="module")
def desk_scale_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs")
    sim_cfg = root / "sim.json"
    sim_cfg.write_text(json.dumps({
        "mu": 0.3, "rho": 0.8, "sigma2": 0.2, "length": 40, "seed": 21,
        "out": str(root / "data"),
    }))
    run_cli("simulate", "--config", str(sim_cfg))
    dataset = root / "data" / "data.csv"

    variants = [("multinomial", "on"), ("systematic", "off")]
    outputs = []
    for scheme, backward in variants:
        out = root / f"{scheme}_{backward}"
        run_cli("run", "--dataset", str(dataset), "--seed", "5", "--n", "5",
                "--scheme", scheme, "--backward", backward,
                "--iters", "300", "--burnin", "50", "--thin", "10",
                "--out", str(out))
        outputs.append((out, f"{scheme} (BS {backward})"))
    return root, outputs


def test_acf_figure_from_run_output(desk_scale_runs):
    root, outputs = desk_scale_runs
    spec_path = root / "acf_spec.json"
    spec_path.write_text(json.dumps({
        "inputs": [{"path": str(out / "acf.csv"), "label": label}
                   for out, label in outputs],
        "variables": ["mu", "rho", "sigma2"],
        "output": str(root / "acf.png"),
    }))
    spec = load_spec(spec_path)
    first = plot_acf(spec).read_bytes()
    assert first[:8] == b"\x89PNG\r\n\x1a\n"
    assert plot_acf(spec).read_bytes() == first
    print("[PASS] acf figure from run CSVs, byte-identical rerun")


def test_update_rate_figure_from_run_output(desk_scale_runs):
    root, outputs = desk_scale_runs
    spec_path = root / "rates_spec.json"
    spec_path.write_text(json.dumps({
        "inputs": [{"path": str(out / "update_rates.csv"), "label": label}
                   for out, label in outputs],
        "output": str(root / "rates.png"),
    }))
    spec = load_spec(spec_path)
    first = plot_update_rates(spec).read_bytes()
    assert first[:8] == b"\x89PNG\r\n\x1a\n"
    assert plot_update_rates(spec).read_bytes() == first
    print("[PASS] update-rate figure from run CSVs, byte-identical rerun")
