"""Command-line driver: simulate datasets, run the particle Gibbs sampler
across scheme/backward-sampling variants, and run coupling studies.

Configuration is a flat JSON file plus command-line overrides (a flag wins
over the file).  Exit codes: 0 success, 2 configuration error, 3 numerical
failure (degenerate weights), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cpf import CpfConfig
from .coupling import estimate_coupling_probability
from .diagnostics import acf
from .experiments import DegenerateConditionalError, GibbsState, PriorSpec, pg_gibbs_sweep
from .fk_model import (
    PoissonAr1Params,
    demo_finite_hmm,
    read_counts_csv,
    simulate_dataset,
    write_counts_csv,
    write_truth_csv,
)
from .resampling import SCHEMES, DegenerateWeightsError

_FLOAT_FMT = "{:.17g}"

_DEFAULTS = {
    "simulate": {
        "mu": 0.0,
        "rho": 0.9,
        "sigma2": 0.25,
        "length": 400,
        "seed": 1,
        "out": ".",
    },
    "run": {
        "dataset": None,
        "n": 20,
        "scheme": "multinomial",
        "backward": True,
        "forced_move": False,
        "iters": 1000,
        "burnin": 100,
        "thin": 1,
        "seed": 1,
        "out": ".",
        "chains": 1,
        "m_mu": 0.0,
        "s_mu": 10.0,
        "a_sigma": 1.0,
        "b_sigma": 1.0,
        "acf_max_lag": 50,
    },
    "couple": {
        "n_values": [8, 32, 128],
        "reps": 500,
        "seed": 1,
        "out": ".",
    },
}


def _parse_on_off(value):
    if value in ("on", "off"):
        return value == "on"
    raise argparse.ArgumentTypeError("expected 'on' or 'off'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pgibbs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "run", "couple"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
    run = sub.choices["run"]
    run.add_argument("--n", type=int, default=None)
    run.add_argument("--scheme", choices=SCHEMES, default=None)
    run.add_argument("--backward", type=_parse_on_off, default=None)
    run.add_argument("--forced-move", dest="forced_move", type=_parse_on_off, default=None)
    run.add_argument("--iters", type=int, default=None)
    run.add_argument("--burnin", type=int, default=None)
    run.add_argument("--thin", type=int, default=None)
    run.add_argument("--chains", type=int, default=None)
    run.add_argument("--dataset", type=str, default=None)
    return parser


def load_config(command, args) -> dict:
    config = dict(_DEFAULTS[command])
    if args.config is not None:
        with open(args.config) as fh:
            loaded = json.load(fh)
        for key in config:
            if key in loaded:
                config[key] = loaded[key]
    for key in config:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    return config


def validate_config(command, config) -> list:
    errors = []

    def check(cond, message):
        if not cond:
            errors.append(message)

    check(isinstance(config["seed"], int) and 0 <= config["seed"] < 2**64,
          "seed must be an unsigned 64-bit integer")
    if command == "simulate":
        check(np.isfinite(config["mu"]), "mu must be finite")
        check(np.isfinite(config["rho"]) and abs(config["rho"]) <= 1, "rho must lie in [-1, 1]")
        check(config["sigma2"] > 0, "sigma2 must be positive")
        check(int(config["length"]) >= 1, "length must be at least 1")
    elif command == "run":
        check(config["dataset"] is not None, "a dataset path is required")
        if config["dataset"] is not None:
            check(Path(config["dataset"]).exists(), f"dataset not found: {config['dataset']}")
        check(int(config["n"]) >= 2, "n must be at least 2")
        check(config["scheme"] in SCHEMES, f"scheme must be one of {SCHEMES}")
        check(int(config["iters"]) > int(config["burnin"]) >= 0,
              "need iters > burnin >= 0")
        check(int(config["thin"]) >= 1, "thin must be at least 1")
        check(int(config["chains"]) >= 1, "chains must be at least 1")
        check(config["s_mu"] > 0, "s_mu must be positive")
        check(config["a_sigma"] > 0 and config["b_sigma"] > 0,
              "a_sigma and b_sigma must be positive")
        check(int(config["acf_max_lag"]) >= 1, "acf_max_lag must be at least 1")
    elif command == "couple":
        values = config["n_values"]
        check(isinstance(values, (list, tuple)) and len(values) > 0
              and all(int(v) >= 2 for v in values),
              "n_values must be a non-empty list of particle counts >= 2")
        check(int(config["reps"]) >= 1, "reps must be at least 1")
    return errors


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x) -> str:
    return _FLOAT_FMT.format(float(x))


def cmd_simulate(config) -> None:
    params = PoissonAr1Params(config["mu"], config["rho"], config["sigma2"])
    rng = np.random.default_rng(config["seed"])
    states, counts = simulate_dataset(params, int(config["length"]) - 1, rng)
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_counts_csv(out / "data.csv", counts)
    write_truth_csv(out / "truth.csv", states)


class _RunAccumulator:
    """Streaming sink for one chain: thinned rows out, diagnostics in memory."""

    def __init__(self, horizon, thin):
        self.thin = thin
        self.kept = 0
        self.param_rows = []
        self.path_rows = []
        self.series = {"mu": [], "rho": [], "sigma2": []}
        self.x_slots = {f"x{t}": t for t in (0, horizon // 2, horizon)}
        for name in self.x_slots:
            self.series[name] = []
        self.change_counts = np.zeros(horizon + 1)
        self.pairs = 0
        self._prev_path = None

    def __call__(self, iteration, state: GibbsState):
        p = state.params
        self.series["mu"].append(p.mu)
        self.series["rho"].append(p.rho)
        self.series["sigma2"].append(p.sigma2)
        for name, t in self.x_slots.items():
            self.series[name].append(state.path[t])
        if self._prev_path is not None:
            self.change_counts += state.path != self._prev_path
            self.pairs += 1
        self._prev_path = state.path
        if self.kept % self.thin == 0:
            self.param_rows.append([iteration, _fmt(p.mu), _fmt(p.rho), _fmt(p.sigma2)])
            for t, x in enumerate(state.path):
                self.path_rows.append([iteration, t, _fmt(x)])
        self.kept += 1


def _run_one_chain(config, counts, seed, suffix, out: Path) -> None:
    prior = PriorSpec(config["m_mu"], config["s_mu"], config["a_sigma"], config["b_sigma"])
    cpf_config = CpfConfig(int(config["n"]), config["scheme"],
                           bool(config["backward"]), bool(config["forced_move"]))
    rng = np.random.default_rng(seed)
    horizon = counts.size - 1
    init_path = np.log(counts + 1.0)
    init = GibbsState(PoissonAr1Params(float(init_path.mean()), 0.0, 1.0), init_path)
    iters, burnin = int(config["iters"]), int(config["burnin"])
    sink = _RunAccumulator(horizon, int(config["thin"]))
    state = init
    for i in range(iters):
        state = pg_gibbs_sweep(counts, state, cpf_config, prior, rng)
        if i >= burnin:
            sink(i, state)

    _write_rows(out / f"params{suffix}.csv", ["iter", "mu", "rho", "sigma2"], sink.param_rows)
    _write_rows(out / f"paths{suffix}.csv", ["iter", "t", "x"], sink.path_rows)
    max_lag = min(int(config["acf_max_lag"]), sink.kept - 1)
    acf_rows = []
    for name, values in sink.series.items():
        series = np.asarray(values)
        if np.all(series == series[0]):
            values_acf = np.concatenate([[1.0], np.zeros(max_lag)])
        else:
            values_acf = acf(series, max_lag)
        for lag, value in enumerate(values_acf):
            acf_rows.append([name, lag, _fmt(value)])
    _write_rows(out / f"acf{suffix}.csv", ["variable", "lag", "acf"], acf_rows)
    rates = sink.change_counts / max(sink.pairs, 1)
    _write_rows(out / f"update_rates{suffix}.csv", ["t", "rate"],
                [[t, _fmt(r)] for t, r in enumerate(rates)])


def cmd_run(config) -> None:
    counts = read_counts_csv(config["dataset"])
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()
    chains = int(config["chains"])
    seeds = np.random.SeedSequence(config["seed"]).spawn(chains)
    for c in range(chains):
        suffix = f"_chain{c}" if chains > 1 else ""
        _run_one_chain(config, counts, seeds[c], suffix, out)
    wall = time.monotonic() - started
    with open(out / "config.json", "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest = dict(config)
    manifest["command"] = "run"
    manifest["wall_time_s"] = wall
    manifest["version"] = f"pgibbs-{__version__}"
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_couple(config) -> None:
    model = demo_finite_hmm()
    horizon = model.horizon
    z = np.zeros(horizon + 1, dtype=np.int64)
    z_check = np.full(horizon + 1, model.num_states - 1, dtype=np.int64)
    rng = np.random.default_rng(config["seed"])
    reps = int(config["reps"])
    rows = []
    for n in config["n_values"]:
        frac, err = estimate_coupling_probability(model, int(n), z, z_check, reps, rng)
        rows.append([int(n), reps, _fmt(frac), _fmt(err)])
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "coupling.csv", ["N", "reps", "coupled_fraction", "stderr"], rows)


_COMMANDS = {"simulate": cmd_simulate, "run": cmd_run, "couple": cmd_couple}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.command, args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error reading config: {exc}", file=sys.stderr)
        return 2
    errors = validate_config(args.command, config)
    if errors:
        for message in errors:
            print(f"config error: {message}", file=sys.stderr)
        return 2
    try:
        _COMMANDS[args.command](config)
    except (DegenerateWeightsError, DegenerateConditionalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
