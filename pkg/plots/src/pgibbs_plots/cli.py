"""Entry points: ``plot-acf --spec spec.json`` and
``plot-update-rates --spec spec.json``."""

from __future__ import annotations

import argparse
import sys

from .figures import load_spec, plot_acf, plot_update_rates


def _run(plotter, argv) -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--spec", required=True, help="figure spec JSON")
    args = parser.parse_args(argv)
    try:
        spec = load_spec(args.spec)
        out = plotter(spec)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


def main_acf(argv=None) -> int:
    return _run(plot_acf, argv)


def main_update_rates(argv=None) -> int:
    return _run(plot_update_rates, argv)


if __name__ == "__main__":
    sys.exit(main_acf())
