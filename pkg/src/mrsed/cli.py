"""Command-line entry point: ``mrsed --scenario ideal-batch --out run1``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .config import SCENARIOS, ConfigError, load_config
from .driver import MRConfig, run_mr, speedup
from .mr import GridHierarchy, mask_dump_rows
from .output import write_outputs

log = logging.getLogger("mrsed")


def _times(text: str) -> tuple:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad time list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mrsed", description=__doc__)
    p.add_argument("--config", help="key-value run configuration file")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--out", help="output directory")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--levels", type=int)
    p.add_argument("--n0", type=int, help="finest-grid interval count")
    p.add_argument("--theta", type=float)
    p.add_argument("--cfl", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--snapshots", type=_times, help="comma-separated times t1,t2,...")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve(args) -> "object":
    overrides = {k: v for k, v in vars(args).items()
                 if k in ("out", "epsilon", "levels", "n0", "theta", "cfl", "t_end", "snapshots")
                 and v is not None}
    base = load_config(args.config, args.scenario, None)
    if "t_end" in overrides and "snapshots" not in overrides:
        kept = tuple(t for t in base.snapshots if t <= overrides["t_end"])
        if overrides["t_end"] not in kept:
            kept += (overrides["t_end"],)
        overrides["snapshots"] = kept
    return dataclasses.replace(base, **overrides).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        problem = cfg.build_problem()
    except (ConfigError, OSError) as exc:
        print(f"mrsed: configuration error: {exc}", file=sys.stderr)
        return 1
    try:
        mr_cfg = MRConfig(cfg.epsilon, cfg.levels, cfg.r)
        snaps, metrics, run = run_mr(problem, cfg.n0, mr_cfg, cfg.snapshots, cfg.theta, cfg.cfl)
        hier = GridHierarchy(cfg.n0, cfg.levels, cfg.height)
        dumps = [mask_dump_rows(s.encoded, s.mask, hier) for s in run.mr_snapshots]
        out = write_outputs(snaps, metrics, dumps, cfg.out, cfg, run.disc.x)
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit code 2
        print(f"mrsed: run failed: {exc}", file=sys.stderr)
        return 2
    print(f"{'t':>10} {'V':>8} {'mu':>8} {'e1':>10} {'einf':>10} {'mass':>12}")
    for s in metrics.snapshots:
        print(f"{s.t:10g} {s.V:8.4f} {s.mu:8.4f} {s.e1:10.3e} {s.einf:10.3e} {s.mass:12.6e}")
    sp = speedup(metrics)
    wall = f"{sp['wall']:.3f}" if sp["wall"] is not None else "n/a"
    print(f"flux-evaluation ratio {sp['flux']:.3f}, wall-time ratio {wall}; outputs in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
