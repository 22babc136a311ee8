"""Command-line entry point: ``sim <experiment> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import InvalidOverride, SimulationError
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment, write_result

log = logging.getLogger("hyperfiber")

_FLOAT = {"t_max", "t_step", "t_point", "z_max", "z_step", "z_point", "T1", "T2", "delta_n", "theta1", "phi1",
          "noise"}
_INT = {"theta_steps", "phi_steps", "seed", "grid_n"}
_FLOAT_LIST = {"alpha", "thetas"}


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise InvalidOverride(f"not a boolean: {text!r}")


def _coerce(key: str, raw: str):
    if key in _FLOAT:
        return float(raw)
    if key in _INT:
        return int(raw)
    if key in _FLOAT_LIST:
        return _float_list(raw)
    if key == "l":
        return _int_list(raw)
    if key == "damped":
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    if key == "calibrate":
        return _bool(raw)
    return raw


def read_config_file(path) -> dict:
    """``key=value`` lines using the flag names (``t-max=100``); ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidOverride(f"{path}:{n}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        key = {"format": "fmt", "theta": "thetas"}.get(key, key)
        try:
            out[key] = _coerce(key, raw)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise InvalidOverride(f"{path}:{n}: {exc}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sim", description="Multi-DOF photon entanglement simulations.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="key=value file with the same names as the flags")
    p.add_argument("--alpha", type=_float_list, help="comma-separated alpha values")
    p.add_argument("--theta", dest="thetas", type=_float_list, help="comma-separated theta values (rad)")
    p.add_argument("--theta-steps", type=int)
    p.add_argument("--phi-steps", type=int)
    p.add_argument("--t-max", type=float, help="microseconds")
    p.add_argument("--t-step", type=float, help="microseconds")
    p.add_argument("--t-point", type=float, help="single evaluation time for fig2/fig5 (us)")
    p.add_argument("--z-max", type=float, help="kilometers")
    p.add_argument("--z-step", type=float, help="kilometers")
    p.add_argument("--z-point", type=float, help="fiber length for tomography (km)")
    p.add_argument("--l", type=_int_list, help="comma-separated topological charges")
    p.add_argument("--T1", type=float, help="relaxation time (us)")
    p.add_argument("--T2", type=float, help="dephasing time (us)")
    p.add_argument("--delta-n", type=float, help="effective index splitting of the +l/-l modes")
    p.add_argument("--theta1", type=float, help="fixed phase offset of the +l branch (rad)")
    p.add_argument("--phi1", type=float, help="fixed phase offset of the -l branch (rad)")
    p.add_argument("--noise", type=float, help="relative detection noise for tomography")
    p.add_argument("--seed", type=int)
    p.add_argument("--grid-n", type=int, help="tomography grid resolution")
    p.add_argument("--damped", type=lambda s: tuple(x.strip() for x in s.split(",")),
                   help="degrees of freedom exposed to noise (default: all)")
    p.add_argument("--chsh-preset", choices=("pol", "oam"), help="restrict chsh to one settings family")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"))
    p.add_argument("--out", help="output path (default <experiment>.<format>)")
    cal = p.add_mutually_exclusive_group()
    cal.add_argument("--calibrate", dest="calibrate", action="store_const", const=True)
    cal.add_argument("--no-calibrate", dest="calibrate", action="store_const", const=False)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = read_config_file(args.config) if args.config else {}
    values.pop("experiment", None)
    skip = {"experiment", "config", "verbose"}
    for k, v in vars(args).items():
        if k not in skip and v is not None:
            values[k] = v
    try:
        return ExperimentConfig(args.experiment, **values)
    except TypeError as exc:
        raise InvalidOverride(str(exc)) from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        result = run_experiment(cfg)
        paths = write_result(result)
    except SimulationError as exc:
        print(f"sim: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if result.calibration is not None:
        log.info("calibration: %s", result.calibration)
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
