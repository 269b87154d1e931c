"""Command-line front end.

Every subcommand takes model values from (lowest to highest precedence) built-in
defaults, the ``[model]`` section of ``--config``, ``DUALJC_<KEY>`` environment
variables and command-line flags. Exit status is 0 on success, 2 when a computation
failed (for sweeps: any cell) and 1 on configuration or file errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from . import __version__, criticality, fluctuations, lindblad, meanfield, recipes, stability
from .errors import ConfigError, DualJCError, InvalidParameterError, UnknownFigureError
from .model import (
    PHYSICAL_FIELDS,
    intrinsic_loss,
    params_from_mapping,
    physical_from_mapping,
    read_config,
    sagnac_shift,
)
from .serialize import fmt, write_density, write_json, write_wigner
from .sweep import (
    MODEL_KEYS,
    apply_overrides,
    env_overrides,
    parse_sweep,
    run_sweep,
    write_sweep,
)

DEFAULTS = {"delta": "2", "sagnac": "0", "delta_q": "1e4", "kappa": "0.1"}
DEFAULT_LAMBDA = "1.5"
COUPLING_KEYS = ("lambda", "lambda_a", "lambda_b", "g_a", "g_b")

MODEL_FLAGS = {
    "delta": "detuning of both modes at rest",
    "sagnac": "signed Sagnac shift of mode a",
    "delta_q": "atomic detuning",
    "kappa": "cavity loss rate",
    "lambda": "equal dimensionless coupling of both modes",
    "lambda_a": "dimensionless coupling of the pumped mode",
    "lambda_b": "dimensionless coupling of the other mode",
    "g_a": "bare coupling of mode a",
    "g_b": "bare coupling of mode b",
    "pump_strength": "two-photon drive G",
    "G_over_kappa": "two-photon drive in units of kappa",
    "gamma": "atomic decay rate",
    "hopping": "intermode hopping J",
    "thermal_occupation": "thermal photon number",
}


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI file with a [model] section")
    for key, text in MODEL_FLAGS.items():
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, metavar="X", help=text)
    p.add_argument("--direction", dest="pump_direction", choices=("forward", "backward"),
                   help="which mode carries the two-photon drive")


def _layered(args: argparse.Namespace, section: str, keys: Sequence[str],
             defaults: dict[str, str]) -> dict[str, str]:
    cfg = read_config(args.config).get(section, {}) if getattr(args, "config", None) else {}
    env = {k: v for k, v in env_overrides().items() if k in keys}
    cli = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    values = {**defaults, **cfg, **env, **cli}
    return values


def _model(args: argparse.Namespace):
    values = _layered(args, "model", MODEL_KEYS, DEFAULTS)
    if not any(k in values for k in COUPLING_KEYS):
        values["lambda"] = DEFAULT_LAMBDA
    return params_from_mapping(values)


def _print_pairs(pairs) -> None:
    for key, value in pairs:
        print(f"{key}={fmt(value)}")


# subcommands ------------------------------------------------------------------------

def cmd_sagnac(args) -> int:
    keys = PHYSICAL_FIELDS
    setup = physical_from_mapping(_layered(args, "physical", keys, {}))
    _print_pairs([("sagnac_shift_hz", sagnac_shift(setup)),
                  ("intrinsic_loss_hz", intrinsic_loss(setup))])
    return 0


def cmd_meanfield(args) -> int:
    p = _model(args)
    print("branch,phase,alpha_re,alpha_im,beta_re,beta_im,spin_x,spin_y,spin_z,residual,stability")
    for sol in meanfield.steady_states(p):
        rep = stability.assess(stability.build_m(p, sol), sol.branch)
        vals = [sol.branch, sol.phase, sol.alpha.real, sol.alpha.imag, sol.beta.real,
                sol.beta.imag, sol.spin.x, sol.spin.y, sol.spin.z,
                meanfield.fixed_point_residual(p, sol), rep.status]
        print(",".join(fmt(v) for v in vals))
    return 0


def cmd_critical(args) -> int:
    p = _model(args)
    if args.order == "tricritical":
        value = (criticality.lambda_tricritical_approx(p) if args.method == "approx"
                 else criticality.lambda_tricritical(p))
        print(fmt(value))
        return 0
    if args.method == "numeric":
        point = (criticality.g_crit_first_numeric(p) if args.order == "first"
                 else criticality.g_crit_second_numeric(p))
    elif args.order == "first":
        la, lb = p.lambdas()
        point = (criticality.g_crit_first(p) if abs(la - lb) <= 1e-12 * max(la, lb, 1)
                 else criticality.g_crit_first_general(p))
    else:
        point = criticality.g_crit_second(p)
    print(fmt(point.over_kappa if args.over_kappa else point.value))
    return 0


def cmd_fluctuations(args) -> int:
    c = fluctuations.analyse_cell(_model(args))
    _print_pairs([("regime", c.regime), ("stable_count", c.stable_count), ("state", c.state),
                  ("n_c", c.n_c), ("n_d", c.n_d), ("squeeze_angle", c.angle), ("note", c.note)])
    return 0


def cmd_stability(args) -> int:
    p = _model(args)
    print("branch,status,spectral_abscissa")
    for sol, rep in stability.solution_reports(p):
        print(",".join(fmt(v) for v in (sol.branch, rep.status, rep.spectral_abscissa)))
    print(f"stable_count={stability.stable_solution_count(p)}")
    return 0


def cmd_lindblad(args) -> int:
    p = _model(args)
    spec = lindblad.FockSpec(args.n_a, args.n_b or args.n_a)
    result = lindblad.solve(p, spec, truncation_tol=args.truncation_tol)
    obs = result.observables()
    obs["s_x"] = lindblad.squeezing_sx(result, "a")
    _print_pairs(obs.items())
    if args.json:
        write_json(args.json, {"observables": obs, "diagnostics": result.diagnostics})
    if args.density:
        write_density(args.density, result.rho)
    if args.wigner:
        write_wigner(args.wigner, lindblad.wigner(lindblad.reduce_mode(result, args.mode)))
    return 0


def _flat_overrides(extra: Sequence[str]) -> dict[str, str]:
    """Parse ``--key value`` and ``--key=value`` pairs left over by argparse."""
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        elif i + 1 < len(extra):
            value = extra[i + 1]
            i += 2
        else:
            raise ConfigError(f"override {tok} has no value")
        out[key.replace("-", "_")] = value
    return out


def cmd_sweep(args, extra) -> int:
    config = apply_overrides(read_config(args.config), env_overrides(), _flat_overrides(extra))
    spec = parse_sweep(config)
    result = run_sweep(spec)
    csv_path, json_path = write_sweep(spec, result, config)
    print(f"wrote {csv_path} and {json_path} ({len(result.rows)} cells, {len(result.errors)} errors)")
    return result.exit_code


def cmd_reproduce(args, extra) -> int:
    overrides = {**env_overrides(), **_flat_overrides(extra)}
    paths = recipes.reproduce(args.figure, args.output, overrides)
    for p in paths:
        print(p)
    return 0


# entry point --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualjc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dualjc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sagnac", help="rotation shift and intrinsic loss of a resonator")
    p.add_argument("--config", type=Path, help="INI file with a [physical] section")
    for key in PHYSICAL_FIELDS:
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, metavar="X")

    for name, text in (("meanfield", "every mean-field steady state with its stability"),
                       ("fluctuations", "regime and fluctuation photon numbers of one cell"),
                       ("stability", "linear stability of every fixed point")):
        _add_model_flags(sub.add_parser(name, help=text))

    p = sub.add_parser("critical", help="critical pump (or tricritical coupling)")
    _add_model_flags(p)
    p.add_argument("--order", choices=("first", "second", "tricritical"), default="first")
    p.add_argument("--method", choices=("closed", "numeric", "approx"), default="closed")
    p.add_argument("--over-kappa", action="store_true", help="print G_c / kappa")

    p = sub.add_parser("lindblad", help="full quantum steady state on a truncated Fock space")
    _add_model_flags(p)
    p.add_argument("--n-a", type=int, default=12)
    p.add_argument("--n-b", type=int)
    p.add_argument("--truncation-tol", type=float, default=lindblad.TRUNCATION_TOL)
    p.add_argument("--mode", choices=("a", "b"), default="a", help="mode for --wigner")
    p.add_argument("--json", type=Path, help="write observables and diagnostics")
    p.add_argument("--density", type=Path, help="write the density operator as CSV")
    p.add_argument("--wigner", type=Path, help="write the reduced Wigner function as CSV")

    p = sub.add_parser("sweep", help="grid sweep from a config file (extra --key value overrides)")
    p.add_argument("config", type=Path)

    p = sub.add_parser("reproduce", help="write the data behind one figure")
    p.add_argument("figure", help=", ".join(recipes.RECIPES))
    p.add_argument("--output", type=Path, default=Path("figures"))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if extra and args.command not in ("sweep", "reproduce"):
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    handlers = {"sagnac": cmd_sagnac, "meanfield": cmd_meanfield, "critical": cmd_critical,
                "fluctuations": cmd_fluctuations, "stability": cmd_stability,
                "lindblad": cmd_lindblad}
    try:
        if args.command == "sweep":
            return cmd_sweep(args, extra)
        if args.command == "reproduce":
            return cmd_reproduce(args, extra)
        return handlers[args.command](args)
    except (ConfigError, UnknownFigureError, InvalidParameterError, OSError) as exc:
        print(f"dualjc: error: {exc}", file=sys.stderr)
        return 1
    except DualJCError as exc:
        print(f"dualjc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
