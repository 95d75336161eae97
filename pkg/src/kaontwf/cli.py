"""Command-line interface: ``kaontwf <subcommand> [flags]``.

Exit status is 0 on success, 1 for invalid input or configuration and 2 for
runtime (numerical) failures. Times are always in units of tau_S.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import asymmetry, events, fit, golden_rule, pipeline, spectral
from .errors import KaonTwfError, NumericalError, ValidationError
from .io import write_csv, write_json
from .params import KaonPhysics, load_physics
from .states import Channel, Flavor, Model


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _physics(args) -> KaonPhysics:
    if getattr(args, "config", None):
        return load_physics(args.config, use_defaults=True)
    return KaonPhysics.default()


def _model(args) -> Model:
    if args.model == "wwa":
        if args.twf_variant is not None:
            raise UsageError("--twf-variant only applies to --model twf")
        return Model.WWA
    if args.twf_variant is None:
        raise UsageError("--model twf requires --twf-variant {large-t,three-pion}")
    return Model.twf(args.twf_variant)


def _echo(args, **extra) -> dict:
    """Every flag value, plus derived settings, for the JSON sidecars."""
    out = {k: v for k, v in vars(args).items() if k not in ("func",)}
    out.update(extra)
    return out


def _sidecar(csv_path: Path, payload: dict):
    write_json(Path(csv_path).with_suffix(".json"), payload)


def _time_grid(args) -> np.ndarray:
    if args.t_min < 0 or args.t_max < args.t_min:
        raise UsageError("need 0 <= --t-min <= --t-max")
    if args.t_min == args.t_max:
        return np.array([args.t_min])
    if args.points < 2:
        raise UsageError("--points must be >= 2")
    return np.linspace(args.t_min, args.t_max, args.points)


def _add_model_flags(p):
    p.add_argument("--model", choices=("wwa", "twf"), required=True)
    p.add_argument("--twf-variant", choices=("large-t", "three-pion"),
                   help="T.W.F. constraint (required with --model twf)")
    p.add_argument("--config", help="key-value physics file (missing keys take defaults)")


def _add_grid_flags(p, t_max=20.0, points=200):
    p.add_argument("--t-min", type=float, default=0.0, help="tau_S units")
    p.add_argument("--t-max", type=float, default=t_max, help="tau_S units")
    p.add_argument("--points", type=int, default=points)


def cmd_rates(args) -> int:
    physics = _physics(args)
    model = _model(args)
    times = _time_grid(args)
    law = asymmetry.model_rate_law(model, args.initial, args.channel, physics)
    rates = np.atleast_1d(law(times))
    write_csv(args.out, ["t_over_tau_s", "rate"], [times, rates])
    _sidecar(args.out, _echo(args, physics=physics.to_config(), resolved_model=model.value))
    print(f"wrote {len(times)} rows to {args.out}")
    return 0


def cmd_asymmetry(args) -> int:
    physics = _physics(args)
    model = _model(args)
    _time_grid(args)
    c = asymmetry.curve(model, args.t_min, args.t_max, args.points, physics)
    asymmetry.write_curve_csv(c, args.out)
    limits = {"small_t": asymmetry.small_t_limit(model, physics),
              "large_t": asymmetry.large_t_limit(model, physics)}
    _sidecar(args.out, _echo(args, physics=physics.to_config(), resolved_model=model.value,
                             limits=limits))
    print(json.dumps({"model": model.value, **limits}))
    return 0


def cmd_golden_rule(args) -> int:
    if args.scenario:
        scenario = golden_rule.load_scenario(args.scenario)
    else:
        gammas = args.gamma or [1.0, 2.0]
        scenario = golden_rule.Scenario(tuple(gammas), args.spacing_over_gamma,
                                        args.bandwidth_over_gamma, args.t_max_times_gamma)
    result = golden_rule.run_scenario(scenario, record_every=args.record_every)
    summary = result.summary()
    if args.out:
        golden_rule.write_trajectory_csv(result.trajectory, args.out)
        _sidecar(args.out, _echo(args, scenario=scenario.to_config(), summary=summary))
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_spectral(args) -> int:
    p = spectral.BreitWignerParams(args.m, args.gamma)
    report = spectral.equivalence_report(p, args.half_width, args.spacing)
    out = Path(args.out)
    grid = spectral.energy_grid(p, min(args.half_width, 50.0), args.spacing)
    spectral.write_density_csv(p, grid, out / "density.csv")
    spectral.write_survival_csv(report, out / "survival.csv")
    echo = _echo(args, summary=report.summary())
    _sidecar(out / "density.csv", echo)
    _sidecar(out / "survival.csv", echo)
    print(json.dumps(report.summary(), sort_keys=True))
    return 0


def cmd_generate(args) -> int:
    physics = _physics(args)
    model = _model(args)
    channels = args.channel or None
    ev = events.sample(model, args.initial, args.n, args.seed, args.t_max, physics, channels,
                       workers=args.threads, normalization=args.normalization)
    events.write_events_csv(ev, args.out, config=_echo(args))
    counts = {c.value: k for c, k in ev.channel_counts().items()}
    print(json.dumps({"events": len(ev), "t_max": ev.metadata["t_max"], "counts": counts}))
    return 0


def cmd_fit(args) -> int:
    ev0 = events.read_events_csv(args.events_k0)
    ev1 = events.read_events_csv(args.events_k0bar)
    if args.config:
        physics = load_physics(args.config, use_defaults=True)
    else:
        physics = events.physics_from_metadata(ev0.metadata)
    n = int(round((args.bin_max - args.bin_min) / args.bin_width))
    if n < 1:
        raise UsageError("bin window holds no bin")
    edges = args.bin_min + args.bin_width * np.arange(n + 1)
    data = events.bin_asymmetry(ev0, ev1, edges, args.channel)
    result = fit.fit_epsilon(data, physics)
    chi2 = {m.value: fit.model_chi2(m, data, physics).to_dict() for m in Model}
    fit.write_fit_json(result, args.out)
    write_json(Path(args.out).with_name(Path(args.out).stem + "_chi2.json"),
               {"config": _echo(args), "model_chi2": chi2})
    print(json.dumps({"abs_epsilon": result.abs_epsilon, "sigma": result.sigma_abs_epsilon,
                      "converged": result.converged,
                      "verdicts": {k: v["verdict"] for k, v in chi2.items()}}))
    return 0 if result.converged else 2


def cmd_study(args) -> int:
    cfg = pipeline.load_study_config(args.config, seed=args.seed, n_per_flavor=args.n,
                                     twf_variant=args.twf_variant, threads=args.threads)
    report = pipeline.run_study(cfg, args.out)
    print(json.dumps({"verdict": report.verdicts,
                      "n_sigma": {k: v.n_sigma for k, v in report.chi2.items()},
                      "abs_epsilon_hat": report.fit_result.abs_epsilon,
                      "output": str(args.out)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kaontwf",
                     description="Neutral-kaon decay: WWA vs temporal-wave-function models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rates", help="channel rate curve")
    _add_model_flags(p)
    _add_grid_flags(p)
    p.add_argument("--initial", default="K0", choices=[f.value for f in Flavor])
    p.add_argument("--channel", default="2pi", choices=[c.value for c in Channel])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("asymmetry", help="two-pion asymmetry curve")
    _add_model_flags(p)
    _add_grid_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_asymmetry)

    p = sub.add_parser("golden-rule", help="ingoing mode coupled to flat continua")
    p.add_argument("--scenario", help="key-value scenario file")
    p.add_argument("--gamma", type=float, action="append",
                   help="per-species width (repeat for each species)")
    p.add_argument("--spacing-over-gamma", type=float, default=golden_rule.SPACING_OVER_GAMMA)
    p.add_argument("--bandwidth-over-gamma", type=float, default=golden_rule.BANDWIDTH_OVER_GAMMA)
    p.add_argument("--t-max-times-gamma", type=float, default=8.0)
    p.add_argument("--record-every", type=int, default=10)
    p.add_argument("--out", help="trajectory CSV")
    p.set_defaults(func=cmd_golden_rule)

    p = sub.add_parser("spectral", help="Breit-Wigner equivalence check")
    p.add_argument("--m", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--half-width", type=float, default=spectral.HALF_WIDTH_OVER_GAMMA,
                   help="energy window half-width in units of gamma")
    p.add_argument("--spacing", type=float, default=spectral.SPACING_OVER_GAMMA,
                   help="energy spacing in units of gamma")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("generate", help="Monte Carlo decay events")
    _add_model_flags(p)
    p.add_argument("--initial", default="K0", choices=("K0", "K0bar"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--t-max", type=float, help="window end in tau_S (default: automatic)")
    p.add_argument("--channel", action="append", choices=[c.value for c in Channel],
                   help="restrict to channel (repeatable)")
    p.add_argument("--normalization", choices=events.NORMALIZATIONS, default="decays")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit eps to two event files")
    p.add_argument("--events-k0", required=True)
    p.add_argument("--events-k0bar", required=True)
    p.add_argument("--bin-min", type=float, default=1.0)
    p.add_argument("--bin-max", type=float, default=20.0)
    p.add_argument("--bin-width", type=float, default=1.0)
    p.add_argument("--channel", default="2pi", choices=[c.value for c in Channel])
    p.add_argument("--config", help="physics file (default: taken from the event sidecar)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("study", help="end-to-end falsification study")
    p.add_argument("--config", help="key-value study file")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, help="produced kaons per flavor")
    p.add_argument("--twf-variant", choices=("large-t", "three-pion"))
    p.add_argument("--threads", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_study)
    return parser


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, pipeline.StageError):
        exc = exc.original
    if isinstance(exc, NumericalError):
        return 2
    return 1


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (KaonTwfError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
