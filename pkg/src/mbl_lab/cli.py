"""``mbl-lab`` command line entry point.

Exit status: 0 on success, 2 for usage errors (bad flags, missing or
malformed input files), 1 for failures while computing.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import convergence_metrics, empirical_drift, ode_approximation_error
from .catalog import CATALOG_NAMES, catalog_game
from .config import ConfigError
from .dynamics import MutationParams, field_norm, find_equilibrium, integrate_rmd, rmd_field, stability_spectrum
from .experiment import (
    experiment_to_text,
    load_experiment,
    load_game,
    preset_configs,
    run_experiment,
    target_profile,
)
from .games import GameError, MixedProfile, make_profile, nash_violation
from .io import export_csv, output_path
from .learners import LearnerConfig

log = logging.getLogger("mbl_lab")


class UsageError(Exception):
    pass


def _json_arg(text: str | None, what: str):
    if text is None:
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise UsageError(f"{what} must be JSON, e.g. '[[0.3, 0.7], [0.5, 0.5]]'") from None


def _game(args):
    try:
        return load_game(args.game)
    except GameError as exc:
        raise UsageError(str(exc)) from None


def _mutation(game, args) -> MutationParams:
    M = _json_arg(args.M, "--M")
    c = _json_arg(args.c, "--c")
    return MutationParams.create(game, M, c)


def _start(game, args) -> MixedProfile | None:
    x0 = _json_arg(args.x0, "--x0")
    if x0 is not None:
        return make_profile(game, x0)
    if game.name.upper() in CATALOG_NAMES:
        return catalog_game(game.name)[1][0].profile()
    return None


def _fmt(prof: MixedProfile) -> str:
    return "  ".join("(" + ", ".join(f"{v:.10g}" for v in s) + ")" for s in prof.strategies)


# --- subcommands ---------------------------------------------------------

def cmd_catalog(args) -> int:
    for name in CATALOG_NAMES:
        game, eqs = catalog_game(name)
        print(f"{name}: {game.num_players} players, actions {list(game.action_counts)}")
        for eq in eqs:
            coords = "  ".join("(" + ", ".join(str(v) for v in s) + ")" for s in eq.coords)
            print(f"  {eq.kind}: {coords}   violation {nash_violation(game, eq.profile()):.2e}")
    return 0


def cmd_simulate(args) -> int:
    if args.preset:
        presets = preset_configs()
        if args.preset not in presets:
            raise UsageError(f"unknown preset {args.preset!r}; see 'mbl-lab presets'")
        config = presets[args.preset]
        stem = args.preset.replace("/", "_")
    else:
        if args.config is None:
            raise UsageError("simulate needs a config file or --preset")
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file {path} not found")
        try:
            config = load_experiment(path)
        except (ConfigError, GameError) as exc:
            raise UsageError(f"{path}: {exc}") from None
        stem = path.stem
    overrides = {k: v for k, v in (("workers", args.workers), ("steps", args.steps), ("seed", args.seed)) if v is not None}
    if overrides:
        config = config.model_copy(update=overrides)
        config = type(config).model_validate(config.model_dump())
    records = run_experiment(config)
    game = load_game(config.game)
    out = output_path(args.out or f"{stem}.csv")
    prob_path, std_path = export_csv(records, out)
    print(f"wrote {prob_path} and {std_path} ({len(records)} runs, config {records[0].config_hash})")

    target = None
    try:
        target = target_profile(config, game)
    except Exception as exc:  # target is a diagnostic only
        log.warning("no target profile: %s", exc)
    if target is not None:
        radius = args.radius
        for rec in records:
            window = min(max(2, config.window // config.stride), len(rec.steps))
            if window < 2:
                continue
            rep = convergence_metrics(rec.profiles, rec.offsets, target.flat, radius, window, rec.steps)
            print(f"run {rec.run_id}: {rep.summary()}, engine std {np.array2string(rec.rolling_std[-1], precision=4)}")
    if args.plot:
        from .plotting import render_plot

        plot = render_plot(records, config.projection, target, output_path(args.plot))
        print(f"wrote {plot}")
    return 0


def cmd_presets(args) -> int:
    presets = preset_configs()
    if args.write:
        base = output_path(Path(args.write) / "x").parent
        for name, cfg in presets.items():
            (base / (name.replace("/", "_") + ".cfg")).write_text(experiment_to_text(cfg))
        print(f"wrote {len(presets)} preset configs to {base}")
    else:
        for name, cfg in presets.items():
            print(f"{name:22s} steps={cfg.steps} theta={cfg.learners[0].theta:g}")
    return 0


def cmd_ode(args) -> int:
    game = _game(args)
    mut = _mutation(game, args)
    x0 = _start(game, args) or MixedProfile.uniform(game)
    times = np.linspace(0.0, args.horizon, args.samples) if args.horizon > 0 else None
    traj = integrate_rmd(game, mut, x0, args.horizon, tol=args.tol, t_eval=times)
    print(f"terminal state  {_fmt(MixedProfile.from_flat(game, traj.terminal))}")
    print(f"terminal field norm {traj.terminal_field_norm:.3e}  renormalizations {traj.renormalizations}")
    if args.out:
        off = game.offsets()
        path = output_path(args.out)
        with path.open("w") as fh:
            fh.write("t,player,action,prob\n")
            for t, row in zip(traj.times, traj.states):
                for p in range(game.num_players):
                    for a in range(game.action_counts[p]):
                        fh.write(f"{t:.9g},{p},{a},{row[off[p] + a]:.9g}\n")
        print(f"wrote {path}")
    return 0


def cmd_equilibrium(args) -> int:
    game = _game(args)
    mut = _mutation(game, args)
    x = find_equilibrium(game, mut, _start(game, args))
    print(f"equilibrium  {_fmt(x)}")
    print(f"field norm {field_norm(game, mut, x):.3e}  nash violation {nash_violation(game, x):.6g}")
    return 0


def cmd_stability(args) -> int:
    game = _game(args)
    mut = _mutation(game, args)
    x = find_equilibrium(game, mut, _start(game, args))
    rep = stability_spectrum(game, mut, x)
    print(f"equilibrium  {_fmt(x)}")
    print("eigenvalues  " + ", ".join(f"{z.real:+.6g}{z.imag:+.6g}j" for z in rep.eigenvalues))
    print(f"max Re {rep.max_real:+.6g}")
    print(rep.classification)
    return 0


def cmd_drift(args) -> int:
    game = _game(args)
    cfg = LearnerConfig(algorithm=args.algorithm, M=float(args.M) if args.algorithm != "Cross" else 0.0)
    x = _start(game, args) if args.x0 else MixedProfile.uniform(game)
    est = empirical_drift(cfg, game, x, args.samples, np.random.default_rng(args.seed))
    mut = MutationParams.create(game, cfg.mutation)
    field = rmd_field(game, mut, x).flat
    z = est.zscores(field)
    for k in range(game.dim):
        print(f"component {k}: drift {est.drift[k]:+.6f} ± {est.stderr[k]:.2e}  field {field[k]:+.6f}  z {z[k]:.2f}")
    frac = float(np.mean(z <= 3))
    print(f"{frac:.0%} of components within 3 standard errors")
    return 0


def cmd_scaling(args) -> int:
    game = _game(args)
    cfg = LearnerConfig(algorithm="MBL-DPU", M=float(args.M))
    x0 = _start(game, args) if args.x0 else MixedProfile.uniform(game)
    thetas = [float(t) for t in args.thetas.split(",")]
    errs = ode_approximation_error(game, cfg, x0, thetas, args.horizon, args.ensemble, seed=args.seed)
    for th, e in zip(thetas, errs):
        print(f"theta {th:g}: sup error {e:.5g}")
    for (a, ea), (b, eb) in zip(zip(thetas, errs), zip(thetas[1:], errs[1:])):
        print(f"error({a:g})/error({b:g}) = {ea / eb:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mbl-lab", description="Mutation-bias learning laboratory")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("catalog", help="list catalog games and their Nash equilibria").set_defaults(func=cmd_catalog)

    s = sub.add_parser("simulate", help="run a self-play experiment")
    s.add_argument("config", nargs="?")
    s.add_argument("--preset")
    s.add_argument("--out", help="probability CSV (the .std.csv goes next to it)")
    s.add_argument("--plot", help="PNG or SVG projection plot")
    s.add_argument("--radius", type=float, default=0.05, help="ball radius for the summary")
    s.add_argument("--workers", type=int)
    s.add_argument("--steps", type=int)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("presets", help="list or write the figure protocols")
    s.add_argument("--write", metavar="DIR")
    s.set_defaults(func=cmd_presets)

    def dyn(name, func, help):
        s = sub.add_parser(name, help=help)
        s.add_argument("--game", default="MP", help="catalog name or game file")
        s.add_argument("--M", default="0.05", help="mutation strength, or JSON list per player")
        s.add_argument("--c", help="JSON bias points per player (default: centroids)")
        s.add_argument("--x0", help="JSON start profile, e.g. '[[0.3,0.7],[0.5,0.5]]'")
        s.set_defaults(func=func)
        return s

    s = dyn("ode", cmd_ode, "integrate the replicator-mutator ODE")
    s.add_argument("--horizon", type=float, default=100.0)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--samples", type=int, default=201)
    s.add_argument("--out")
    dyn("equilibrium", cmd_equilibrium, "locate a mutation equilibrium")
    dyn("stability", cmd_stability, "eigenvalues at a mutation equilibrium")

    s = dyn("drift-check", cmd_drift, "Monte Carlo drift vs. the ODE field")
    s.add_argument("--algorithm", choices=("MBL-DPU", "Cross"), default="MBL-DPU")
    s.add_argument("--samples", type=int, default=10**6)
    s.add_argument("--seed", type=int, default=0)

    s = dyn("scaling", cmd_scaling, "ensemble-mean error against the ODE for several learning rates")
    s.add_argument("--thetas", default="4e-4,2e-4,1e-4")
    s.add_argument("--horizon", type=float, default=5.0)
    s.add_argument("--ensemble", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mbl-lab {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"mbl-lab {args.command}: error: {exc}", file=sys.stderr)
        log.debug("traceback", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
