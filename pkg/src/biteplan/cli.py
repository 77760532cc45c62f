"""Command-line entry point: plan, simulate, compare, and geometry debug.

Exit codes: 0 on success, 1 on planner/transport/data errors, 2 on usage
errors (unknown flags, missing files, empty fixture sets).
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields

from .errors import BiteplanError
from . import render
from .llm import CassetteMissError, LiveTransport, ReplayTransport
from .plate import PlateState, load_fixture
from .planner import PlannerConfig, plan_acquisition
from .sequencer import PreferenceSpec
from .simulator import (
    EfficiencyOnlyPlanner,
    EpisodeLog,
    FlairPlanner,
    PreferenceOnlyPlanner,
    SkillEffectConfig,
    curve_csv_rows,
    pickup_curve,
    run_episode,
)

PLANNER_CHOICES = ("flair", "pref", "eff")
PLANNER_NAMES = {
    "flair": "flair",
    "pref": "preference_only",
    "eff": "efficiency_only",
}

# Actions budget relative to the plate's initial portion total.
STEP_CAP_FACTOR = 4


class UsageError(Exception):
    pass


def load_config(path: str | None) -> PlannerConfig:
    if path is None:
        return PlannerConfig()
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    known = {f.name for f in fields(PlannerConfig)}
    overrides = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in known:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                overrides[key] = float(value.strip())
            except ValueError:
                raise UsageError(f"{path}:{lineno}: bad value for {key}") from None
    return PlannerConfig(**overrides)


def _require_fixture(path: str) -> PlateState:
    if not os.path.exists(path):
        raise UsageError(f"fixture not found: {path}")
    return load_fixture(path)


def _fixture_stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _make_planner(kind: str, cassette: str | None, strict: bool):
    if kind == "eff":
        return EfficiencyOnlyPlanner()
    if cassette:
        transport = ReplayTransport(cassette, strict=strict)
    else:
        transport = LiveTransport()
    return FlairPlanner(transport) if kind == "flair" else PreferenceOnlyPlanner(transport)


def cmd_plan(args) -> int:
    state = _require_fixture(args.fixture)
    cfg = load_config(args.config)
    obs = state.observation
    print(f"plate {args.fixture}: {len(obs.items)} items")
    for item in obs.items:
        others = [o for o in obs.items if o.instance_id != item.instance_id]
        seq = plan_acquisition(item, others, cfg)
        kinds = ",".join(k.value for k in seq.kinds)
        print(
            f"  {item.label:<20} {item.category.value:<13} "
            f"efficiency={seq.efficiency}  sequence={kinds}"
        )
        print(f"plan {item.label} eff={seq.efficiency} seq={kinds}")
    return 0


def _write_lines(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _run_one_episode(
    fixture_path: str,
    planner_kind: str,
    cassette: str | None,
    cfg: PlannerConfig,
    seed: int,
    strict: bool,
    preference: str,
) -> EpisodeLog:
    state = _require_fixture(fixture_path)
    planner = _make_planner(planner_kind, cassette, strict)
    fx = SkillEffectConfig(rng_seed=seed)
    from .portioning import estimate_portions

    portion_total = sum(e.portions for e in estimate_portions(state, cfg))
    step_cap = max(1, STEP_CAP_FACTOR * portion_total)
    return run_episode(
        state,
        planner,
        cfg,
        fx,
        step_cap=step_cap,
        preference=PreferenceSpec(preference),
        fixture_name=_fixture_stem(fixture_path),
    )


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    log = _run_one_episode(
        args.fixture,
        args.planner,
        args.cassette,
        cfg,
        args.seed,
        args.strict_replay,
        args.preference,
    )
    _write_lines(os.path.join(args.out, "episode.log"), log.to_lines())
    _write_lines(os.path.join(args.out, "curve.csv"), curve_csv_rows(log))
    print(
        f"{log.planner_name} on {log.fixture_name}: {log.bites_fed} bites in "
        f"{log.actions} actions ({log.terminated_reason})"
    )
    return 0


def _extend_curve(curve: list[tuple[int, int]], length: int) -> list[int]:
    values = []
    level = 0
    by_index = dict(curve)
    for i in range(1, length + 1):
        level = by_index.get(i, level)
        values.append(level)
    return values


def cmd_compare(args) -> int:
    if not args.fixture:
        raise UsageError("compare needs at least one --fixture")
    cfg = load_config(args.config)
    os.makedirs(args.out, exist_ok=True)

    jobs = []
    for fixture_path in args.fixture:
        if not os.path.exists(fixture_path):
            raise UsageError(f"fixture not found: {fixture_path}")
        stem = _fixture_stem(fixture_path)
        for kind in ("eff", "flair", "pref"):
            cassette = None
            if kind != "eff":
                if not args.cassette:
                    raise UsageError("compare needs --cassette <dir> for llm planners")
                cassette = os.path.join(
                    args.cassette, f"{stem}.{PLANNER_NAMES[kind]}.cassette"
                )
                if not os.path.exists(cassette):
                    raise UsageError(f"cassette not found: {cassette}")
            jobs.append((fixture_path, stem, kind, cassette))

    results: dict[tuple[str, str], EpisodeLog] = {}
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        futures = {
            pool.submit(
                _run_one_episode,
                fixture_path,
                kind,
                cassette,
                cfg,
                args.seed,
                args.strict_replay,
                args.preference,
            ): (stem, kind)
            for fixture_path, stem, kind, cassette in jobs
        }
        for future, (stem, kind) in futures.items():
            results[(stem, PLANNER_NAMES[kind])] = future.result()

    stems = sorted({stem for stem, _ in results})
    csv_lines = ["fixture,action_index,efficiency_only,flair,preference_only"]
    report_lines = []
    ordering_ok = True
    for stem in stems:
        curves = {
            name: pickup_curve(results[(stem, name)])
            for name in ("efficiency_only", "flair", "preference_only")
        }
        length = max((c[-1][0] for c in curves.values() if c), default=0)
        extended = {
            name: _extend_curve(curve, length) for name, curve in curves.items()
        }
        for i in range(length):
            csv_lines.append(
                f"{stem},{i + 1},{extended['efficiency_only'][i]},"
                f"{extended['flair'][i]},{extended['preference_only'][i]}"
            )
        dominance = all(
            extended["efficiency_only"][i]
            >= extended["flair"][i]
            >= extended["preference_only"][i]
            for i in range(length)
        )
        ordering_ok &= dominance
        report_lines.append(
            f"ordering {stem} efficiency_only>=flair>=preference_only: "
            f"{'OK' if dominance else 'VIOLATION'}"
        )
    _write_lines(os.path.join(args.out, "compare.csv"), csv_lines)
    _write_lines(os.path.join(args.out, "ordering.txt"), report_lines)
    for line in report_lines:
        print(line)
    return 0 if ordering_ok else 1


def cmd_geometry(args) -> int:
    state = _require_fixture(args.fixture)
    cfg = load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, f"{_fixture_stem(args.fixture)}.png")
    render.render_plate(state, cfg, out_path)
    print(f"wrote {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biteplan",
        description="Bite-acquisition planning and plate simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="print skill sequences per item")
    p_plan.add_argument("--fixture", required=True)
    p_plan.add_argument("--config")
    p_plan.set_defaults(func=cmd_plan)

    p_sim = sub.add_parser("simulate", help="run one episode")
    p_sim.add_argument("--fixture", required=True)
    p_sim.add_argument("--planner", choices=PLANNER_CHOICES, required=True)
    p_sim.add_argument("--cassette")
    p_sim.add_argument("--config")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--strict-replay", action="store_true")
    p_sim.add_argument("--preference", default="No preference")
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser("compare", help="run all three planners per fixture")
    p_cmp.add_argument("--fixture", action="append", default=[])
    p_cmp.add_argument("--cassette", help="directory of <fixture>.<planner>.cassette files")
    p_cmp.add_argument("--config")
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.add_argument("--out", required=True)
    p_cmp.add_argument("--jobs", type=int, default=1)
    p_cmp.add_argument("--strict-replay", action="store_true")
    p_cmp.add_argument("--preference", default="No preference")
    p_cmp.set_defaults(func=cmd_compare)

    p_geo = sub.add_parser("geometry", help="render PNG overlays")
    p_geo.add_argument("--fixture", required=True)
    p_geo.add_argument("--config")
    p_geo.add_argument("--out", required=True)
    p_geo.set_defaults(func=cmd_geometry)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"biteplan: error: {exc}", file=sys.stderr)
        return 2
    except BiteplanError as exc:
        cause: BaseException | None = exc
        while cause is not None:
            if isinstance(cause, CassetteMissError):
                print(
                    f"biteplan: cassette miss: {cause.prompt_hash}", file=sys.stderr
                )
                return 1
            cause = cause.__cause__
        print(f"biteplan: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
