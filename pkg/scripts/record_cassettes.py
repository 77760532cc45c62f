#!/usr/bin/env python3
"""Regenerate the frozen reply cassettes under fixtures/cassettes/.

A deterministic scripted responder stands in for the language model: it
parses the context back out of each prompt and applies the prompt's own
decision rules (respect exclusions, feed the oversized portion first, vary
bites, pair known dips).  The balanced planner's variant breaks remaining
ties toward the lowest action count; the preference-only variant never sees
efficiencies and takes the first candidate in plate order.

After recording, every cassette is replayed strictly and the pickup curves
are checked for the expected pointwise ordering
(efficiency_only >= flair >= preference_only).

Run from the repository root:

    python3 scripts/record_cassettes.py
"""

from __future__ import annotations

import ast
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from biteplan.llm import ReplayTransport, append_cassette  # noqa: E402
from biteplan.plate import load_fixture  # noqa: E402
from biteplan.planner import PlannerConfig  # noqa: E402
from biteplan.portioning import estimate_portions  # noqa: E402
from biteplan.sequencer import PreferenceSpec  # noqa: E402
from biteplan.simulator import (  # noqa: E402
    EfficiencyOnlyPlanner,
    FlairPlanner,
    PreferenceOnlyPlanner,
    SkillEffectConfig,
    pickup_curve,
    run_episode,
)

ROOT = os.path.join(os.path.dirname(__file__), "..")
PLATES_DIR = os.path.join(ROOT, "fixtures", "plates")
CASSETTE_DIR = os.path.join(ROOT, "fixtures", "cassettes")

PLATES = [
    "spaghetti_meatballs",
    "fettuccine_chicken_broccoli",
    "mashed_sausage",
    "oatmeal_strawberries",
    "appetizer",
    "dessert",
]

DIP_PAIRS = {
    "banana": "chocolate sauce",
    "strawberry": "chocolate sauce",
    "brownie": "chocolate sauce",
    "celery": "ranch",
}

CFG = PlannerConfig()
FX = SkillEffectConfig(rng_seed=0)


# ---------------------------------------------------------------------------
# Scripted responder
# ---------------------------------------------------------------------------


def _list_after(prompt: str, prefix: str):
    for line in prompt.splitlines():
        if line.startswith(prefix):
            return ast.literal_eval(line[len(prefix) :].strip())
    return None


def parse_prompt(prompt: str) -> dict:
    return {
        "items": _list_after(prompt, "Items remaining:"),
        "portions": _list_after(
            prompt, "Portions remaining (corresponding to items remaining list):"
        ),
        "efficiencies": _list_after(prompt, "Efficiencies:"),
        "preference": _list_after(prompt, "Preference:"),
        "dips": _list_after(prompt, "Dipping sauces remaining:"),
        "history": _list_after(prompt, "- In the past, I have eaten the following bites:"),
    }


def banned_labels(preference: str, items: list[str]) -> set[str]:
    text = preference.lower()
    banned = set()
    for marker in ("don't feed me", "do not feed me", "no more", "skip the"):
        idx = text.find(marker)
        if idx < 0:
            continue
        phrase = text[idx + len(marker) :]
        for label in items:
            if label in phrase or f"{label}s" in phrase:
                banned.add(label)
    return banned


def decide(fields: dict) -> tuple[str, str | None] | None:
    items = fields["items"]
    portions = dict(zip(items, fields["portions"]))
    effs = (
        dict(zip(items, fields["efficiencies"]))
        if fields["efficiencies"] is not None
        else None
    )
    history = fields["history"] or []
    dips = fields["dips"] or []

    candidates = [i for i in items if i not in banned_labels(fields["preference"], items)]
    if not candidates:
        return None

    counts = [portions[c] for c in candidates]
    if max(counts) - min(counts) >= 3:
        top = max(counts)
        candidates = [c for c in candidates if portions[c] == top][:1]
    else:
        if history and history[-1] in candidates and len(candidates) > 1:
            candidates = [c for c in candidates if c != history[-1]]
        multi = [c for c in candidates if portions[c] > 1]
        if multi:
            candidates = multi

    if effs is not None:
        pick = min(candidates, key=lambda c: (effs[c], items.index(c)))
    else:
        pick = candidates[0]

    dip = DIP_PAIRS.get(pick)
    if dip not in dips:
        dip = None
    return pick, dip


def render_response(fields: dict, choice: tuple[str, str | None] | None) -> str:
    items = fields["items"]
    portions = fields["portions"]
    summary = ", ".join(f"{p} of {i}" for i, p in zip(items, portions))
    lines = [f"Food Items Left: The plate still has {summary}."]
    if choice is None:
        lines.append("Strategy: Nothing acceptable remains, so I will stop here.")
        lines.append("Next bite: Do not feed a bite.")
        if fields["efficiencies"] is not None:
            lines.append("Next bite (accounting for efficiency): Do not feed a bite.")
        lines.append("Next bite as list: []")
        return "\n".join(lines)
    label, dip = choice
    phrase = f"Feed {label}" + (f" dipped in {dip}" if dip else "")
    lines.append(
        "Strategy: Respect the stated preference first, then favor the larger "
        "portions and vary the bites."
    )
    lines.append(f"Next bite: {phrase}.")
    if fields["efficiencies"] is not None:
        lines.append(f"Next bite (accounting for efficiency): {phrase}.")
    bite_list = [label] + ([dip] if dip else [])
    lines.append(f"Next bite as list: {bite_list!r}")
    return "\n".join(lines)


class ScriptedRecorder:
    """Answers like the scripted policy and records every exchange."""

    def __init__(self, cassette_path: str):
        self.cassette_path = cassette_path

    def complete(self, prompt: str) -> str:
        response = render_response(parse_prompt(prompt), decide(parse_prompt(prompt)))
        append_cassette(self.cassette_path, prompt, response)
        return response


# ---------------------------------------------------------------------------
# Recording and verification
# ---------------------------------------------------------------------------


def episode(stem: str, planner, preference: str):
    state = load_fixture(os.path.join(PLATES_DIR, f"{stem}.txt"))
    portion_total = sum(e.portions for e in estimate_portions(state, CFG))
    return run_episode(
        state,
        planner,
        CFG,
        FX,
        step_cap=4 * portion_total,
        preference=PreferenceSpec(preference),
        fixture_name=stem,
    ), portion_total


def record(stem: str, planner_name: str, preference: str, cassette_name: str):
    path = os.path.join(CASSETTE_DIR, cassette_name)
    if os.path.exists(path):
        os.remove(path)
    recorder = ScriptedRecorder(path)
    planner = (
        FlairPlanner(recorder)
        if planner_name == "flair"
        else PreferenceOnlyPlanner(recorder)
    )
    log, portion_total = episode(stem, planner, preference)
    replayer = (
        FlairPlanner(ReplayTransport(path, strict=True))
        if planner_name == "flair"
        else PreferenceOnlyPlanner(ReplayTransport(path, strict=True))
    )
    replay_log, _ = episode(stem, replayer, preference)
    assert replay_log.to_lines() == log.to_lines(), f"{cassette_name}: replay mismatch"
    assert log.terminated_reason in ("plate_empty", "planner_no_bite"), (
        f"{cassette_name}: terminated {log.terminated_reason}"
    )
    assert log.actions < 4 * portion_total, (
        f"{cassette_name}: {log.actions} actions >= cap {4 * portion_total}"
    )
    return log


def extend(curve, length):
    values, level = [], 0
    lookup = dict(curve)
    for i in range(1, length + 1):
        level = lookup.get(i, level)
        values.append(level)
    return values


def main() -> None:
    os.makedirs(CASSETTE_DIR, exist_ok=True)
    failures = []
    for stem in PLATES:
        eff_log, total = episode(stem, EfficiencyOnlyPlanner(), "No preference")
        assert eff_log.terminated_reason == "plate_empty", stem
        assert eff_log.actions < 4 * total, stem
        flair_log = record(stem, "flair", "No preference", f"{stem}.flair.cassette")
        pref_log = record(
            stem, "preference_only", "No preference", f"{stem}.preference_only.cassette"
        )
        length = max(eff_log.actions, flair_log.actions, pref_log.actions)
        e = extend(pickup_curve(eff_log), length)
        f = extend(pickup_curve(flair_log), length)
        p = extend(pickup_curve(pref_log), length)
        ok = all(e[i] >= f[i] >= p[i] for i in range(length))
        print(
            f"{stem}: eff={eff_log.actions}a/{eff_log.bites_fed}b "
            f"flair={flair_log.actions}a/{flair_log.bites_fed}b "
            f"pref={pref_log.actions}a/{pref_log.bites_fed}b "
            f"ordering={'OK' if ok else 'VIOLATION'}"
        )
        if not ok:
            failures.append(stem)

    # Strong-preference cassette for the spaghetti plate.
    no_meatballs = "Please don't feed me meatballs."
    log = record(
        "spaghetti_meatballs",
        "flair",
        no_meatballs,
        "spaghetti_meatballs.flair.no_meatballs.cassette",
    )
    first_fed = next(s for s in log.steps if s.bites_fed == 1)
    assert first_fed.decision == "spaghetti", first_fed
    assert log.terminated_reason == "planner_no_bite"
    print(
        f"spaghetti_meatballs (no meatballs): flair fed spaghetti first, "
        f"{log.bites_fed} bites in {log.actions} actions"
    )

    if failures:
        raise SystemExit(f"ordering violations: {failures}")
    print("all cassettes recorded and verified")


if __name__ == "__main__":
    main()
