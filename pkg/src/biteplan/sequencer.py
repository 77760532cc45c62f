"""Bite sequencing: prompt assembly, response parsing, and the planners.

Three planning strategies share this module:

* the balanced planner ("flair") prompts the model with the full context,
  efficiency scores included;
* the preference-only planner prompts with every efficiency clause removed;
* the efficiency-only planner skips the model entirely and greedily picks
  the item with the fewest required actions.

Efficiency numbers are action counts, so lower means easier to pick up; the
shipped prompt states that polarity explicitly.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass
from importlib import resources

from .errors import BiteplanError
from . import llm as llm_gateway

PROMPT_MARKER = "Next bite as list:"

_EFF_START = "{eff_start}"
_EFF_END = "{eff_end}"


class SequencerError(BiteplanError):
    """Base class for prompt/response errors."""


class MissingMarkerError(SequencerError):
    """No line of the response begins with the required marker."""


class MalformedListError(SequencerError):
    """The marker line does not carry a list of zero to two strings."""


class InvalidBiteError(SequencerError):
    """The proposed bite does not exist in the current context."""


class DipAloneError(InvalidBiteError):
    """A dip was proposed as a standalone bite."""


class UnknownItemError(InvalidBiteError):
    """The proposed item or dip is not on the plate."""


class BiteRejectedError(SequencerError):
    """The model produced an invalid bite twice in a row."""


@dataclass(frozen=True)
class PreferenceSpec:
    """User preference, stored verbatim (possibly 'No preference')."""

    text: str

    @classmethod
    def none(cls) -> "PreferenceSpec":
        return cls("No preference")


@dataclass(frozen=True)
class SequencerContext:
    """Everything the bite sequencer is told about the meal."""

    items_remaining: tuple[str, ...]
    portions: tuple[int, ...]
    efficiencies: tuple[int, ...]
    preference: PreferenceSpec
    dips: tuple[str, ...] = ()
    history: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "items_remaining", tuple(self.items_remaining))
        object.__setattr__(self, "portions", tuple(self.portions))
        object.__setattr__(self, "efficiencies", tuple(self.efficiencies))
        object.__setattr__(self, "dips", tuple(self.dips))
        object.__setattr__(self, "history", tuple(self.history))
        if not (
            len(self.items_remaining) == len(self.portions) == len(self.efficiencies)
        ):
            raise SequencerError(
                "items, portions, and efficiencies must have equal length"
            )
        overlap = set(self.items_remaining) & set(self.dips)
        if overlap:
            raise SequencerError(f"dips overlap items_remaining: {sorted(overlap)}")


@dataclass(frozen=True)
class NoBite:
    pass


@dataclass(frozen=True)
class Single:
    label: str


@dataclass(frozen=True)
class Dipped:
    label: str
    dip_label: str


NextBite = NoBite | Single | Dipped


def _load_template() -> str:
    return (
        resources.files("biteplan.prompts")
        .joinpath("bite_sequencing.txt")
        .read_text(encoding="utf-8")
    )


_TEMPLATE: str | None = None


def _template() -> str:
    global _TEMPLATE
    if _TEMPLATE is None:
        _TEMPLATE = _load_template()
    return _TEMPLATE


def _strip_efficiency_spans(template: str, keep: bool) -> str:
    """Drop the span markers, and with them the spans when ``keep`` is false."""
    out = []
    pos = 0
    while True:
        start = template.find(_EFF_START, pos)
        if start < 0:
            out.append(template[pos:])
            break
        end = template.find(_EFF_END, start)
        if end < 0:
            raise SequencerError("unbalanced efficiency span in prompt template")
        out.append(template[pos:start])
        if keep:
            out.append(template[start + len(_EFF_START) : end])
        pos = end + len(_EFF_END)
    return "".join(out)


def build_prompt(ctx: SequencerContext, include_efficiency: bool) -> str:
    """Instantiate the shipped template; deterministic byte-for-byte."""
    text = _strip_efficiency_spans(_template(), keep=include_efficiency)
    substitutions = {
        "{items}": json.dumps(list(ctx.items_remaining)),
        "{portions}": json.dumps(list(ctx.portions)),
        "{efficiencies}": json.dumps(list(ctx.efficiencies)),
        "{preference}": json.dumps(ctx.preference.text),
        "{dips}": json.dumps(list(ctx.dips)),
        "{history}": json.dumps(list(ctx.history)),
    }
    for placeholder, value in substitutions.items():
        text = text.replace(placeholder, value)
    return text


def render_bite_list(bite: NextBite) -> str:
    """Render a bite as the marker line's bracketed list."""
    if isinstance(bite, NoBite):
        return "[]"
    if isinstance(bite, Single):
        return repr([bite.label])
    return repr([bite.label, bite.dip_label])


def parse_response(text: str, ctx: SequencerContext | None = None) -> NextBite:
    """Extract the bite from the last marker line of a model response.

    With a context, the bite is validated for membership: the item must be
    on the plate, the dip must be a known sauce, and a dip can never be fed
    by itself.
    """
    marker_lines = [
        line.strip() for line in text.splitlines() if line.strip().startswith(PROMPT_MARKER)
    ]
    if not marker_lines:
        raise MissingMarkerError(f"response has no {PROMPT_MARKER!r} line")
    rest = marker_lines[-1][len(PROMPT_MARKER) :]
    lb = rest.find("[")
    rb = rest.find("]", lb + 1)
    if lb < 0 or rb < 0:
        raise MalformedListError(f"no bracketed list in {rest.strip()!r}")
    try:
        value = ast.literal_eval(rest[lb : rb + 1])
    except (ValueError, SyntaxError) as exc:
        raise MalformedListError(f"cannot parse {rest[lb:rb + 1]!r}: {exc}") from exc
    if (
        not isinstance(value, list)
        or len(value) > 2
        or not all(isinstance(v, str) for v in value)
    ):
        raise MalformedListError(f"expected a list of 0-2 strings, got {value!r}")

    if len(value) == 0:
        return NoBite()
    if len(value) == 1:
        bite = Single(value[0])
    else:
        bite = Dipped(value[0], value[1])
    if ctx is not None:
        _validate_bite(bite, ctx)
    return bite


def _validate_bite(bite: NextBite, ctx: SequencerContext) -> None:
    if isinstance(bite, NoBite):
        return
    if isinstance(bite, Single):
        if bite.label in ctx.dips:
            raise DipAloneError(f"{bite.label!r} is a dip and cannot be fed alone")
        if bite.label not in ctx.items_remaining:
            raise UnknownItemError(f"{bite.label!r} is not in the items remaining")
        return
    if bite.label not in ctx.items_remaining:
        raise UnknownItemError(f"{bite.label!r} is not in the items remaining")
    if bite.dip_label not in ctx.dips:
        raise UnknownItemError(f"{bite.dip_label!r} is not an available dip")


def _correction_sentence(error: SequencerError) -> str:
    return (
        f"Your previous answer was invalid: {error}. Answer again. You may only "
        "feed an item from 'Items remaining', optionally dipped in one of "
        "'Dipping sauces remaining', and never a dip by itself. Ensure that the "
        f"last line begins with '{PROMPT_MARKER}'"
    )


def _llm_next_bite(ctx: SequencerContext, llm, include_efficiency: bool) -> NextBite:
    if not ctx.items_remaining:
        return NoBite()
    prompt = build_prompt(ctx, include_efficiency)
    response = llm_gateway.complete(llm, prompt)
    try:
        return parse_response(response, ctx)
    except SequencerError as first_error:
        retry_prompt = prompt + "\n" + _correction_sentence(first_error)
        retry_response = llm_gateway.complete(llm, retry_prompt)
        try:
            return parse_response(retry_response, ctx)
        except SequencerError as second_error:
            raise BiteRejectedError(
                f"invalid bite after retry: {second_error}"
            ) from second_error


def next_bite_flair(ctx: SequencerContext, llm) -> NextBite:
    """Prompt with full context (efficiency included) and parse the answer."""
    return _llm_next_bite(ctx, llm, include_efficiency=True)


def next_bite_preference_only(ctx: SequencerContext, llm) -> NextBite:
    """Prompt with every efficiency clause omitted."""
    return _llm_next_bite(ctx, llm, include_efficiency=False)


def next_bite_efficiency_only(ctx: SequencerContext) -> NextBite:
    """Greedy argmin over action counts; never dips, never consults a model.

    Ties break toward the larger portion count, then context order.
    """
    if not ctx.items_remaining:
        return NoBite()
    best = min(
        range(len(ctx.items_remaining)),
        key=lambda i: (ctx.efficiencies[i], -ctx.portions[i], i),
    )
    return Single(ctx.items_remaining[best])
