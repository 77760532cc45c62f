"""Bite-acquisition planning and plate simulation for assistive feeding.

The package plans how a fork-wielding robot would feed a plate of food:
mask geometry parameterizes a seven-skill library, a hierarchical task
planner turns items into skill sequences, portion and efficiency estimates
feed an LLM-based bite sequencer, and a desk-scale simulator closes the
loop without any robot or camera.
"""

from .errors import BiteplanError
from .plate import (
    FoodCategory,
    FoodItem,
    FoodMask,
    PlateObservation,
    PlateState,
    load_fixture,
    save_fixture,
)
from .planner import PlannerConfig, SkillSequence, efficiency_of, plan_acquisition
from .portioning import PortionEstimate, estimate_portions
from .sequencer import (
    Dipped,
    NoBite,
    PreferenceSpec,
    SequencerContext,
    Single,
    build_prompt,
    next_bite_efficiency_only,
    next_bite_flair,
    next_bite_preference_only,
    parse_response,
)
from .simulator import (
    EfficiencyOnlyPlanner,
    EpisodeLog,
    FlairPlanner,
    PreferenceOnlyPlanner,
    SkillEffectConfig,
    apply_skill,
    pickup_curve,
    run_episode,
)
from .skills import SkillCommand, SkillKind, UtensilAction, ZLevel

__version__ = "0.1.0"

__all__ = [
    "BiteplanError",
    "Dipped",
    "EfficiencyOnlyPlanner",
    "EpisodeLog",
    "FlairPlanner",
    "FoodCategory",
    "FoodItem",
    "FoodMask",
    "NoBite",
    "PlannerConfig",
    "PlateObservation",
    "PlateState",
    "PortionEstimate",
    "PreferenceOnlyPlanner",
    "PreferenceSpec",
    "SequencerContext",
    "Single",
    "SkillCommand",
    "SkillEffectConfig",
    "SkillKind",
    "SkillSequence",
    "UtensilAction",
    "ZLevel",
    "apply_skill",
    "build_prompt",
    "efficiency_of",
    "estimate_portions",
    "load_fixture",
    "next_bite_efficiency_only",
    "next_bite_flair",
    "next_bite_preference_only",
    "parse_response",
    "pickup_curve",
    "plan_acquisition",
    "run_episode",
    "save_fixture",
    "__version__",
]
