from .profiles import AgentProfile, Strategy, default_roster
from .policies import Decision, Observation, PostDraft, decide
from .llm import (
    MODE_RECORD,
    MODE_REPLAY,
    PROMPT_VERSION,
    CompletionClient,
    LlmRuntime,
    build_prompt,
    llm_decide,
    parse_action,
)

__all__ = [
    "AgentProfile",
    "Strategy",
    "default_roster",
    "Decision",
    "Observation",
    "PostDraft",
    "decide",
    "MODE_RECORD",
    "MODE_REPLAY",
    "PROMPT_VERSION",
    "CompletionClient",
    "LlmRuntime",
    "build_prompt",
    "llm_decide",
    "parse_action",
]
