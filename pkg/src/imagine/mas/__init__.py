from .backends import (
    AgentBackend, BackendError, Completion, HttpChatBackend, RetryPolicy, ScriptedBackend, TransportError,
)
from .oracle import OracleJudge, OraclePlanner, OracleReasoner, OracleReflector
from .orchestrator import (
    Backends, IncompleteTraceError, MasTrace, SftExample, build_sft_example, generate_dataset, read_jsonl, run_mas,
    summarize_dataset,
)
from .prompts import build_judge_prompt, build_reasoner_prompt, build_reflector_prompt, parse_verdict

__all__ = [
    "AgentBackend", "BackendError", "Completion", "HttpChatBackend", "RetryPolicy", "ScriptedBackend",
    "TransportError", "OracleJudge", "OraclePlanner", "OracleReasoner", "OracleReflector", "Backends",
    "IncompleteTraceError", "MasTrace", "SftExample", "build_sft_example", "generate_dataset", "read_jsonl",
    "run_mas", "summarize_dataset", "build_judge_prompt", "build_reasoner_prompt", "build_reflector_prompt",
    "parse_verdict",
]
