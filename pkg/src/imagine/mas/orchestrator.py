"""Reasoner -> two Judges -> (Reflector) protocol and SFT data construction."""

from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ..plan import THINK_CLOSE
from ..query_gen import Query
from ..reward import REFLECTION_CLOSER, REFLECTION_PROMPT
from .backends import AgentBackend, BackendError, RetryPolicy, TransportError
from .prompts import (
    build_judge_prompt, build_reasoner_prompt, build_reflector_prompt, parse_verdict,
    split_reasoner_reply, split_reflector_reply,
)

log = logging.getLogger(__name__)

NO_ERRORS = "No errors."


class IncompleteTraceError(ValueError):
    pass


@dataclass
class Backends:
    reasoner: AgentBackend
    judges: tuple[AgentBackend, AgentBackend]
    reflector: AgentBackend


@dataclass(frozen=True)
class CallRecord:
    role: str
    prompt_tokens: int
    completion_tokens: int
    seconds: float


@dataclass
class MasTrace:
    query_id: str
    reasoner_prompt: str
    reasoner_think: str = ""
    reasoner_answer: str = ""
    judge_verdicts: list[str] = field(default_factory=list)
    judge_replies: list[str] = field(default_factory=list)
    reflector_invoked: bool = False
    reflection_content: str | None = None
    final_answer: str = ""
    accounting: list[CallRecord] = field(default_factory=list)
    error: str | None = None

    @property
    def total_tokens(self) -> int:
        return sum(c.prompt_tokens + c.completion_tokens for c in self.accounting)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "MasTrace":
        d = dict(d)
        d["accounting"] = [CallRecord(**c) for c in d.get("accounting", [])]
        return cls(**d)


def _call(backend: AgentBackend, prompt: str, retry: RetryPolicy, trace: MasTrace, lock: threading.Lock) -> str:
    start = time.perf_counter()
    out = retry.call(backend, prompt)
    with lock:
        trace.accounting.append(CallRecord(backend.role, out.prompt_tokens, out.completion_tokens,
                                           time.perf_counter() - start))
    return out.text


def run_mas(
    query: Query,
    reference_information: dict,
    backends: Backends,
    retry: RetryPolicy | None = None,
) -> MasTrace:
    """Run one query through the protocol.

    Backend failures that survive the retry policy are recorded in
    ``trace.error`` instead of being raised.
    """
    retry = retry or RetryPolicy()
    lock = threading.Lock()
    prompt = build_reasoner_prompt(query, reference_information)
    trace = MasTrace(query_id=query.query_id, reasoner_prompt=prompt)
    try:
        reply = _call(backends.reasoner, prompt, retry, trace, lock)
        trace.reasoner_think, trace.reasoner_answer = split_reasoner_reply(reply)
        judge_prompts = [
            build_judge_prompt(query, reference_information, trace.reasoner_think, trace.reasoner_answer, variant=i)
            for i in range(len(backends.judges))
        ]
        with ThreadPoolExecutor(max_workers=len(backends.judges)) as pool:
            replies = list(pool.map(lambda jp: _call(jp[0], jp[1], retry, trace, lock),
                                    zip(backends.judges, judge_prompts)))
        trace.judge_replies = replies
        trace.judge_verdicts = [parse_verdict(r) for r in replies]
        if "errors_exist" in trace.judge_verdicts:
            trace.reflector_invoked = True
            rp = build_reflector_prompt(query, reference_information, trace.reasoner_think, trace.reasoner_answer)
            trace.reflection_content, trace.final_answer = split_reflector_reply(
                _call(backends.reflector, rp, retry, trace, lock))
        else:
            trace.final_answer = trace.reasoner_answer
    except (TransportError, BackendError, ValueError) as exc:
        trace.error = f"{type(exc).__name__}: {exc}"
    return trace


@dataclass(frozen=True)
class SftExample:
    query_id: str
    prompt: str
    completion: str
    branch: str
    accounting: dict

    @property
    def text(self) -> str:
        return self.prompt + self.completion

    def to_json(self) -> dict:
        return {"query_id": self.query_id, "prompt": self.prompt, "completion": self.completion,
                "branch": self.branch, "accounting": self.accounting}


def build_sft_example(trace: MasTrace) -> SftExample:
    """Concatenate reasoning, the reflection block and the final answer."""
    if trace.error is not None:
        raise IncompleteTraceError(f"trace failed: {trace.error}")
    if not trace.reasoner_think.strip():
        raise IncompleteTraceError("trace has no reasoning content")
    if not trace.final_answer.strip():
        raise IncompleteTraceError("trace has no final answer")
    if len(trace.judge_verdicts) != 2:
        raise IncompleteTraceError("trace needs two judge verdicts")
    if trace.reflector_invoked:
        if not trace.reflection_content:
            raise IncompleteTraceError("reflector invoked but produced no reflection")
        reflection, branch = trace.reflection_content, "reflected"
    else:
        reflection, branch = NO_ERRORS, "no_errors"
    if any(THINK_CLOSE in s for s in (trace.reasoner_think, reflection)):
        raise IncompleteTraceError("reasoning or reflection contains a closing think tag")
    completion = ("<think>" + trace.reasoner_think + REFLECTION_PROMPT + reflection + REFLECTION_CLOSER
                  + THINK_CLOSE + trace.final_answer)
    accounting = {
        "calls": len(trace.accounting),
        "prompt_tokens": sum(c.prompt_tokens for c in trace.accounting),
        "completion_tokens": sum(c.completion_tokens for c in trace.accounting),
        "seconds": round(sum(c.seconds for c in trace.accounting), 6),
    }
    return SftExample(trace.query_id, trace.reasoner_prompt, completion, branch, accounting)


# ---------------------------------------------------------------------------
# dataset generation


def _completed_ids(path: Path) -> set[str]:
    """Ids already written; drops a trailing partial line left by an interrupted run."""
    if not path.exists():
        return set()
    lines = path.read_text(encoding="utf-8").splitlines(keepends=True)
    good, ids = [], set()
    for line in lines:
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            break
        if not line.endswith("\n"):
            break
        ids.add(rec["query_id"])
        good.append(line)
    if len(good) != len(lines):
        log.warning("%s: dropping %d unreadable trailing line(s)", path, len(lines) - len(good))
        path.write_text("".join(good), encoding="utf-8")
    return ids


def generate_dataset(
    queries: Sequence[tuple[Query, dict]],
    backends: Backends,
    out_path: str | Path,
    jobs: int = 1,
    traces_path: str | Path | None = None,
    retry: RetryPolicy | None = None,
) -> dict:
    """Write one SFT example per query to JSONL, skipping ids already present."""
    out_path = Path(out_path)
    done = _completed_ids(out_path)
    todo = [(q, ref) for q, ref in queries if q.query_id not in done]
    written = failed = 0

    def work(item):
        q, ref = item
        return run_mas(q, ref, backends, retry)

    with open(out_path, "a", encoding="utf-8") as out, \
            (open(traces_path, "a", encoding="utf-8") if traces_path else _Null()) as tr, \
            ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        for trace in pool.map(work, todo):
            tr.write(json.dumps(trace.to_json(), ensure_ascii=False) + "\n")
            try:
                ex = build_sft_example(trace)
            except IncompleteTraceError as exc:
                log.warning("query %s skipped: %s", trace.query_id, exc)
                failed += 1
                continue
            out.write(json.dumps(ex.to_json(), ensure_ascii=False) + "\n")
            out.flush()
            written += 1
    return {**summarize_dataset(out_path), "written": written, "skipped_existing": len(queries) - len(todo),
            "failed": failed}


def summarize_dataset(path: str | Path) -> dict:
    branches = {"reflected": 0, "no_errors": 0}
    tokens = {"prompt_tokens": 0, "completion_tokens": 0}
    n = 0
    for rec in read_jsonl(path):
        n += 1
        branches[rec["branch"]] += 1
        for k in tokens:
            tokens[k] += rec["accounting"][k]
    return {"size": n, "branches": branches, "tokens": tokens}


def read_jsonl(path: str | Path) -> Iterable[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)


class _Null:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    def write(self, _s: str) -> None:
        pass
