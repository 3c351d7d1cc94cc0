"""Command-line entry point: ``imagine <subcommand> [--config FILE] ...``.

Every subcommand exits 0 on success.  Failures print one JSON object
``{"error": <kind>, "message": <text>}`` to stderr and exit non-zero.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from . import evaluator, query_gen
from .config import BackendConfig, PipelineConfig, load_config
from .mas import backends as be
from .mas.oracle import OracleJudge, OracleReasoner, OracleReflector
from .mas.orchestrator import Backends, MasTrace, build_sft_example, generate_dataset, read_jsonl, summarize_dataset
from .report import criteria_csv, criteria_table
from .reward import compute_reward
from .sandbox import SandboxError, generate_sandbox, load_sandbox, save_sandbox
from .train import GrpoConfig, ToyPlanEnv, grpo_train_demo, write_training_log

log = logging.getLogger("imagine")


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int = 1) -> None:
        super().__init__(message)
        self.kind, self.code = kind, code


def _need(path: str | None, what: str) -> Path:
    if not path:
        raise CliError("missing_input", f"--{what} is required")
    p = Path(path)
    if not p.exists():
        raise CliError("missing_input", f"{what} file not found: {p}")
    return p


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def load_queries(path: Path) -> list[tuple[query_gen.Query, dict]]:
    return [(query_gen.Query.from_json(r), r.get("reference_information") or {}) for r in read_jsonl(path)]


def load_responses(path: Path) -> dict[str, str]:
    out = {}
    for r in read_jsonl(path):
        text = r.get("completion", r.get("response"))
        if text is None:
            raise CliError("bad_input", f"response record {r.get('query_id')!r} has no completion/response field")
        out[r["query_id"]] = text
    return out


def _make_backend(role: str, bc: BackendConfig, sandbox):
    if bc.kind == "oracle":
        return {"reasoner": OracleReasoner, "judge": OracleJudge, "reflector": OracleReflector}[role](sandbox)
    if bc.kind == "http":
        if not bc.url or not bc.model:
            raise CliError("config", f"{role}: http backend needs url and model", 2)
        return be.HttpChatBackend(role, bc.url, bc.model, bc.api_key_env, bc.timeout)
    if not bc.replies_file:
        raise CliError("config", f"{role}: scripted backend needs replies_file", 2)
    return be.ScriptedBackend(role, json.loads(Path(bc.replies_file).read_text(encoding="utf-8")))


def make_backends(cfg: PipelineConfig, sandbox) -> Backends:
    return Backends(
        reasoner=_make_backend("reasoner", cfg.mas.reasoner, sandbox),
        judges=tuple(_make_backend("judge", j, sandbox) for j in cfg.mas.judges),
        reflector=_make_backend("reflector", cfg.mas.reflector, sandbox),
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_sandbox(args, cfg: PipelineConfig) -> None:
    sb = generate_sandbox(cfg.sandbox.seed, cfg.sandbox.profile)
    if args.out:
        save_sandbox(sb, args.out)
    else:
        sys.stdout.write(sb.dumps())


def cmd_gen_queries(args, cfg: PipelineConfig) -> None:
    sb = load_sandbox(_need(args.sandbox, "sandbox"))
    existing = set()
    if args.existing:
        existing = {q.dedup_key() for q, _ in load_queries(_need(args.existing, "existing"))}
    qc = cfg.queries
    gen_cfg = query_gen.QueryGenConfig(people_choices=tuple(qc.people_choices),
                                       infeasible_fraction=qc.infeasible_fraction)
    if qc.level_mix:
        gen_cfg.level_mix = {(int(k.split(":")[0]), k.split(":")[1]): w for k, w in qc.level_mix.items()}
    try:
        pairs = query_gen.generate_queries(sb, qc.count, qc.seed, existing, gen_cfg)
    except query_gen.ExhaustionError as exc:
        raise CliError("exhausted", str(exc)) from None
    _write(args.out, "".join(json.dumps(q.to_json(ref), ensure_ascii=False) + "\n" for q, ref in pairs))


def cmd_run_mas(args, cfg: PipelineConfig) -> None:
    sb = load_sandbox(_need(args.sandbox, "sandbox"))
    queries = load_queries(_need(args.queries, "queries"))
    if not args.out:
        raise CliError("missing_input", "--out is required")
    retry = be.RetryPolicy(cfg.mas.retries, cfg.mas.backoff_seconds)
    summary = generate_dataset(queries, make_backends(cfg, sb), args.out, jobs=cfg.jobs,
                               traces_path=args.traces, retry=retry)
    print(json.dumps(summary, sort_keys=True))


def cmd_build_sft(args, cfg: PipelineConfig) -> None:
    lines, failed = [], 0
    for rec in read_jsonl(_need(args.traces, "traces")):
        try:
            ex = build_sft_example(MasTrace.from_json(rec))
        except ValueError as exc:
            log.warning("skipping %s: %s", rec.get("query_id"), exc)
            failed += 1
            continue
        lines.append(json.dumps(ex.to_json(), ensure_ascii=False) + "\n")
    _write(args.out, "".join(lines))
    if args.out:
        print(json.dumps({**summarize_dataset(args.out), "failed": failed}, sort_keys=True))


def cmd_eval(args, cfg: PipelineConfig) -> None:
    sb = load_sandbox(_need(args.sandbox, "sandbox"))
    queries = load_queries(_need(args.queries, "queries"))
    responses = load_responses(_need(args.responses, "responses"))
    vacuous = cfg.reward.count_vacuous_hard
    reports = [evaluator.evaluate(sb, q, responses.get(q.query_id, ""), vacuous) for q, _ in queries]
    batch = evaluator.aggregate(reports)
    _write(args.out, evaluator.batch_json(batch) + "\n")
    if args.csv:
        _write(args.csv, batch.to_csv())
    if args.out:
        print(json.dumps(batch.criteria()))


def cmd_reward(args, cfg: PipelineConfig) -> None:
    sb = load_sandbox(_need(args.sandbox, "sandbox"))
    queries = {q.query_id: q for q, _ in load_queries(_need(args.queries, "queries"))}
    lines = []
    for rec in read_jsonl(_need(args.responses, "responses")):
        q = queries.get(rec["query_id"])
        if q is None:
            raise CliError("bad_input", f"unknown query_id {rec['query_id']!r}")
        text = rec.get("completion", rec.get("response", ""))
        r = compute_reward(sb, q, text, cfg.reward.count_vacuous_hard)
        lines.append(json.dumps({"query_id": q.query_id, **r.to_json()}) + "\n")
    _write(args.out, "".join(lines))


def cmd_grpo_demo(args, cfg: PipelineConfig) -> None:
    g = cfg.grpo
    gc = GrpoConfig(g.group_size, g.clip_eps, g.learning_rate, g.std_floor, g.seed, g.inner_steps, g.pooled_tokens)
    log_rows = grpo_train_demo(ToyPlanEnv(g.n_contexts, g.seed), gc, g.steps)
    if args.out:
        write_training_log(log_rows, args.out)
    first = sum(r["mean_reward"] for r in log_rows[:20]) / min(20, len(log_rows))
    last = sum(r["mean_reward"] for r in log_rows[-20:]) / min(20, len(log_rows))
    print(json.dumps({"steps": len(log_rows), "leading_mean_reward": first, "trailing_mean_reward": last}))


def cmd_report(args, cfg: PipelineConfig) -> None:
    rows = []
    for entry in args.reports:
        name, sep, path = entry.partition("=")
        if not sep:
            name, path = Path(entry).stem, entry
        data = json.loads(_need(path, "report").read_text(encoding="utf-8"))
        rows.append((name, data["criteria"]))
    table = criteria_table(rows)
    if args.out:
        _write(args.out + ".csv", criteria_csv(rows))
        _write(args.out + ".txt", table)
    sys.stdout.write(table)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML pipeline config")
    common.add_argument("--seed", type=int, help="override the seed of this step")
    common.add_argument("--jobs", type=int, help="parallel workers")
    common.add_argument("--out", help="output path (stdout when omitted)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="imagine", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-sandbox", parents=[common], help="generate a synthetic sandbox")
    s.add_argument("--profile", choices=("tiny", "standard"))
    s.set_defaults(fn=cmd_gen_sandbox)

    s = sub.add_parser("gen-queries", parents=[common], help="generate deduplicated queries as JSONL")
    s.add_argument("--sandbox")
    s.add_argument("--count", type=int)
    s.add_argument("--existing", help="JSONL of queries that new ones must not duplicate")
    s.set_defaults(fn=cmd_gen_queries)

    s = sub.add_parser("run-mas", parents=[common], help="run the multi-agent protocol and write SFT JSONL")
    s.add_argument("--sandbox")
    s.add_argument("--queries")
    s.add_argument("--traces", help="also append full traces to this JSONL")
    s.set_defaults(fn=cmd_run_mas)

    s = sub.add_parser("build-sft", parents=[common], help="rebuild SFT JSONL from traces")
    s.add_argument("--traces")
    s.set_defaults(fn=cmd_build_sft)

    s = sub.add_parser("eval", parents=[common], help="evaluate responses, write a batch report")
    s.add_argument("--sandbox")
    s.add_argument("--queries")
    s.add_argument("--responses", help="JSONL with query_id and completion (or response)")
    s.add_argument("--csv", help="per-query CSV with one column per check")
    s.set_defaults(fn=cmd_eval)

    s = sub.add_parser("reward", parents=[common], help="score responses, one reward breakdown per line")
    s.add_argument("--sandbox")
    s.add_argument("--queries")
    s.add_argument("--responses")
    s.set_defaults(fn=cmd_reward)

    s = sub.add_parser("grpo-demo", parents=[common], help="train the toy policy with GRPO, write a CSV log")
    s.add_argument("--steps", type=int)
    s.add_argument("--lr", type=float)
    s.set_defaults(fn=cmd_grpo_demo)

    s = sub.add_parser("report", parents=[common], help="render batch reports as CSV and a text table")
    s.add_argument("reports", nargs="+", help="report JSON files, optionally as name=path")
    s.set_defaults(fn=cmd_report)
    return p


def _apply_overrides(args, cfg: PipelineConfig) -> PipelineConfig:
    data = cfg.model_dump()
    cmd = args.command
    if args.jobs is not None:
        data["jobs"] = args.jobs
    if args.seed is not None:
        section = {"gen-sandbox": "sandbox", "gen-queries": "queries", "grpo-demo": "grpo"}.get(cmd)
        if section is None:
            raise CliError("usage", f"--seed has no effect on {cmd}", 2)
        data[section]["seed"] = args.seed
    if cmd == "gen-sandbox" and args.profile:
        data["sandbox"]["profile"] = args.profile
    if cmd == "gen-queries" and args.count is not None:
        data["queries"]["count"] = args.count
    if cmd == "grpo-demo":
        if args.steps is not None:
            data["grpo"]["steps"] = args.steps
        if args.lr is not None:
            data["grpo"]["learning_rate"] = args.lr
    return PipelineConfig.model_validate(data)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _apply_overrides(args, load_config(args.config))
        args.fn(args, cfg)
    except CliError as exc:
        return _fail(exc.kind, str(exc), exc.code)
    except ValidationError as exc:
        return _fail("config", str(exc), 2)
    except SandboxError as exc:
        return _fail("sandbox", str(exc), 1)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    return 0


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
