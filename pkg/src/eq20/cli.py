"""Command-line entry points: serve, play, train, eval, validate-kb, rank."""

from __future__ import annotations

import argparse
import json
import os
import string
import sys
from pathlib import Path

import numpy as np

from . import builtin_kb_path, load_builtin_kb
from .belief import BeliefState, CategoryTable, SmoothingConfig, normalize_prior
from .errors import Eq20Error, KBParseError, KBReferenceError, KBValidationError
from .evaluation import compare_policies, emit_report, self_play_eval
from .figures import save_eval_figures, save_training_curves
from .kb import KnowledgeBase, Question, load_kb_file, validate_identifiability
from .nets import load_network, save_network
from .ranking import RANKING_MODES, rank_questions
from .service import ServiceConfig, serve
from .session import (AWAITING, SessionConfig, get_result, start_session,
                      submit_answer)
from .training import MDPConfig, train

KB_ENV_VAR = "EQ20_KB_PATH"


def resolve_kb(path: str | None) -> KnowledgeBase:
    chosen = path or os.environ.get(KB_ENV_VAR)
    if chosen is None:
        return load_builtin_kb()
    return load_kb_file(chosen)


def default_category(kb: KnowledgeBase, requested: str | None) -> str:
    return requested or kb.categories[0].id


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eq20",
        description="Twenty-questions engine for cybersecurity concepts.")
    parser.add_argument("--kb", help="knowledge base file "
                        f"(default: ${KB_ENV_VAR} or the bundled one)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--model-dir", help="directory with trained .net files")
    p.add_argument("--session-ttl", type=float, default=3600.0)
    p.add_argument("--record-frequencies", action="store_true")
    p.add_argument("--log-path", help="append-only request event log")
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--max-turns", type=int, default=20)

    p = sub.add_parser("play", help="play one game in the terminal")
    p.add_argument("--category")
    p.add_argument("--policy", default="entropy-paper", choices=RANKING_MODES)
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--max-turns", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.add_argument("--text", default="", help="incident description")

    p = sub.add_parser("train", help="train policy, value, and reward nets")
    p.add_argument("--category")
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float, default=0.95)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--reward-alpha", type=float, default=1.0)
    p.add_argument("--reward-beta", type=float, default=1.0)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--eval-episodes", type=int, default=200)
    p.add_argument("--out", default="model", help="checkpoint directory")

    p = sub.add_parser("eval", help="self-play comparison of policies")
    p.add_argument("--category")
    p.add_argument("--policies", default="random,entropy-paper,entropy-infogain")
    p.add_argument("--episodes", type=int, default=500)
    p.add_argument("--noise", default="0.0")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model-dir", help="needed when policies include learned")
    p.add_argument("--out", default="eval_report.csv")

    p = sub.add_parser("validate-kb", help="schema and identifiability check")

    p = sub.add_parser("rank", help="print question weights for a belief")
    p.add_argument("--category")
    p.add_argument("--mode", default="entropy-paper",
                   choices=("entropy-paper", "entropy-infogain"))
    p.add_argument("--belief", help="comma-separated probabilities "
                   "(default: the normalized prior)")
    p.add_argument("--asked", default="", help="comma-separated question ids")
    return parser


# ---------------------------------------------------------------------- play

def _parse_selection(raw: str, question: Question) -> tuple[str, ...] | None:
    letters = {string.ascii_uppercase[i]: oid
               for i, (oid, _) in enumerate(question.options)}
    ids = {oid for oid, _ in question.options}
    chosen: list[str] = []
    for token in raw.replace(",", " ").split():
        token = token.strip()
        if token.upper() in letters:
            chosen.append(letters[token.upper()])
        elif token in ids:
            chosen.append(token)
        else:
            return None
    return tuple(dict.fromkeys(chosen)) or None


def _print_question(question: Question, number: int) -> None:
    print(f"\nQ{number}. {question.text}")
    for i, (_, text) in enumerate(question.options):
        print(f"  {string.ascii_uppercase[i]}) {text}")


def cmd_play(kb: KnowledgeBase, args) -> int:
    cfg = SessionConfig(category=default_category(kb, args.category),
                        policy_kind=args.policy,
                        confidence_threshold=args.threshold,
                        max_turns=args.max_turns, seed=args.seed)
    session, question = start_session(kb, args.text, cfg)
    while session.status == AWAITING:
        _print_question(question, session.belief.turn + 1)
        selected = None
        for _ in range(3):
            try:
                raw = input("> ")
            except EOFError:
                print("\nNo input; leaving the game.")
                return 2
            selected = _parse_selection(raw, question)
            if selected is not None:
                break
            print("Pick one of the listed letters (e.g. A, or A,B for several).")
        if selected is None:
            print("Three invalid selections; giving up.")
            return 1
        outcome = submit_answer(session, question.id, selected)
        if isinstance(outcome, Question):
            question = outcome
    result = get_result(session)
    print(f"\nVerdict: {result.name} (confidence {result.confidence:.2f}, "
          f"{result.status})")
    print(f"\n{result.explanation.text}\n")
    print("Turn  Jump      Question / answer")
    for row in result.explanation.trace:
        q = kb.question(row.question_id)
        answers = ", ".join(q.option_text(oid) for oid in row.selected)
        marker = " *" if row.question_id == result.explanation.pivotal_question else ""
        print(f"{row.turn + 1:4d}  {row.jump:+.4f}   {q.text} -> {answers}{marker}")
    return 0


# --------------------------------------------------------------------- train

def cmd_train(kb: KnowledgeBase, args) -> int:
    category = default_category(kb, args.category)
    cfg = MDPConfig(category=category, epochs=args.epochs, seed=args.seed,
                    gamma=args.gamma, kappa=args.kappa,
                    reward_alpha=args.reward_alpha, reward_beta=args.reward_beta,
                    batch_size=args.batch_size, learning_rate=args.lr,
                    noise_prob=args.noise)
    if args.epochs == 0:
        print("warning: --epochs 0 writes untrained checkpoints", file=sys.stderr)
    bundle, log = train(kb, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_network(bundle.policy, out / "policy.net")
    save_network(bundle.value, out / "value.net")
    save_network(bundle.reward, out / "reward.net")
    log_path = out / "training_log.jsonl"
    with open(log_path, "w", encoding="utf-8") as fh:
        for record in log:
            fh.write(json.dumps(record.as_dict()) + "\n")
    if log:
        save_training_curves(log, out / "training_curves.png")
    report = self_play_eval(kb, category, "learned", episodes=args.eval_episodes,
                            seed=args.seed, net=bundle.policy)
    final = {"final": True, "episodes": report.episodes,
             "success_rate": report.success_rate,
             "mean_turns": report.mean_turns}
    with open(log_path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(final) + "\n")
    print(f"checkpoints in {out}/ (policy.net, value.net, reward.net)")
    print(f"final: success_rate={report.success_rate:.3f} "
          f"mean_turns={report.mean_turns:.2f}")
    return 0


# ---------------------------------------------------------------------- eval

def cmd_eval(kb: KnowledgeBase, args) -> int:
    category = default_category(kb, args.category)
    kinds = [k.strip() for k in args.policies.split(",") if k.strip()]
    noises = [float(n) for n in args.noise.split(",")]
    net = None
    if "learned" in kinds:
        if not args.model_dir:
            print("error: learned policy needs --model-dir", file=sys.stderr)
            return 1
        net = load_network(Path(args.model_dir) / "policy.net")
    if len(kinds) == 1:
        reports = [self_play_eval(kb, category, kinds[0], args.episodes,
                                  noise_prob=n, seed=args.seed, net=net)
                   for n in noises]
    else:
        reports = compare_policies(kb, category, kinds, args.episodes,
                                   noise_grid=noises, seed=args.seed, net=net)
    emit_report(reports, args.out)
    figures = save_eval_figures(reports, str(Path(args.out).with_suffix("")))
    print(f"wrote {args.out} and " + ", ".join(figures))
    for r in reports:
        print(f"{r.policy_kind:18s} noise={r.noise_prob:<4g} "
              f"success={r.success_rate:.3f} mean_turns={r.mean_turns:.2f}")
    return 0


# ---------------------------------------------------------------- validate-kb

def cmd_validate_kb(args) -> int:
    chosen = args.kb or os.environ.get(KB_ENV_VAR)
    try:
        if chosen is None:
            kb = load_builtin_kb()
            chosen = str(builtin_kb_path())
        else:
            kb = load_kb_file(chosen)
    except (KBParseError, KBReferenceError, KBValidationError, OSError) as err:
        print(f"invalid: {err}")
        return 1
    print(f"{chosen}: schema ok "
          f"({len(kb.concepts)} concepts, {len(kb.questions)} questions)")
    clashes = []
    for category in kb.categories:
        pairs = validate_identifiability(kb, category.id)
        clashes.extend((category.id, a, b) for a, b in pairs)
    if clashes:
        print("identifiable: no")
        for category, a, b in clashes:
            print(f"  {category}: {a} and {b} share every reference answer")
        return 3
    print("identifiable: yes")
    return 0


# ---------------------------------------------------------------------- rank

def cmd_rank(kb: KnowledgeBase, args) -> int:
    category = default_category(kb, args.category)
    table = CategoryTable(kb, category, SmoothingConfig())
    if args.belief:
        probs = np.array([float(x) for x in args.belief.split(",")])
        if len(probs) != table.size:
            print(f"error: belief needs {table.size} entries", file=sys.stderr)
            return 1
        state = normalize_prior(probs)
    else:
        state = normalize_prior(table.prior_weights)
    asked = {q.strip() for q in args.asked.split(",") if q.strip()}
    ranking = rank_questions(table, state, asked, args.mode)
    for question_id, weight in ranking.entries:
        print(f"{weight:+.6f}  {question_id}  {kb.question(question_id).text}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate-kb":
        return cmd_validate_kb(args)
    try:
        kb = resolve_kb(args.kb)
    except (Eq20Error, OSError) as err:
        print(f"error: cannot load knowledge base: {err}", file=sys.stderr)
        return 1
    try:
        if args.command == "serve":
            serve(kb, ServiceConfig(
                host=args.host, port=args.port, kb_path=args.kb,
                model_dir=args.model_dir, session_ttl=args.session_ttl,
                record_frequencies=args.record_frequencies,
                log_path=args.log_path,
                confidence_threshold=args.threshold,
                max_turns=args.max_turns))
            return 0
        if args.command == "play":
            return cmd_play(kb, args)
        if args.command == "train":
            return cmd_train(kb, args)
        if args.command == "eval":
            return cmd_eval(kb, args)
        if args.command == "rank":
            return cmd_rank(kb, args)
    except Eq20Error as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
