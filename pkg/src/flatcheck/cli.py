"""Batch interface: problem files in, certificate reports out.

Problems are single JSON documents declaring base/fiber variables, the
presentation matrix as polynomial strings, the ideal J (base variables
only), the jet order and a seed.  Reports embed the full certificate chain
(block choices, permutations, g per level, witnesses, reduction shapes) so
a reviewer can replay the construction by hand; the machine-readable form
is deterministic byte for byte given problem + order + seed (timings go to
the human stream only).

Exit codes: 0 verdict produced, 1 inconclusive, 2 input error, 3 internal
invariant failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .criterion import (CertificateStep, EngineConfig, FlatnessVerdict,
                        Presentation, check_flat, describe_psi)
from .flattener import flattener_ideal, verify_flattener
from .oracle import OracleInternalError, OracleVerdict, cross_validate, direct_flatness_test
from .ringlinalg import Ideal, SeriesMatrix, make_ideal
from .series import (ParseError, PrecisionError, RegularityError, SeriesError,
                     VarSplit, parse_series)

__all__ = ["ProblemFile", "InputError", "parse_problem", "run", "main",
           "SCHEMA_VERSION", "EXIT_OK", "EXIT_INCONCLUSIVE", "EXIT_INPUT",
           "EXIT_INTERNAL"]

SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_INCONCLUSIVE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

COMMANDS = ("check", "flattener", "oracle", "validate", "corpus")


class InputError(ValueError):
    """Problem file rejected; the message carries position details."""


@dataclass(frozen=True)
class ProblemFile:
    label: str
    base_vars: tuple[str, ...]
    fiber_vars: tuple[str, ...]
    presentation: tuple[tuple[str, ...], ...]
    ideal_J: tuple[str, ...]
    order: int
    seed: int

    def split(self) -> VarSplit:
        return VarSplit(len(self.base_vars), len(self.fiber_vars),
                        self.base_vars, self.fiber_vars)

    def to_problem(self) -> tuple[Presentation, Ideal, EngineConfig]:
        split = self.split()
        entries = [[parse_series(text, split) for text in row]
                   for row in self.presentation]
        pres = Presentation(split, SeriesMatrix(split, entries), self.label)
        base = split.base_only()
        J = make_ideal([parse_series(text, base) for text in self.ideal_J])
        return pres, J, EngineConfig(order=self.order, seed=self.seed)


def _expect(cond: bool, message: str):
    if not cond:
        raise InputError(message)


def parse_problem(path: str | Path) -> ProblemFile:
    """Load and validate a problem file; errors carry line/column data."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno}, "
                         f"column {exc.colno}: {exc.msg}") from exc
    _expect(isinstance(raw, dict), f"{path}: top level must be an object")
    for key in ("base_vars", "fiber_vars", "presentation"):
        _expect(key in raw, f"{path}: missing required field {key!r}")
    base_vars = raw["base_vars"]
    fiber_vars = raw["fiber_vars"]
    _expect(isinstance(base_vars, list) and all(isinstance(v, str) for v in base_vars),
            f"{path}: base_vars must be a list of names")
    _expect(isinstance(fiber_vars, list) and all(isinstance(v, str) for v in fiber_vars),
            f"{path}: fiber_vars must be a list of names")
    names = list(base_vars) + list(fiber_vars)
    _expect(len(set(names)) == len(names), f"{path}: variable names must be distinct")
    matrix = raw["presentation"]
    _expect(isinstance(matrix, list) and matrix and all(isinstance(r, list) for r in matrix),
            f"{path}: presentation must be a nonempty list of rows")
    width = len(matrix[0])
    _expect(width > 0 and all(len(r) == width for r in matrix),
            f"{path}: presentation rows must be nonempty and of equal length")
    ideal = raw.get("ideal_J", [])
    _expect(isinstance(ideal, list) and all(isinstance(s, str) for s in ideal),
            f"{path}: ideal_J must be a list of polynomial strings")
    order = raw.get("order", 8)
    _expect(isinstance(order, int) and order >= 1, f"{path}: order must be an integer >= 1")
    seed = raw.get("seed", 0)
    _expect(isinstance(seed, int), f"{path}: seed must be an integer")
    label = raw.get("label", path.stem)
    _expect(isinstance(label, str), f"{path}: label must be a string")

    split = VarSplit(len(base_vars), len(fiber_vars), tuple(base_vars), tuple(fiber_vars))
    for i, row in enumerate(matrix):
        for j, cell in enumerate(row):
            _expect(isinstance(cell, str), f"{path}: presentation[{i}][{j}] must be a string")
            try:
                parse_series(cell, split)
            except ParseError as exc:
                raise InputError(f"{path}: presentation[{i}][{j}]: {exc}") from exc
    base = split.base_only()
    for k, cell in enumerate(ideal):
        try:
            parse_series(cell, base)
        except ParseError as exc:
            if exc.token and exc.token in fiber_vars:
                raise InputError(f"{path}: ideal_J[{k}]: J must use base variables only "
                                 f"(found {exc.token!r})") from exc
            raise InputError(f"{path}: ideal_J[{k}]: {exc}") from exc
    return ProblemFile(label=label, base_vars=tuple(base_vars),
                       fiber_vars=tuple(fiber_vars),
                       presentation=tuple(tuple(r) for r in matrix),
                       ideal_J=tuple(ideal), order=order, seed=seed)


def problem_to_json(problem: ProblemFile) -> dict:
    return {
        "label": problem.label,
        "base_vars": list(problem.base_vars),
        "fiber_vars": list(problem.fiber_vars),
        "presentation": [list(r) for r in problem.presentation],
        "ideal_J": list(problem.ideal_J),
        "order": problem.order,
        "seed": problem.seed,
    }


# ---------------------------------------------------------------------------
# report assembly


def _matrix_json(mat: SeriesMatrix) -> list[list[str]]:
    return [[str(e) for e in row] for row in mat.entries]


def _step_json(step: CertificateStep) -> dict:
    out = {
        "level": step.level,
        "fiber_dim": step.fiber_dim,
        "shape": [step.q, step.p],
        "r": step.r,
        "g": step.g_summary,
        "g_is_unit": step.g_is_unit,
        "order": step.order,
    }
    if step.decomposition is not None:
        out["row_order"] = list(step.decomposition.row_order)
        out["col_order"] = list(step.decomposition.col_order)
        out["psi"] = describe_psi(step.decomposition)
    if step.cond1 is not None:
        entries = []
        for i, j, verdict in step.cond1.entries:
            item = {"entry": [i, j], "status": verdict.status, "exact": verdict.exact}
            if verdict.order is not None:
                item["order"] = verdict.order
            if verdict.witness is not None:
                item["witness"] = {
                    "fiber_exponent": list(verdict.witness.fiber_exponent),
                    "coefficient": str(verdict.witness.coefficient),
                    "jet_order": verdict.witness.jet_order,
                }
            entries.append(item)
        out["condition1"] = {"passed": step.cond1.passed, "entries": entries}
    if step.reduction is not None:
        red = step.reduction
        out["reduction"] = {
            "d": red.d,
            "change_seed": red.change.seed,
            "change_matrix": [[str(v) for v in row] for row in red.change.matrix],
            "unit": str(red.wdata.unit),
            "distinguished": str(red.wdata.distinguished),
            "g_matrix_shape": [red.g_matrix.rows, red.g_matrix.cols],
            "g_matrix": _matrix_json(red.g_matrix),
            "effective_order": ("exact" if red.effective_order is None
                                else red.effective_order),
        }
    return out


def _verdict_json(verdict: FlatnessVerdict) -> dict:
    out = {
        "status": verdict.status,
        "certified_order": verdict.certified_order,
        "chain": [_step_json(s) for s in verdict.chain],
    }
    if verdict.witness is not None:
        w = verdict.witness
        out["witness"] = {
            "level": w.level,
            "entry": list(w.entry),
            "fiber_exponent": list(w.fiber_exponent),
            "coefficient": str(w.coefficient),
            "ideal": w.ideal,
        }
    if verdict.reason is not None:
        out["reason"] = verdict.reason
    return out


def _oracle_json(verdict: OracleVerdict) -> dict:
    out = {
        "status": verdict.status,
        "order": verdict.order,
        "window": verdict.window,
        "guard": verdict.guard,
    }
    if verdict.dim_origin is not None:
        out["dim_origin_kernel"] = verdict.dim_origin
        out["dim_evaluated_kernel"] = verdict.dim_evaluated
    if verdict.witness is not None:
        out["witness"] = [str(s) for s in verdict.witness]
    if verdict.reason is not None:
        out["reason"] = verdict.reason
    return out


def _run_check(pres, J, config) -> tuple[dict, int]:
    verdict = check_flat(pres, J, config)
    code = EXIT_OK if verdict.conclusive else EXIT_INCONCLUSIVE
    return _verdict_json(verdict), code


def _run_flattener(pres, J, config) -> tuple[dict, int]:
    try:
        result = flattener_ideal(pres, config)
    except (PrecisionError, RegularityError) as exc:
        return {"status": "inconclusive", "reason": str(exc)}, EXIT_INCONCLUSIVE
    report = verify_flattener(pres, result, config)
    out = {
        "levels": [{"level": lvl, "generators": [str(g) for g in ideal.generators],
                    "kind": ideal.kind}
                   for lvl, ideal in result.levels],
        "total": {"generators": [str(g) for g in result.total.generators],
                  "kind": result.total.kind},
        "effective_order": result.effective_order,
        "verify": {
            "restriction_status": report.restriction.status,
            "universality": report.universality,
            "probes": [{"dropped_generator": p.dropped_generator,
                        "comparison_ideal": p.comparison_ideal,
                        "skipped": p.skipped,
                        "verdict": p.verdict} for p in report.probes],
        },
    }
    if not report.ok:
        return out, EXIT_INTERNAL
    return out, EXIT_OK


def _run_oracle(pres, J, config) -> tuple[dict, int]:
    verdict = direct_flatness_test(pres, J, config)
    code = EXIT_OK if verdict.conclusive else EXIT_INCONCLUSIVE
    return _oracle_json(verdict), code


def _run_validate(pres, J, config) -> tuple[dict, int]:
    cv = cross_validate(pres, J, config)
    out = {
        "engine": _verdict_json(cv.engine),
        "oracle": _oracle_json(cv.oracle),
        "agreement": cv.agreement,
        "rank_equality": cv.rank_equality,
        "g_oracle": _oracle_json(cv.g_oracle) if cv.g_oracle is not None else None,
        "proposition_consistent": cv.proposition_consistent,
        "ok": cv.ok,
    }
    if not cv.ok:
        return out, EXIT_INTERNAL
    if not (cv.engine.conclusive and cv.oracle.conclusive):
        return out, EXIT_INCONCLUSIVE
    return out, EXIT_OK


def run(command: str, problem: ProblemFile, order: Optional[int] = None,
        seed: Optional[int] = None) -> tuple[dict, int]:
    """Execute one command against a parsed problem; returns (report, exit code)."""
    if order is not None or seed is not None:
        problem = ProblemFile(label=problem.label, base_vars=problem.base_vars,
                              fiber_vars=problem.fiber_vars,
                              presentation=problem.presentation,
                              ideal_J=problem.ideal_J,
                              order=order if order is not None else problem.order,
                              seed=seed if seed is not None else problem.seed)
    pres, J, config = problem.to_problem()
    runners = {"check": _run_check, "flattener": _run_flattener,
               "oracle": _run_oracle, "validate": _run_validate}
    if command not in runners:
        raise InputError(f"unknown command {command!r}")
    try:
        result, code = runners[command](pres, J, config)
    except OracleInternalError as exc:
        result, code = {"status": "internal_error", "reason": str(exc)}, EXIT_INTERNAL
    report = {
        "schema": SCHEMA_VERSION,
        "command": command,
        "problem": problem_to_json(problem),
        "result": result,
    }
    return report, code


def report_to_text(report: dict) -> str:
    """Human-readable digest of a machine report."""
    command = report["command"]
    problem = report["problem"]
    result = report["result"]
    lines = [f"{problem['label']}: {command} at order {problem['order']} "
             f"(seed {problem['seed']})"]
    if command == "check":
        lines.append(f"  verdict: {result['status']} "
                     f"(certified order: {result.get('certified_order')})")
        if "witness" in result:
            w = result["witness"]
            lines.append(f"  witness: level {w['level']} entry {w['entry']} "
                         f"coefficient {w['coefficient']} outside J = {w['ideal']}")
        if "reason" in result:
            lines.append(f"  reason: {result['reason']}")
        for step in result["chain"]:
            red = step.get("reduction")
            extra = (f", reduce d={red['d']} -> G {red['g_matrix_shape']}"
                     if red else "")
            lines.append(f"  level {step['level']}: fiber dim {step['fiber_dim']}, "
                         f"r={step['r']}, g={step['g']}{extra}")
    elif command == "flattener":
        if result.get("status") == "inconclusive":
            lines.append(f"  inconclusive: {result['reason']}")
        else:
            gens = ", ".join(result["total"]["generators"]) or "0"
            lines.append(f"  flattener ideal: ({gens})  "
                         f"[order: {result['effective_order']}]")
            for lvl in result["levels"]:
                lines.append(f"  level {lvl['level']}: "
                             f"({', '.join(lvl['generators']) or '0'})")
            lines.append(f"  restriction: {result['verify']['restriction_status']}; "
                         f"universality: {result['verify']['universality']}")
    elif command == "oracle":
        lines.append(f"  verdict: {result['status']} (window {result.get('window')})")
        if "witness" in result:
            lines.append(f"  witness vector: ({', '.join(result['witness'])})")
    elif command == "validate":
        lines.append(f"  engine: {result['engine']['status']}, "
                     f"oracle: {result['oracle']['status']}, "
                     f"agreement: {result['agreement']}, ok: {result['ok']}")
    return "\n".join(lines)


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# golden corpus


def corpus_dir() -> Path:
    env = os.environ.get("FLATCHECK_CORPUS_DIR")
    if env:
        return Path(env)
    return Path(__file__).parent / "corpus"


CORPUS_COMMANDS = ("check", "flattener", "oracle", "validate")


def corpus_report(problem: ProblemFile) -> dict:
    """The composite report the corpus runner diffs against golden files."""
    reports = {}
    for command in CORPUS_COMMANDS:
        rep, code = run(command, problem)
        reports[command] = {"exit_code": code, "result": rep["result"]}
    return {"schema": SCHEMA_VERSION, "problem": problem_to_json(problem),
            "reports": reports}


def run_corpus(directory: Optional[Path] = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    directory = directory or corpus_dir()
    problems = sorted(directory.glob("*.problem.json"))
    if not problems:
        print(f"no *.problem.json files under {directory}", file=out)
        return EXIT_INPUT
    failures = 0
    for path in problems:
        expected_path = path.with_name(path.name.replace(".problem.json", ".expected.json"))
        try:
            problem = parse_problem(path)
        except InputError as exc:
            print(f"[error] {path.name}: {exc}", file=out)
            failures += 1
            continue
        actual = corpus_report(problem)
        if not expected_path.exists():
            print(f"[missing] {expected_path.name}: no golden file", file=out)
            failures += 1
            continue
        expected = json.loads(expected_path.read_text())
        if actual == expected:
            print(f"[ok] {path.name}", file=out)
        else:
            print(f"[diff] {path.name}: report deviates from {expected_path.name}", file=out)
            failures += 1
    if failures:
        print(f"{failures} corpus failure(s)", file=out)
        return EXIT_INTERNAL
    print(f"all {len(problems)} corpus problems green", file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="flatcheck",
        description="flatness verdicts, flattener ideals and oracle "
                    "cross-checks for finitely presented modules")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--input", help="problem file (JSON)")
    parser.add_argument("--order", type=int, help="override the jet order")
    parser.add_argument("--seed", type=int, help="override the seed")
    parser.add_argument("--json", dest="json_out", help="write the machine report here")
    args = parser.parse_args(argv)

    if args.command == "corpus":
        return run_corpus()

    if not args.input:
        print("error: --input is required for this command", file=sys.stderr)
        return EXIT_INPUT
    started = time.monotonic()
    try:
        problem = parse_problem(args.input)
        report, code = run(args.command, problem, order=args.order, seed=args.seed)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SeriesError, OracleInternalError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    elapsed = time.monotonic() - started
    print(report_to_text(report))
    print(f"  [{elapsed * 1000.0:.1f} ms]")
    if args.json_out:
        Path(args.json_out).write_text(dumps_report(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
