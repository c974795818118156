"""Problem files in, certificate reports out: the batch interface that the
`flatcheck` command drives, used here through the library API.

Run:  python3 demos/05_problem_files_and_reports.py
"""

import json
import tempfile
from pathlib import Path

from flatcheck.cli import dumps_report, parse_problem, report_to_text, run

problem_data = {
    "label": "blow-up chart",
    "base_vars": ["y1", "y2"],
    "fiber_vars": ["x"],
    "presentation": [["y1*x - y2"]],
    "ideal_J": [],
    "order": 8,
    "seed": 0,
}

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "blowup.json"
    path.write_text(json.dumps(problem_data, indent=2))
    problem = parse_problem(path)

    print("== check: verdict with the full certificate chain ==")
    report, code = run("check", problem)
    print(report_to_text(report))
    print(f"exit code: {code}")

    print()
    print("== flattener: level ideals, total, verification ==")
    report, code = run("flattener", problem)
    print(report_to_text(report))

    print()
    print("== validate: engine against the independent oracle ==")
    report, code = run("validate", problem)
    print(report_to_text(report))

    print()
    print("== machine-readable reports are deterministic byte for byte ==")
    a = dumps_report(run("check", problem)[0])
    b = dumps_report(run("check", problem)[0])
    print(f"two runs, identical bytes: {a == b}; report size: {len(a)} bytes")
    print()
    print("the same commands are available on the command line:")
    print("  flatcheck check --input blowup.json --json report.json")
    print("  flatcheck corpus        # replay the bundled golden examples")
