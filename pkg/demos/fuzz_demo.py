"""Differential check on a handful of generated programs.

Prints one generated program, runs the interpreter on it, then fuzzes a
batch with the real solver and with the predicate rule switched off.

    python3 demos/fuzz_demo.py [N]
"""

import sys

from skipflow import analyze
from skipflow.oracle import check_subsumption, gen_program, interpret, run_fuzz
from skipflow.solver import SolverConfig
from skipflow.text import format_program


def main(n=50):
    p = gen_program(7, 5)
    print(format_program(p))
    tr = interpret(p, seed=0)
    print(f"executed {len(tr.executed_methods)} methods in {tr.step_count} steps, result {tr.result}")
    print(f"violations against skipflow: {check_subsumption(tr, analyze(p))}")
    print()
    ok = run_fuzz(n)
    print(f"{ok.jobs} programs, {ok.traces} traces: {len(ok.failures)} failing")
    broken = run_fuzz(n, config=SolverConfig(fault="no-predicate"))
    print(f"with the predicate rule disabled: {len(broken.failures)} of {broken.jobs} failing")
    if broken.failures:
        print(f"  first: seed {broken.failures[0].seed}: {broken.failures[0].problems[0]}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 50)
