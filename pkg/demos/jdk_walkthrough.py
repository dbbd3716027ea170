"""Walk through the thread-container example.

Shows how the constant returned by ``isVirtual`` empties the ``!=``
filter, which keeps the ``remove`` call disabled, and compares the
result against the baseline analysis.

    python3 demos/jdk_walkthrough.py
"""

from skipflow import analyze, analyze_baseline, load_corpus
from skipflow.dot import to_dot
from skipflow.ir import MethodRef
from skipflow.lattice import render

ON_EXIT = MethodRef("SharedThreadContainer", "onExit")
IS_VIRTUAL = MethodRef("Thread", "isVirtual")


def show(res, method, origin, what):
    f = res.flow(method, origin)
    flag = "enabled" if res.is_enabled(f) else "disabled"
    print(f"  {what:<28} {render(res.state(f)):<12} {flag}")


def main():
    program = load_corpus("jdk_onexit")
    sf = analyze(program)
    bl = analyze_baseline(program)
    for res in (sf, bl):
        print(f"{res.mode}:")
        show(res, IS_VIRTUAL, ("return",), "isVirtual() result")
        show(res, ON_EXIT, ("stmt", "b0", 1), "v = thread.isVirtual()")
        show(res, ON_EXIT, ("filter", "b0", "else", "l"), "v on the != branch")
        show(res, ON_EXIT, ("stmt", "b2", 0), "set = this.virtualThreads")
        show(res, ON_EXIT, ("stmt", "b2", 1), "set.remove(thread)")
        print(f"  reachable: {', '.join(res.reachable_sorted())}")
        print()
    print("only under baseline:", sorted(str(m) for m in bl.reachable - sf.reachable))
    print()
    print(to_dot(sf.graph, [ON_EXIT], sf, name="onExit"))


if __name__ == "__main__":
    main()
