"""Compare both analyses on the renderer example and print the metric table.

    python3 demos/sunflow_compare.py
"""

from skipflow import analyze, analyze_baseline, compute_metrics, load_corpus
from skipflow.ir import MethodRef


def main():
    program = load_corpus("sunflow_display")
    sf, bl = analyze(program), analyze_baseline(program)
    msf, mbl = compute_metrics(sf), compute_metrics(bl)
    print(f"{'metric':<20}{'skipflow':>10}{'baseline':>10}")
    for k in msf.COUNTERS:
        print(f"{k:<20}{getattr(msf, k):>10}{getattr(mbl, k):>10}")
    print()
    site = MethodRef("BucketRenderer", "render")
    for res in (sf, bl):
        call = res.flow(site, ("stmt", "b0", 0))
        targets = sorted(str(t) for t in res.linked.get(call.id, ()))
        print(f"{res.mode}: display.imageBegin() -> {targets}")
    print()
    print("pulled in only by the baseline:")
    for m in sorted(str(m) for m in bl.reachable - sf.reachable):
        print(f"  {m}")


if __name__ == "__main__":
    main()
