"""Table sizes and run time of the three schemes as evidence grows.

cLARP keeps observed variables in its messages until they leave the last
clique that holds them, and also maintains an evidence-free copy of every
message, so its largest table is never smaller than that of the other two.
"""
from lazyar.bench import run_benchmark

rows = run_benchmark(n_vars=25, max_parents=2, max_card=4, seed=1, sizes=range(0, 16, 3), sets_per_size=10)
print(f"{'n':>3} | {'largest: larp':>14} {'all-ev':>8} {'clarp':>8} | {'ms: larp':>9} {'all-ev':>8} {'clarp':>8}")
for r in rows:
    print(
        f"{r.n:>3} | {r.largest['larp']:>14.1f} {r.largest['all-evidence']:>8.1f} {r.largest['clarp']:>8.1f} | "
        f"{1e3 * r.time['larp']:>9.2f} {1e3 * r.time['all-evidence']:>8.2f} {1e3 * r.time['clarp']:>8.2f}"
    )
