"""
Convergence rates on a noisy quadratic
======================================

Runs the three normalized methods with their theory schedules on
Quadratic(mu=1, d=10, sigma=1), fits log-log slopes of the suboptimality and
writes a plot.  The acceptance check uses T = 100000; the default here is
smaller so the script finishes in about a minute.

    python3 notebooks/rates_quadratic.py --T 100000 --out rates.svg
"""
import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from normpg.bench.checks import rate_runs
from normpg.synth import fit_rate

parser = argparse.ArgumentParser()
parser.add_argument("--T", type=int, default=20_000)
parser.add_argument("--out", default="rates_quadratic.svg")
args = parser.parse_args()

runs = rate_runs(args.T)
window = (args.T // 100, args.T)

fig, ax = plt.subplots(figsize=(6, 4))
for kind, (traces, finals) in runs.items():
    slope = fit_rate(traces, window)
    median = np.median(np.stack(traces), axis=0)
    t = np.arange(1, args.T)
    ax.loglog(t, median[1:], lw=1.2, label=f"{kind.value}: slope {slope:.2f}")
    print(f"{kind.value:8s} slope={slope:.3f} median final suboptimality={np.median(finals):.3g}")

# reference slopes anchored at the window start
t = np.array(window, dtype=float)
for rate, style in ((-0.5, ":"), (-0.4, "--")):
    ax.loglog(t, 0.5 * (t / t[0]) ** rate, "k" + style, lw=0.8, label=f"t^{rate}")
ax.set_xlabel("iteration")
ax.set_ylabel("J* - J(theta_t)")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(args.out, format="svg", metadata={"Date": None})
print("wrote", args.out)
