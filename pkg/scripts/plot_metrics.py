#!/usr/bin/env python3
"""Example plot of a run's metrics.csv: per-AP load and connection counts.

Usage: python scripts/plot_metrics.py out/seed1/metrics.csv [plot.png]

Documentation-only helper; the simulator itself has no plotting
dependency.
"""

import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main() -> int:
    if len(sys.argv) < 2:
        print(__doc__)
        return 2
    path = sys.argv[1]
    out_png = sys.argv[2] if len(sys.argv) > 2 else "metrics.png"

    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        print("no rows in", path)
        return 1

    t = [float(r["t_s"]) for r in rows]
    ap_ids = sorted(
        int(c.split("_")[1]) for c in rows[0] if c.endswith("_load")
    )

    fig, (ax_load, ax_conn) = plt.subplots(2, 1, sharex=True,
                                           figsize=(8, 6))
    for j in ap_ids:
        ax_load.plot(t, [float(r[f"ap_{j}_load"]) for r in rows],
                     label=f"AP {j}")
        ax_conn.plot(t, [int(r[f"ap_{j}_connected"]) for r in rows],
                     label=f"AP {j}")
    ax_load.set_ylabel("load ratio")
    ax_load.set_ylim(-0.02, 1.05)
    ax_load.legend()
    ax_conn.set_ylabel("connected UEs")
    ax_conn.set_xlabel("time (s)")
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    print("wrote", out_png)
    return 0


if __name__ == "__main__":
    sys.exit(main())
