"""Plot H(f|M0) and the L1 distance from an `esbgk relax` CSV file.

    python docs/plot_trajectory.py run.csv [run.png]
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main(path, out=None):
    df = pd.read_csv(path, comment="#")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(df["t"], df["rel_entropy"], label="H(f|M0)")
    ax.semilogy(df["t"], df["l1_to_maxwellian"], label="|f - M0|_1")
    ax.set_xlabel("t")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out or path.rsplit(".", 1)[0] + ".png", dpi=120)


if __name__ == "__main__":
    main(*sys.argv[1:3])
