"""Plot the LIGHT activation and its derivative for every preset and variant.

    python scripts/plot_light_configs.py --out light_configs.png
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from light_sgd.light import PRESETS, VARIANTS, light_deriv, light_eval, preset  # noqa: E402


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="light_configs.png")
    parser.add_argument("--tmin", type=float, default=-6.0)
    parser.add_argument("--tmax", type=float, default=6.0)
    args = parser.parse_args()

    t = np.linspace(args.tmin, args.tmax, 2001)
    fig, axes = plt.subplots(2, len(VARIANTS), figsize=(10, 6), sharex=True)
    for col, variant in enumerate(VARIANTS):
        for name in PRESETS:
            p = preset(name, variant)
            # break the line at the switch so the jump is not drawn as a steep segment
            value = light_eval(t, p)
            value[np.searchsorted(t, p.T)] = np.nan
            axes[0, col].plot(t, value, label=name)
            axes[1, col].plot(t, light_deriv(t, p), label=name)
        axes[0, col].set_title(variant)
        axes[1, col].set_xlabel("t")
    axes[0, 0].set_ylabel("activation")
    axes[1, 0].set_ylabel("derivative")
    axes[0, 0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
