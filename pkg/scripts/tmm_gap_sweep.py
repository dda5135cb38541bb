#!/usr/bin/env python3
"""Map cavity resonances versus air-gap length for the default mirror stack.

Writes one (gap, resonance wavelength) row per detected transmission peak.
Near the stopband center the fundamental branch shifts linearly with gap;
near the band edges the apparent free spectral range shrinks, which is why a
length inferred from it overestimates the geometric length.
"""

import argparse

import numpy as np

from opencavity.tmm import default_cavity_stack, resonance_map


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="resonance_map.csv")
    parser.add_argument("--gap-min", type=float, default=3000.0)
    parser.add_argument("--gap-max", type=float, default=7000.0)
    parser.add_argument("--gap-steps", type=int, default=41)
    parser.add_argument("--lambda-min", type=float, default=910.0)
    parser.add_argument("--lambda-max", type=float, default=1030.0)
    parser.add_argument("--lambda-steps", type=int, default=2401)
    args = parser.parse_args()

    gaps = np.linspace(args.gap_min, args.gap_max, args.gap_steps)
    wavelengths = np.linspace(args.lambda_min, args.lambda_max, args.lambda_steps)
    rows = resonance_map(default_cavity_stack, gaps, wavelengths)

    count = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("# mode: tmm\n# axis: wavelength\n# units: gap=nm, resonance=nm\n")
        fh.write("gap,resonance\n")
        for gap, peaks in rows:
            for peak in peaks:
                fh.write(f"{gap:.6g},{peak:.6g}\n")
                count += 1
    print(f"wrote {args.out}: {count} resonances over {len(gaps)} gap values")


if __name__ == "__main__":
    main()
