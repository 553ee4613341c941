"""OCDM and OFDM over EVA with one and two receive antennas.

    python scripts/eva_mrc.py [--blocks 2000] [--out eva_mrc.csv] [--plot eva_mrc.png]
"""
from _common import parse_args, plot, print_table, run

if __name__ == "__main__":
    args = parse_args("eva_mrc.yaml", "eva_mrc.csv")
    curves = run(args)
    print_table(curves)
    if args.plot:
        plot(curves, args.plot, "EVA, 4-QAM, N=256, MRC")
