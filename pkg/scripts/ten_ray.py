"""BER of OCDM (ZF, MMSE) against OFDM over the 10-ray channel.

    python scripts/ten_ray.py [--blocks 2000] [--out ten_ray.csv] [--plot ten_ray.png]
"""
from _common import parse_args, plot, print_table, run

if __name__ == "__main__":
    args = parse_args("ten_ray.yaml", "ten_ray.csv")
    curves = run(args)
    print_table(curves)
    if args.plot:
        plot(curves, args.plot, "10-ray Rayleigh, 4-QAM, N=256")
