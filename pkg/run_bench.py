#! /bin/python3

import argparse
import logging

from gp2run import gp2_bench


def get_arguments(parser):
    parser.add_argument(
        "-c", default=gp2_bench.CONFIG_FILE, help="benchmark config file"
    )
    parser.add_argument("-o", help="write the CSV here instead of standard output")
    parser.add_argument(
        "-r",
        action="store_true",
        help="also print the doubling-ratio report",
    )
    return parser.parse_args()


def main():
    args = get_arguments(argparse.ArgumentParser())
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    config = gp2_bench.read_config(args.c)
    samples = []
    for program in config.programs:
        samples.extend(
            gp2_bench.run_bench(
                program, config.specs, config.backends, config.modes, config.reps
            )
        )

    csv_text = gp2_bench.emit_csv(samples)
    if args.o:
        with open(args.o, "w") as f:
            f.write(csv_text)
    else:
        print(csv_text, end="")

    if args.r:
        for row in gp2_bench.ratio_report(samples):
            print(
                f"{row.program} {row.kind} [{row.backend.value}, {row.mode.value}] "
                f"{row.small} -> {row.large}: x{row.ratio:.2f} {row.verdict}"
            )


if __name__ == "__main__":
    main()
