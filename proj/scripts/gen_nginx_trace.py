#!/usr/bin/env python3
"""Generate a synthetic web-server allocation trace.

Connections come and go; each request allocates a handful of buffers,
touches them and frees them when the request is done. The generator is
steered so the run performs exactly --allocations allocations and never
has more than --peak objects live, reaching that peak once.
"""

import argparse
import random
import sys

SIZES = [16, 24, 32, 48, 64, 80, 128, 256, 512, 1024, 2048, 4096]
WEIGHTS = [10, 8, 14, 6, 12, 4, 10, 8, 6, 4, 2, 1]


def generate(allocations, peak, seed):
    rng = random.Random(seed)
    out = ["# synthetic web-server trace: %d allocations, peak %d live" % (allocations, peak)]
    live = {}
    next_id = 0
    made = 0
    reached_peak = False
    # Ramp to the peak somewhere in the middle of the run.
    ramp_at = allocations // 2

    def alloc():
        nonlocal next_id, made
        size = rng.choices(SIZES, WEIGHTS)[0]
        out.append("A %d %d" % (next_id, size))
        live[next_id] = size
        for _ in range(rng.randint(1, 3)):
            width = rng.choice([1, 2, 4, 8])
            width = min(width, size)
            out.append("C %d %d %d" % (next_id, rng.randint(0, size - width), width))
        next_id += 1
        made += 1

    def free_one():
        victim = rng.choice(list(live))
        out.append("F %d" % victim)
        del live[victim]

    while made < allocations:
        left = allocations - made
        if not reached_peak and made >= ramp_at:
            while len(live) < peak and made < allocations:
                alloc()
            reached_peak = len(live) == peak
            continue
        ceiling = peak - 1 if not reached_peak else peak
        # Keep enough headroom that the ramp is still possible.
        if not reached_peak and left <= peak - len(live):
            ceiling = len(live)
        if live and (len(live) >= ceiling or rng.random() < 0.45 + len(live) / (4.0 * peak)):
            free_one()
        else:
            alloc()
    while live:
        free_one()
    if not reached_peak:
        sys.exit("could not reach the requested peak")
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--allocations", type=int, default=5211)
    ap.add_argument("--peak", type=int, default=151)
    ap.add_argument("--seed", type=int, default=5211)
    ap.add_argument("-o", "--output", default="-")
    args = ap.parse_args()
    lines = generate(args.allocations, args.peak, args.seed)
    text = "\n".join(lines) + "\n"
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as f:
            f.write(text)


if __name__ == "__main__":
    main()
