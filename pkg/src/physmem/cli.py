"""``physmem-bench``: run the workload matrix and write ratio tables.

Exit status is 0 on success, 1 when variants of a cell disagree on their
checksum (no timings are written in that case), 2 on bad arguments.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

from .bench import (
    DEFAULT_SIZES,
    BenchConfig,
    emit_csv,
    emit_detail_table,
    emit_ratio_table,
    run_matrix,
    size_label,
)
from .errors import ChecksumMismatchError, ConfigError
from .workloads import DEFAULT_SEED, Kind, Variant

_UNITS = {"": 1, "B": 1, "K": 1 << 10, "KB": 1 << 10, "M": 1 << 20, "MB": 1 << 20, "G": 1 << 30, "GB": 1 << 30}


def parse_size(text: str) -> int:
    """``4096``, ``4K``, ``4KB``, ``64M``, ``1GB`` -> bytes (binary units)."""
    m = re.fullmatch(r"\s*(\d+)\s*([KMG]?B?)\s*", text.upper())
    if not m:
        raise argparse.ArgumentTypeError(f"bad size {text!r}")
    return int(m.group(1)) * _UNITS[m.group(2)]


def _csv_list(convert):
    def parse(text):
        try:
            return tuple(convert(t) for t in text.split(",") if t.strip())
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e)) from e

    return parse


def _int(text: str) -> int:
    return int(text, 0)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="physmem-bench",
        description="Compare block-pool tree arrays, pool-backed trees and split stacks "
        "against contiguous baselines.",
    )
    p.add_argument("--bench", type=_csv_list(lambda t: Kind(t.strip())), default=tuple(Kind),
                   help="workloads: " + ",".join(k.value for k in Kind) + " (default: all)")
    p.add_argument("--sizes", type=_csv_list(parse_size), default=DEFAULT_SIZES,
                   help="data sizes, e.g. 4K,4M,64M (default: %s)"
                   % ",".join(size_label(s) for s in DEFAULT_SIZES))
    p.add_argument("--variants", type=_csv_list(lambda t: Variant(t.strip())), default=None,
                   help="restrict to these variants: " + ",".join(v.value for v in Variant))
    p.add_argument("--repeats", type=int, default=10, help="timed samples per cell (default 10)")
    p.add_argument("--block-size", type=parse_size, default=32 << 10, help="pool block / tree node size")
    p.add_argument("--element-size", type=int, default=4, choices=(1, 2, 4, 8),
                   help="scan element width in bytes; gups always uses 8")
    p.add_argument("--stride", type=int, default=1024, help="strided scan stride in elements")
    p.add_argument("--passes", type=int, default=16, help="strided scan passes")
    p.add_argument("--updates", type=int, default=None, help="gups updates (default 4 x table length)")
    p.add_argument("--seed", type=_int, default=DEFAULT_SEED)
    p.add_argument("--fib-n", type=int, default=25)
    p.add_argument("--frame-size", type=int, default=64, help="split-stack frame bytes for fib")
    p.add_argument("--csv", type=Path, default=None, help="write records to this CSV file")
    p.add_argument("--parallel", action="store_true", help="run matrix cells on a thread pool")
    p.add_argument("--table", action="store_true", help="print ratio and detail tables")
    p.add_argument("--min-time", type=float, default=0.02, help="minimum seconds per timed sample")
    p.add_argument("--cv-threshold", type=float, default=0.05,
                   help="flag cells whose stddev/mean exceeds this")
    p.add_argument("--pool-bytes", type=parse_size, default=None,
                   help="cap each cell's private pool; cells that do not fit are skipped")
    p.add_argument("--verify-only", action="store_true", help="checksum gate only, no timing")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        cfg = BenchConfig(
            workloads=args.bench,
            sizes=args.sizes,
            variants=args.variants,
            repeats=args.repeats,
            block_size=args.block_size,
            element_size=args.element_size,
            stride=args.stride,
            passes=args.passes,
            updates=args.updates,
            seed=args.seed,
            fib_n=args.fib_n,
            frame_size=args.frame_size,
            output=args.csv,
            parallel=args.parallel,
            min_time=args.min_time,
            cv_threshold=args.cv_threshold,
            pool_bytes=args.pool_bytes,
            verify_only=args.verify_only,
        )
        records = run_matrix(cfg)
    except ChecksumMismatchError as e:
        print(f"checksum gate failed: {e}", file=sys.stderr)
        return 1
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    if cfg.output is not None:
        emit_csv(records, cfg.output)
    if args.table or cfg.output is None:
        print(emit_ratio_table(records))
        print()
        print(emit_detail_table(records, cfg.cv_threshold))
    return 0


if __name__ == "__main__":
    sys.exit(main())
