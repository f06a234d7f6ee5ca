"""Benchmark matrix runner and report writers.

For each (workload, size) cell every selected variant is built, verified
with one untimed-for-report run, then timed. Timing samples auto-scale an
inner repetition count so each sample lasts at least ``min_time`` seconds;
reported times are per single execution of the body. A cell's timings are
only returned once all of its variants agree on the checksum.
"""

from __future__ import annotations

import csv
import logging
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .block_pool import DEFAULT_BLOCK_SIZE, BlockPool, PoolConfig
from .errors import ChecksumMismatchError, ConfigError, OutOfBlocksError
from .workloads import DEFAULT_SEED, UNSIZED, VARIANTS, Kind, Variant, WorkloadSpec, prepare

log = logging.getLogger(__name__)

KB, MB, GB = 1 << 10, 1 << 20, 1 << 30
DEFAULT_SIZES = (4 * KB, 4 * MB, 64 * MB, 512 * MB)
DEFAULT_WORKLOADS = tuple(Kind)

CSV_HEADER = ("workload", "variant", "bytes", "mean_s", "stddev_s", "hops", "allocs", "checksum", "ratio_vs_flat")
SKIPPED_CELL = "—"


@dataclass
class BenchConfig:
    workloads: tuple[Kind, ...] = DEFAULT_WORKLOADS
    sizes: tuple[int, ...] = DEFAULT_SIZES
    # None selects every variant each workload supports
    variants: tuple[Variant, ...] | None = None
    repeats: int = 10
    block_size: int = DEFAULT_BLOCK_SIZE
    element_size: int = 4
    stride: int = 1024
    passes: int = 16
    updates: int | None = None
    seed: int = DEFAULT_SEED
    fib_n: int = 25
    frame_size: int = 64
    output: Path | None = None
    parallel: bool = False
    min_time: float = 0.02
    cv_threshold: float = 0.05
    pool_bytes: int | None = None
    verify_only: bool = False

    def __post_init__(self):
        self.workloads = tuple(Kind(w) for w in self.workloads)
        if self.variants is not None:
            self.variants = tuple(Variant(v) for v in self.variants)
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not self.sizes and any(w not in UNSIZED for w in self.workloads):
            raise ConfigError("at least one size is required")
        if self.pool_bytes is not None and self.pool_bytes < self.block_size:
            raise ConfigError("pool_bytes must hold at least one block")

    def spec(self, kind: Kind, size: int) -> WorkloadSpec:
        return WorkloadSpec.make(
            kind,
            0 if kind in UNSIZED else size,
            **({} if kind is Kind.GUPS else {"element_size": self.element_size}),
            stride_elements=self.stride,
            passes=self.passes,
            updates=self.updates,
            seed=self.seed,
            block_size=self.block_size,
            frame_size=self.frame_size,
            fib_n=self.fib_n,
        )

    def cells(self) -> list[tuple[Kind, int]]:
        out = []
        for kind in self.workloads:
            if kind in UNSIZED:
                out.append((kind, 0))
            else:
                out.extend((kind, s) for s in self.sizes)
        return out

    def variants_for(self, kind: Kind) -> tuple[Variant, ...]:
        return tuple(v for v in VARIANTS[kind] if self.variants is None or v in self.variants)


@dataclass
class BenchRecord:
    workload: str
    variant: str
    data_bytes: int
    mean_s: float = math.nan
    stddev_s: float = math.nan
    hops: int | None = None
    allocs: int | None = None
    checksum: int | None = None
    ratio_vs_flat: float | None = None
    build_s: float = math.nan
    accesses: int | None = None
    reps: int = 0
    samples: list[float] = field(default_factory=list, repr=False)
    skipped: bool = False

    @property
    def cv(self) -> float:
        if self.skipped or not self.mean_s:
            return math.nan
        return self.stddev_s / self.mean_s

    def unstable(self, threshold: float) -> bool:
        return self.cv > threshold


def _time_variant(cfg: BenchConfig, spec: WorkloadSpec, variant: Variant) -> BenchRecord:
    rec = BenchRecord(str(spec.kind), str(variant), spec.data_bytes)
    pool = None
    if cfg.pool_bytes is not None and spec.blocks_needed(variant):
        pool = BlockPool(PoolConfig.for_bytes(cfg.pool_bytes, cfg.block_size))
    try:
        p = prepare(spec, variant, pool)
    except OutOfBlocksError as e:
        log.warning("skipping %s/%s at %d bytes: %s", spec.kind, variant, spec.data_bytes, e)
        rec.skipped = True
        return rec
    with p:
        first = p.run(1)
        rec.checksum, rec.hops, rec.accesses = first.checksum, first.hops, first.accesses
        rec.allocs = p.allocations
        rec.build_s = p.build_time
        if cfg.verify_only:
            return rec
        probe = p.run(1).elapsed
        rec.reps = max(1, math.ceil(cfg.min_time / probe)) if probe > 0 else 1
        for _ in range(cfg.repeats):
            rec.samples.append(p.run(rec.reps).elapsed / rec.reps)
    rec.mean_s = statistics.fmean(rec.samples)
    rec.stddev_s = statistics.stdev(rec.samples) if len(rec.samples) > 1 else 0.0
    return rec


def run_cell(cfg: BenchConfig, kind: Kind, size: int) -> list[BenchRecord]:
    """All variants of one cell, checksum-gated, with ratios filled in."""
    spec = cfg.spec(kind, size)
    records = []
    for v in cfg.variants_for(kind):
        log.info("running %s/%s at %d bytes", kind, v, size)
        records.append(_time_variant(cfg, spec, v))
    live = [r for r in records if not r.skipped]
    if len({r.checksum for r in live}) > 1:
        detail = ", ".join(f"{r.variant}={r.checksum}" for r in live)
        raise ChecksumMismatchError(f"{kind} at {size} bytes: variants disagree ({detail})")
    flat = next((r for r in live if r.variant == Variant.FLAT), None)
    if flat is not None and flat.mean_s > 0:
        for r in live:
            if r is not flat:
                r.ratio_vs_flat = r.mean_s / flat.mean_s
    for r in live:
        if r.unstable(cfg.cv_threshold):
            log.warning(
                "%s/%s at %d bytes: stddev is %.1f%% of mean", r.workload, r.variant, size, 100 * r.cv
            )
    return records


def run_matrix(cfg: BenchConfig) -> list[BenchRecord]:
    """One record per (workload, size, variant), in matrix order.

    Raises :class:`ChecksumMismatchError` if any cell's variants disagree.
    """
    cells = cfg.cells()
    if cfg.parallel:
        with ThreadPoolExecutor() as ex:
            per_cell = list(ex.map(lambda c: run_cell(cfg, *c), cells))
    else:
        per_cell = [run_cell(cfg, *c) for c in cells]
    return [r for recs in per_cell for r in recs]


def _fmt_float(x: float | None) -> str:
    if x is None or math.isnan(x):
        return ""
    return repr(float(x))


def _fmt_int(x: int | None) -> str:
    return "" if x is None else str(x)


def emit_csv(records: list[BenchRecord], path) -> None:
    if not records:
        raise ValueError("no records to write")
    with open(path, "w", newline="", encoding="ascii") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow((
                r.workload, r.variant, r.data_bytes,
                _fmt_float(r.mean_s), _fmt_float(r.stddev_s),
                _fmt_int(r.hops), _fmt_int(r.allocs), _fmt_int(r.checksum),
                _fmt_float(r.ratio_vs_flat),
            ))


def read_csv(path) -> list[BenchRecord]:
    out = []
    with open(path, newline="", encoding="ascii") as f:
        rows = csv.reader(f)
        header = tuple(next(rows))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        for row in rows:
            wl, var, nbytes, mean, sd, hops, allocs, ck, ratio = row
            out.append(BenchRecord(
                wl, var, int(nbytes),
                mean_s=float(mean) if mean else math.nan,
                stddev_s=float(sd) if sd else math.nan,
                hops=int(hops) if hops else None,
                allocs=int(allocs) if allocs else None,
                checksum=int(ck) if ck else None,
                ratio_vs_flat=float(ratio) if ratio else None,
                skipped=not mean and not ck,
            ))
    return out


def size_label(nbytes: int) -> str:
    for unit, name in ((GB, "GB"), (MB, "MB"), (KB, "KB")):
        if nbytes >= unit and nbytes % unit == 0:
            return f"{nbytes // unit}{name}"
    return f"{nbytes}B"


def _ratio_cell(r: BenchRecord | None) -> str:
    if r is None or r.skipped:
        return SKIPPED_CELL
    if r.variant == Variant.FLAT:
        return "1.00"
    if r.ratio_vs_flat is None:
        return SKIPPED_CELL
    return f"{r.ratio_vs_flat:.2f}"


def emit_ratio_table(records: list[BenchRecord]) -> str:
    """Run-time ratios vs. the flat variant: rows workload x variant, columns sizes."""
    sized = [r for r in records if Kind(r.workload) not in UNSIZED]
    sizes = sorted({r.data_bytes for r in sized})
    index = {(r.workload, r.variant, r.data_bytes): r for r in records}
    rows = []
    for r in records:
        key = (r.workload, r.variant)
        if key not in rows:
            rows.append(key)

    head = ["Benchmark"] + [size_label(s) for s in sizes]
    body = []
    for wl, var in rows:
        if Kind(wl) in UNSIZED:
            continue
        body.append([f"{wl}: {var}"] + [_ratio_cell(index.get((wl, var, s))) for s in sizes])
    unsized = [
        [f"{wl}: {var}", _ratio_cell(index.get((wl, var, 0)))]
        for wl, var in rows
        if Kind(wl) in UNSIZED
    ]

    lines = []
    if body:
        widths = [max(len(row[c]) for row in [head] + body) for c in range(len(head))]

        def fmt(row):
            return "  ".join(
                cell.ljust(w) if c == 0 else cell.rjust(w)
                for c, (cell, w) in enumerate(zip(row, widths))
            )

        lines.append(fmt(head))
        lines.append("  ".join("-" * w for w in widths))
        lines.extend(fmt(row) for row in body)
    if unsized:
        if lines:
            lines.append("")
        w = max(len(row[0]) for row in unsized)
        lines.extend(f"{name.ljust(w)}  {cell}" for name, cell in unsized)
    return "\n".join(lines)


def emit_detail_table(records: list[BenchRecord], cv_threshold: float = 0.05) -> str:
    """Per-record timings, construction time, counters and stability flag."""
    lines = [
        f"{'workload':<13} {'variant':<6} {'size':>6} {'mean_s':>11} {'cv%':>6} "
        f"{'build_s':>9} {'hops':>12} {'allocs':>7}  flag"
    ]
    for r in records:
        if r.skipped:
            lines.append(f"{r.workload:<13} {r.variant:<6} {size_label(r.data_bytes):>6}  skipped")
            continue
        flag = "unstable" if r.unstable(cv_threshold) else ""
        cv = "" if math.isnan(r.cv) else f"{100 * r.cv:.1f}"
        mean = "" if math.isnan(r.mean_s) else f"{r.mean_s:.4e}"
        lines.append(
            f"{r.workload:<13} {r.variant:<6} {size_label(r.data_bytes) if r.data_bytes else '-':>6} "
            f"{mean:>11} {cv:>6} {r.build_s:>9.4f} {r.hops:>12} {r.allocs:>7}  {flag}"
        )
    return "\n".join(lines)
