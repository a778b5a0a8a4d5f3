"""Analytical latency, FLOPS, and peak-memory estimation from profiling tables.

Generation latency is one prefill-table lookup plus a sum of per-token decode
latencies: T(l_i, l_o, B) = prefill(l_i) + sum of decode latencies for
contexts l_i .. l_i + l_o - 1. The two-stage estimate runs the skeleton stage
at batch 1 and the point-expanding stage at batch B, using the longest point
request/response lengths. Prefill is profiled on a stride-10 grid (1, 11,
21, ...), so lookups floor to the grid. All latencies are milliseconds.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

log = logging.getLogger(__name__)

PREFILL_STRIDE = 10


def prefill_grid_key(l_i: int) -> int:
    return (l_i // PREFILL_STRIDE) * PREFILL_STRIDE + 1


@dataclass(frozen=True)
class ProfilingTable:
    decode: dict[tuple[int, int], float]    # (batch, context) -> ms
    prefill: dict[tuple[int, int], float]   # (batch, grid length) -> ms
    b_max: int
    k_max: int
    prefill_max: int

    def __post_init__(self):
        if any(v <= 0 for v in self.decode.values()):
            raise ConfigError("decode latencies must be > 0")
        if any(v <= 0 for v in self.prefill.values()):
            raise ConfigError("prefill latencies must be > 0")
        for _batch, length in self.prefill:
            if length % PREFILL_STRIDE != 1:
                raise ConfigError(
                    f"prefill length {length} not on the stride-{PREFILL_STRIDE} grid")
        for batch in range(1, self.b_max + 1):
            for k in range(1, self.k_max + 1):
                if (batch, k) not in self.decode:
                    raise ConfigError(f"decode table missing (batch={batch}, context={k})")


@dataclass(frozen=True)
class FlopsTable:
    flops: dict[tuple[int, int], float]  # (batch, context) -> FLOPs per token

    def __post_init__(self):
        if any(v <= 0 for v in self.flops.values()):
            raise ConfigError("FLOPs values must be > 0")


@dataclass(frozen=True)
class MemoryTable:
    mem: dict[tuple[str, int, int], float]  # (phase, batch, length) -> MB

    def __post_init__(self):
        if any(v <= 0 for v in self.mem.values()):
            raise ConfigError("memory values must be > 0")


@dataclass(frozen=True)
class SotLatencyEstimate:
    skeleton_latency: float
    point_latency: float
    total: float
    li_s: int
    lo_s: int
    li_pe: int
    lo_pe: int
    batch: int
    clamped: bool = False

    def __post_init__(self):
        if abs(self.total - (self.skeleton_latency + self.point_latency)) > 1e-9:
            raise ConfigError("total must equal skeleton + point latency")


def load_profiling_table(path: str | Path) -> ProfilingTable:
    """CSV with header phase,batch,context,latency_ms; phase in {prefill,decode}."""
    decode: dict[tuple[int, int], float] = {}
    prefill: dict[tuple[int, int], float] = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            batch = int(row["batch"])
            context = int(row["context"])
            latency = float(row["latency_ms"])
            if row["phase"] == "decode":
                decode[(batch, context)] = latency
            elif row["phase"] == "prefill":
                prefill[(batch, context)] = latency
            else:
                raise ConfigError(f"unknown phase {row['phase']!r}")
    if not decode or not prefill:
        raise ConfigError("profiling table needs both prefill and decode rows")
    return ProfilingTable(
        decode=decode,
        prefill=prefill,
        b_max=max(b for b, _ in decode),
        k_max=max(k for _, k in decode),
        prefill_max=max(length for _, length in prefill),
    )


def make_flat_table(b_max: int, k_max: int, prefill_max: int,
                    prefill_ms: float, decode_ms: float) -> ProfilingTable:
    """Constant-latency synthetic table, handy for closed-form checks."""
    decode = {(b, k): decode_ms
              for b in range(1, b_max + 1) for k in range(1, k_max + 1)}
    prefill = {(b, length): prefill_ms
               for b in range(1, b_max + 1)
               for length in range(1, prefill_max + 1, PREFILL_STRIDE)}
    return ProfilingTable(decode=decode, prefill=prefill, b_max=b_max,
                          k_max=k_max, prefill_max=prefill_max)


def load_flops_table(path: str | Path) -> FlopsTable:
    """CSV with header batch,context,flops_per_token."""
    flops: dict[tuple[int, int], float] = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            flops[(int(row["batch"]), int(row["context"]))] = float(row["flops_per_token"])
    return FlopsTable(flops=flops)


def load_memory_table(path: str | Path) -> MemoryTable:
    """CSV with header phase,batch,length,mem_mb."""
    mem: dict[tuple[str, int, int], float] = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            mem[(row["phase"], int(row["batch"]), int(row["length"]))] = float(row["mem_mb"])
    return MemoryTable(mem=mem)


def _check_batch(tbl: ProfilingTable, batch: int) -> None:
    if not 1 <= batch <= tbl.b_max:
        raise ConfigError(f"batch {batch} outside table range 1..{tbl.b_max}")


def prefill_lookup(tbl: ProfilingTable, batch: int, l_i: int) -> float:
    """Floor-to-grid prefill lookup; lengths past the grid clamp to its end."""
    _check_batch(tbl, batch)
    if l_i < 1:
        raise ConfigError("prompt length must be >= 1")
    key = prefill_grid_key(l_i)
    if key > tbl.prefill_max:
        log.warning("prefill length %d beyond table, clamping to %d", l_i, tbl.prefill_max)
        key = prefill_grid_key(tbl.prefill_max)
    try:
        return tbl.prefill[(batch, key)]
    except KeyError as exc:
        raise ConfigError(f"prefill table missing (batch={batch}, length={key})") from exc


def estimate_generation(tbl: ProfilingTable, l_i: int, l_o: int, batch: int) -> float:
    """Prefill lookup plus the decode-latency sum over the generated span."""
    _check_batch(tbl, batch)
    if l_o < 0:
        raise ConfigError("output length must be >= 0")
    total = prefill_lookup(tbl, batch, l_i)
    for k in range(l_i, l_i + l_o):
        kk = k
        if kk > tbl.k_max:
            log.warning("context %d beyond table, clamping to %d", k, tbl.k_max)
            kk = tbl.k_max
        total += tbl.decode[(batch, kk)]
    return total


def estimate_sot(tbl: ProfilingTable, li_s: int, lo_s: int,
                 li_pe: int, lo_pe: int, batch: int) -> SotLatencyEstimate:
    """Skeleton stage at batch 1 plus point-expanding stage at batch B."""
    if batch < 1:
        raise ConfigError("batch must be >= 1")
    _check_batch(tbl, batch)
    skeleton = estimate_generation(tbl, li_s, lo_s, 1)
    points = estimate_generation(tbl, li_pe, lo_pe, batch)
    clamped = (li_s + lo_s - 1 > tbl.k_max or li_pe + lo_pe - 1 > tbl.k_max
               or prefill_grid_key(li_s) > tbl.prefill_max
               or prefill_grid_key(li_pe) > tbl.prefill_max)
    return SotLatencyEstimate(
        skeleton_latency=skeleton, point_latency=points,
        total=skeleton + points,
        li_s=li_s, lo_s=lo_s, li_pe=li_pe, lo_pe=lo_pe, batch=batch,
        clamped=clamped,
    )


def speedup(normal_latency: float, sot_latency: float) -> float:
    if normal_latency <= 0 or sot_latency <= 0:
        raise ConfigError("latencies must be > 0")
    return normal_latency / sot_latency


def avg_decode_flops(flops_tbl: FlopsTable, tbl: ProfilingTable,
                     l_i: int, l_o: int, batch: int) -> float:
    """Average decode throughput: total FLOPs over total decode time."""
    _check_batch(tbl, batch)
    if l_o < 1:
        raise ConfigError("output length must be >= 1 for throughput")
    total_flops = 0.0
    total_ms = 0.0
    for k in range(l_i, l_i + l_o):
        if (batch, k) not in flops_tbl.flops:
            raise ConfigError(f"FLOPs table missing (batch={batch}, context={k})")
        if (batch, k) not in tbl.decode:
            raise ConfigError(f"decode table missing (batch={batch}, context={k})")
        total_flops += flops_tbl.flops[(batch, k)]
        total_ms += tbl.decode[(batch, k)]
    return total_flops / (total_ms / 1000.0)


def peak_memory(mem_tbl: MemoryTable,
                stages: list[tuple[str, int, int, int]]) -> float:
    """Max over stages of max(prefill, decode) peak for each stage.

    Each stage descriptor is (name, batch, prefill_length, decode_length).
    """
    if not stages:
        raise ConfigError("at least one stage descriptor required")
    peaks: list[float] = []
    for name, batch, pre_len, dec_len in stages:
        try:
            pre = mem_tbl.mem[("prefill", batch, pre_len)]
            dec = mem_tbl.mem[("decode", batch, dec_len)]
        except KeyError as exc:
            raise ConfigError(f"memory table missing entry for stage {name!r}: {exc}") from exc
        peaks.append(max(pre, dec))
    return max(peaks)
