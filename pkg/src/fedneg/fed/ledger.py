"""Cost ledger: cumulative communication bytes and FLOPs, per-round trace."""

from __future__ import annotations

import csv
from dataclasses import dataclass

BYTES_PER_SCALAR = 8  # float64 on the wire


@dataclass(frozen=True)
class LedgerRow:
    round: int
    bytes: int
    flops: int
    phase: str


class CostLedger:
    def __init__(self):
        self.rows: list[LedgerRow] = []
        self.total_bytes = 0
        self.total_flops = 0

    def add(self, round_idx: int, nbytes: int, flops: int, phase: str) -> None:
        if nbytes < 0 or flops < 0:
            raise ValueError("ledger entries are monotone; negative costs rejected")
        self.rows.append(LedgerRow(round_idx, int(nbytes), int(flops), phase))
        self.total_bytes += int(nbytes)
        self.total_flops += int(flops)

    def round_exchange_bytes(self, participants: int, param_count: int) -> int:
        """Download plus upload of the full tree for every participant."""
        return 2 * participants * param_count * BYTES_PER_SCALAR

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["round", "bytes", "flops", "phase"])
        for row in self.rows:
            writer.writerow([row.round, row.bytes, row.flops, row.phase])
