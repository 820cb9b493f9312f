"""
Solve statistics and benchmark progress
Thread-safe counters collected during branch-and-price, a tqdm progress bar
for benchmark sweeps and an append-only ledger of benchmark rows
"""

import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from tqdm import tqdm


@dataclass
class CgRecord:
    """Outcome of one cg_solve call"""
    lp_value: float
    lagrangian_bound: float
    status: str
    iterations: int = 0


@dataclass
class SolveStats:
    """Counters of one solve; mirrors the quantities reported per run"""
    columns: int = 0
    nodes_expanded: int = 0
    atomic_calls: int = 0
    cg_calls: int = 0
    wall_ms: int = 0

    # Most negative linking dual seen before clamping
    min_gamma: float = math.inf
    cg_history: List[CgRecord] = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.Lock()

    def bump(self, name: str, amount: int = 1):
        with self._lock:
            setattr(self, name, getattr(self, name) + amount)

    def observe_gamma(self, value: float):
        with self._lock:
            if value < self.min_gamma:
                self.min_gamma = value

    def record_cg(self, record: CgRecord):
        with self._lock:
            self.cg_calls += 1
            self.cg_history.append(record)

    def to_dict(self) -> Dict[str, int]:
        return {
            "columns": self.columns,
            "nodes_expanded": self.nodes_expanded,
            "atomic_calls": self.atomic_calls,
            "cg_calls": self.cg_calls,
            "wall_ms": self.wall_ms,
        }


class BenchProgress:
    """Progress bar over the (instance, algo) runs of a benchmark sweep"""

    def __init__(self, total: int, enabled: bool = True):
        self.bar = tqdm(
            total=total,
            desc="bench",
            unit="run",
            disable=not enabled,
            bar_format="{l_bar}{bar}| {n}/{total} [{elapsed}<{remaining}]",
        )

    def advance(self, instance: str, algo: str, status: str):
        self.bar.set_postfix_str(f"{instance}:{algo}={status}")
        self.bar.update(1)

    def close(self):
        self.bar.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class RunHistory:
    """Append-only JSON-lines ledger of benchmark rows"""

    def __init__(self, history_file: Optional[str] = None):
        self.history_file = Path(history_file) if history_file else None
        self.entries: List[Dict[str, Any]] = []

    def add_entry(self, row: Dict[str, Any]):
        self.entries.append(dict(row))
        if self.history_file is not None:
            with open(self.history_file, "a", encoding="utf-8") as f:
                f.write(json.dumps(row) + "\n")

    def load(self) -> List[Dict[str, Any]]:
        if self.history_file is None or not self.history_file.exists():
            return []
        with open(self.history_file, "r", encoding="utf-8") as f:
            return [json.loads(line) for line in f if line.strip()]

    def get_statistics(self) -> Dict[str, Any]:
        """Per-algorithm run counts and mean wall time"""
        by_algo: Dict[str, List[float]] = {}
        for entry in self.entries:
            by_algo.setdefault(entry["algo"], []).append(float(entry.get("wall_ms", 0)))
        return {
            algo: {"runs": len(times), "mean_wall_ms": sum(times) / len(times)}
            for algo, times in by_algo.items()
        }
