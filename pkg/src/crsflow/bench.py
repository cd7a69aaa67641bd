"""Min-of-R timing harness for the two Jacobian construction paths."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .caseio import Case
from .network import build_ybus
from .solver import SolveOptions, SolverPath, newton_raphson

__all__ = ["BenchReport", "run_benchmark", "write_csv", "CSV_COLUMNS", "REPORT_PHASES"]

REPORT_PHASES = ("derivatives", "jacobian", "linear_solve", "total")
CSV_COLUMNS = ("case", "path", "phase", "min_ms", "runs", "n_bus", "nnz")


@dataclass
class BenchReport:
    case_name: str
    n_bus: int
    nnz_y: int
    path: SolverPath
    runs: int
    samples: dict = field(default_factory=dict)  # phase -> seconds per run
    visits: dict = field(default_factory=dict)   # per solve
    iterations: int = 0
    vm: np.ndarray | None = None
    va: np.ndarray | None = None

    def minimum(self, phase: str) -> float:
        return min(self.samples[phase])

    @property
    def minima(self) -> dict:
        return {p: self.minimum(p) for p in REPORT_PHASES}

    @property
    def construction_min(self) -> float:
        """Fastest run of derivatives plus Jacobian assembly."""
        return min(d + j for d, j in zip(self.samples["derivatives"], self.samples["jacobian"]))


def run_benchmark(case: Case, path: SolverPath, runs: int = 100, *,
                  case_name: str = "case", tol: float = 1e-8,
                  max_iter: int = 10) -> BenchReport:
    """Solve ``case`` ``runs`` times after one untimed warm-up solve.

    Case parsing and validation happen before this call and are not timed.
    """
    if runs < 1:
        raise ValueError(f"runs must be at least 1, got {runs}")
    opts = SolveOptions(tol=tol, max_iter=max_iter, path=path)
    warm = newton_raphson(case, opts)
    rep = BenchReport(case_name, case.n_bus, build_ybus(case).nnz, path, runs,
                      samples={p: [] for p in REPORT_PHASES},
                      visits=dict(warm.visits), iterations=warm.iterations,
                      vm=warm.vm, va=warm.va)
    for _ in range(runs):
        res = newton_raphson(case, opts)
        for p in REPORT_PHASES[:-1]:
            rep.samples[p].append(res.timings[p])
        rep.samples["total"].append(sum(res.timings.values()))
    return rep


def write_csv(reports, out=None) -> str:
    """Write one row per (path, phase); returns the text as well."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        for phase in REPORT_PHASES:
            w.writerow([rep.case_name, rep.path.value, phase,
                        f"{rep.minimum(phase) * 1e3:.6f}", rep.runs, rep.n_bus, rep.nnz_y])
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
