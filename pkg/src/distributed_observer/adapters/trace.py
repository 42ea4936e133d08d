"""CSV trace export. Floats use %.17g so repeated runs are byte-identical."""

import csv
from pathlib import Path
from typing import Any, Dict, Iterable, List

import numpy as np

from distributed_observer.domain.models import SimTrace
from distributed_observer.ports.interfaces import ITraceWriter

ROUND_FIELDS = ["tau", "round", "agent", "eps_norm"]


def _fmt(value: float) -> str:
    return "%.17g" % value


def trace_header(m: int, n: int, include_states: bool = False) -> List[str]:
    header = ["tau", "graph_id", "err_norm_total"] + [f"err_norm_agent_{i + 1}" for i in range(m)]
    if include_states:
        header += [f"x_{k + 1}" for k in range(n)]
        header += [f"xhat_{i + 1}_{k + 1}" for i in range(m) for k in range(n)]
    return header


def _write_csv(*, path: str, fieldnames: List[str], rows: Iterable[Dict[str, Any]]) -> str:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return str(out)


class CsvTraceWriter(ITraceWriter):
    def write(self, trace: SimTrace, path: str, include_states: bool = False) -> str:
        fieldnames = trace_header(trace.m, trace.n, include_states)

        def rows():
            for k, tau in enumerate(trace.taus):
                values = [str(tau), str(trace.graph_ids[k] + 1), _fmt(trace.total_error_norms[k])]
                values += [_fmt(v) for v in trace.agent_error_norms[k]]
                if include_states:
                    values += [_fmt(v) for v in trace.states[k]]
                    values += [_fmt(v) for v in np.ravel(trace.estimates[k])]
                yield dict(zip(fieldnames, values))

        return _write_csv(path=path, fieldnames=fieldnames, rows=rows())

    def write_rounds(self, trace: SimTrace, path: str) -> str:
        rows = (
            {"tau": str(tau), "round": str(k), "agent": str(i + 1), "eps_norm": _fmt(float(np.linalg.norm(e)))}
            for tau, rounds in enumerate(trace.round_errors or [])
            for k, errors in enumerate(rounds)
            for i, e in enumerate(errors)
        )
        return _write_csv(path=path, fieldnames=ROUND_FIELDS, rows=rows)
