"""Results table in the arrow notation: ↑ primary, ↓ adversarial, ✗ off."""
from __future__ import annotations

from typing import Sequence

from src.core.roles import RoleMap, marker_row, validate_roles
from src.eval.metrics import EvalReport

HEADER = ("Model", "Dialect", "Gender", "Age", "Acc.", "P", "R", "F1")

ResultRow = tuple[str, RoleMap, EvalReport]


def percent(value: float) -> str:
    """0.78214 -> '78.21'."""
    return f"{100.0 * value:.2f}"


def render_results_table(rows: Sequence[ResultRow]) -> str:
    body = []
    for name, roles, report in rows:
        validate_roles(roles)
        body.append([name, *marker_row(roles),
                     percent(report.accuracy), percent(report.precision),
                     percent(report.recall), percent(report.f1)])

    widths = [max(len(r[i]) for r in [list(HEADER), *body]) for i in range(len(HEADER))]
    fmt = lambda cells: " | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(HEADER), "-+-".join("-" * w for w in widths)]
    lines += [fmt(r) for r in body]
    return "\n".join(lines) + "\n"
