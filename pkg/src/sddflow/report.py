"""Rendering of run results as human text or versioned key=value lines.

Structured format (``schema=sddflow.report/1``): one ``key=value`` pair per
line, keys in a fixed order, floats printed with ``repr`` so reruns with the
same inputs and seed are byte-identical except for the final ``wall_time``.
"""

from __future__ import annotations

import math

SCHEMA = "sddflow.report/1"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    if v is None:
        return "none"
    return str(v)


def render_structured(fields: list) -> str:
    """``fields`` is a list of ``(key, value)``; ``wall_time`` is moved to the end."""
    lines = [f"schema={SCHEMA}"]
    wall = None
    for k, v in fields:
        if k == "wall_time":
            wall = v
            continue
        lines.append(f"{k}={_fmt(v)}")
    if wall is not None:
        lines.append(f"wall_time={_fmt(float(wall))}")
    return "\n".join(lines) + "\n"


def render_text(fields: list) -> str:
    width = max((len(k) for k, _ in fields), default=0)
    out = []
    for k, v in fields:
        if isinstance(v, float) and not isinstance(v, bool):
            s = f"{v:.6g}" if k != "wall_time" else f"{v:.3f}s"
        else:
            s = _fmt(v)
        out.append(f"{k.replace('_', ' '):<{width}}  {s}")
    return "\n".join(out) + "\n"


def render(fields: list, fmt: str) -> str:
    return render_structured(fields) if fmt == "structured" else render_text(fields)


def parse_structured(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


def solve_fields(rep) -> list:
    """Common fields of a :class:`~sddflow.solver.SolveReport`."""
    return [
        ("solver", rep.solver),
        ("seed", rep.seed),
        ("iterations", rep.iterations),
        ("effective_updates", rep.effective_updates),
        ("st", float(rep.st)),
        ("tau", float(rep.tau)),
        ("energy", float(rep.energy)),
        ("dual_energy", float(rep.dual_energy)),
        ("gap", float(rep.gap)),
        ("residual_inf", float(rep.residual)),
        ("wall_time", float(rep.wall_time)),
    ]
