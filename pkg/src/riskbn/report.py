"""Canonical report serialization.

Reports are emitted as JSON with sorted keys and every float rounded to six
significant digits, so the CLI and the HTTP service produce byte-identical
documents for identical inputs and golden-file diffs stay stable.
"""

from __future__ import annotations

import json
import math
from typing import Any


def round_floats(obj: Any):
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return repr(obj)
        return float(f"{obj:.6g}")
    if isinstance(obj, dict):
        return {str(k): round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(round_floats(obj), sort_keys=True, separators=(",", ":"))


def render_table(report_dict: dict) -> str:
    """Human-readable rendering of an assessment report."""
    lines = []
    lines.append(f"Product: {report_dict['product']}")
    lines.append("")
    lines.append(f"{'posterior':34s} {'mean':>12s} {'p5':>12s} {'p50':>12s} {'p95':>12s}")
    for name, m in sorted(report_dict["posteriors"].items()):
        lines.append(
            f"{name:34s} {m['mean']:12.6g} {m['p5']:12.6g} {m['p50']:12.6g} {m['p95']:12.6g}"
        )
    lines.append("")
    counts = report_dict["injury_counts"]
    lines.append(
        f"Expected injured instances: major {counts['major_mean']:.6g}, minor {counts['minor_mean']:.6g}"
    )
    lines.append("")
    for name, dist in sorted(report_dict["distributions"].items()):
        body = "  ".join(f"{state}={p:.3f}" for state, p in dist.items())
        lines.append(f"{name:34s} {body}")
    verdict = report_dict["verdict"]
    lines.append("")
    lines.append(
        f"Risk level: {verdict['risk_level_mode']}  |  P(intervene) = {verdict['p_intervene']:.3f}"
        f"  |  intervention recommended: {'yes' if verdict['intervention_recommended'] else 'no'}"
    )
    if "rapex_comparison" in report_dict:
        r = report_dict["rapex_comparison"]
        lines.append(
            f"RAPEX comparison: probability {r['probability']:.6g} at severity {r['severity']}"
            f" -> {r['risk_class']} (band {r['band']})"
        )
    return "\n".join(lines) + "\n"
