"""Plain-text renderings of run summaries for the terminal."""

from __future__ import annotations

from typing import Any, Dict


def format_test_report_text(summary: Dict[str, Any]) -> str:
    test = summary.get("test", {})
    rejected_at = test.get("rejected_at")
    lines = [
        f"Sequential test ({summary.get('functional', '?')}, {summary.get('strategy', '?')})",
        "-" * 40,
        f"Null value            : {summary.get('null')}",
        f"Family                : {summary.get('family', {}).get('kind', '?')}",
        f"alpha                 : {test.get('alpha')}",
        f"Observations used     : {test.get('steps', 0)}",
        f"Final log-wealth      : {test.get('final_log_wealth', 0.0):.4f}",
        f"Max log-wealth        : {test.get('running_max_log_wealth', 0.0):.4f}",
        f"Decision              : {'reject at t=' + str(rejected_at) if rejected_at else 'no rejection'}",
    ]
    if summary.get("degenerate_rows"):
        lines.append(f"Zero-covariate rows   : {summary['degenerate_rows']}")
    return "\n".join(lines)


def format_confseq_report_text(summary: Dict[str, Any]) -> str:
    lines = [
        f"Confidence sequence ({summary.get('functional', '?')}, {summary.get('strategy', '?')})",
        "-" * 40,
        f"Candidates            : {summary.get('candidates', 0)}",
        f"Observations used     : {summary.get('steps', 0)}",
        f"Surviving candidates  : {summary.get('members', 0)}",
    ]
    hull = summary.get("hull")
    if hull is None:
        lines.append("Hull                  : (empty)")
    else:
        for i, (lo, hi) in enumerate(zip(hull["lower"], hull["upper"]), start=1):
            lines.append(f"Coordinate {i:<11}: [{lo:.4f}, {hi:.4f}]")
    if "covers_truth" in summary:
        lines.append(f"Covers the true value : {summary['covers_truth']}")
    return "\n".join(lines)


def format_montecarlo_report_text(summary: Dict[str, Any]) -> str:
    lines = [
        f"Monte Carlo ({summary.get('scenario')}, {summary.get('strategy')})",
        "-" * 40,
        f"Replications          : {summary.get('replications')}",
        f"Horizon               : {summary.get('horizon')}",
        f"Rejection rate        : {summary.get('rejection_rate', 0.0):.4f} "
        f"[{summary.get('ci_low', 0.0):.4f}, {summary.get('ci_high', 0.0):.4f}]",
        f"alpha + 2 s.e.        : {summary.get('alpha', 0.0) + summary.get('ville_margin', 0.0):.4f}",
    ]
    median = summary.get("median_rejection_time")
    lines.append(f"Median rejection time : {median if median is not None else '(none)'}")
    for horizon, slope in (summary.get("regret_slopes") or {}).items():
        lines.append(f"Regret/T at T={horizon:<7}: {slope:.5f}")
    if summary.get("coverage") is not None:
        lines.append(f"Coverage              : {summary['coverage']:.4f}")
    return "\n".join(lines)
