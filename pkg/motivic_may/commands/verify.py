"""``verify``: run one acceptance suite over cached pages and write its report."""

import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, Optional

from motivic_may.commands.common import Context
from motivic_may.services import verify as checks
from motivic_may.services.resolution import compute_ext

logger = logging.getLogger(__name__)

ORACLE_STEM = 20
ORACLE_F = 12
SHOWN_FAILURES = 10


def _e2(ctx: Context, bounds_args) -> Dict[str, Any]:
    seq = ctx.cached_sequence("motivic", ctx.bounds("motivic", *bounds_args))
    return checks.verify_e2_presentation(seq, ctx.dataset)


def _charts(mode: str) -> Callable:
    def suite(ctx: Context, bounds_args) -> Dict[str, Any]:
        seq = ctx.cached_sequence("motivic", ctx.bounds("motivic", *bounds_args))
        return checks.compare_chart(seq, ctx.dataset.chart, mode, checks.chart_weights(ctx.dataset))
    return suite


def _chow(ctx: Context, bounds_args) -> Dict[str, Any]:
    motivic = ctx.cached_sequence("motivic", ctx.bounds("motivic", *bounds_args))
    classical = ctx.cached_sequence("classical", ctx.bounds("classical"))
    return checks.chow_zero_compare(motivic, classical)


def _h1local(ctx: Context, bounds_args) -> Dict[str, Any]:
    seq = ctx.cached_sequence("a3-h1local", ctx.bounds("a3-h1local", *bounds_args))
    return checks.verify_h1_local(seq, ctx.dataset)


def _oracle(ctx: Context, bounds_args) -> Dict[str, Any]:
    seq = ctx.cached_sequence("motivic", ctx.bounds("motivic", *bounds_args))
    max_stem = min(ORACLE_STEM, seq.s_max)
    max_f = min(ORACLE_F, seq.f_max)
    _, dims = compute_ext(max_stem, max_f, ctx.settings.t_max, ctx.settings.workers)
    return checks.oracle_compare(seq, dims, max_stem, max_f)


def _hidden(ctx: Context, bounds_args) -> Dict[str, Any]:
    seq = ctx.cached_sequence("motivic", ctx.bounds("motivic", *bounds_args))
    return checks.check_hidden_extensions(seq, ctx.dataset.chart)


def _products(ctx: Context, bounds_args) -> Dict[str, Any]:
    seq = ctx.cached_sequence("motivic", ctx.bounds("motivic", *bounds_args))
    return checks.check_multiplications(seq, checks.product_symbols(ctx.dataset))


SUITES: Dict[str, Callable[[Context, tuple], Dict[str, Any]]] = {
    "e2": _e2,
    "charts-dims": _charts("dims"),
    "charts-shapes": _charts("shapes"),
    "chow": _chow,
    "h1local": _h1local,
    "oracle": _oracle,
    "hidden": _hidden,
    "products": _products,
}


def print_summary(report: Dict[str, Any]) -> None:
    if "error" in report:
        print(f"error {report['error']['code']}:")
        for detail in report["error"]["details"]:
            print(f"  {detail}")
        return
    body = report["report"]
    print(f"suite {report['suite']}: {body['summary']}")
    for name, status in body["checks"].items():
        print(f"  {name}: {status} ({body['counts'].get(name, 0)} checked)")
    failures = report["failures"]
    for failure in failures[:SHOWN_FAILURES]:
        tag = "INCOMPLETE" if failure.get("incomplete") else "FAIL"
        print(f"  {tag} {json.dumps(failure, sort_keys=True)}")
    if len(failures) > SHOWN_FAILURES:
        print(f"  ... {len(failures) - SHOWN_FAILURES} more failures in the report file")


def run(ctx: Context, suite: str, max_stem=None, max_f=None, report_path: Optional[str] = None) -> int:
    report = SUITES[suite](ctx, (max_stem, max_f))
    if report_path:
        path = Path(report_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    else:
        ctx.storage.write_json(f"report-{suite}.json", report)
        path = Path(ctx.storage.cache_dir) / f"report-{suite}.json"
    logger.info("Report written to %s", path)
    print_summary(report)
    if "error" in report:
        return 1
    return 0 if report["report"]["summary"] == "pass" else 1
