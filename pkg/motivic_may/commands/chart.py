"""``chart``: emit Ext as TSV rows or an SVG chart."""

import logging
from pathlib import Path
from typing import Optional, Tuple

from motivic_may.commands.common import Context
from motivic_may.errors import ConfigError
from motivic_may.services import charts
from motivic_may.services.resolution import compute_ext, summand_rows

logger = logging.getLogger(__name__)


def parse_range(text: Optional[str], default: Tuple[int, int]) -> Tuple[int, int]:
    """``a..b`` or ``a-b`` stem range."""
    if not text:
        return default
    for sep in ("..", "-", ":"):
        if sep in text:
            low, high = text.split(sep, 1)
            try:
                stems = (int(low), int(high))
            except ValueError:
                break
            if stems[0] > stems[1]:
                raise ConfigError(f"empty stem range {text!r}")
            return stems
    raise ConfigError(f"cannot read stem range {text!r}; use a..b")


def run(ctx: Context, fmt: str, out: str, stem_range: Optional[str] = None, max_stem=None, max_f=None,
        source: str = "einf") -> int:
    if source == "resolution":
        stems = parse_range(stem_range, (0, max_stem if max_stem is not None else 20))
        top_f = max_f if max_f is not None else 12
        resolution, _ = compute_ext(stems[1], top_f, ctx.settings.t_max, ctx.settings.workers)
        rows = [row for row in summand_rows(resolution.ext_summands(stems[1], top_f)) if row["s"] >= stems[0]]
    else:
        seq = ctx.cached_sequence("motivic", ctx.bounds("motivic", max_stem, max_f))
        stems = parse_range(stem_range, (0, seq.s_max))
        top_f = seq.f_max
        rows = charts.chart_rows(seq, ctx.dataset.chart, stems, top_f)
    path = Path(out)
    if fmt == "tsv":
        charts.write_tsv(rows, path)
    else:
        charts.render_svg(rows, path, stems, top_f)
    print(f"wrote {len(rows)} rows for stems {stems[0]}..{stems[1]} to {path}")
    if source != "resolution":
        hidden = charts.hidden_summary(ctx.dataset.chart)
        print("hidden extensions: " + ", ".join(f"{k}={v}" for k, v in hidden.items()))
    return 0
