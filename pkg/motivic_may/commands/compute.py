"""``compute``: run the page driver for one profile and cache every page."""

import logging
import time
from typing import Any, Dict

from motivic_may.commands.common import Context, parse_through
from motivic_may.services.pages import SpectralSequence
from motivic_may.services.storage import load_sequence, save_sequence

logger = logging.getLogger(__name__)


def summarize(seq: SpectralSequence) -> Dict[str, Any]:
    """Number of core cells with nonzero homology on each page."""
    pages = {}
    for r in sorted(seq.pages):
        page = seq.pages[r]
        nonzero = 0
        for cell in seq.core:
            pc = page[cell]
            if len(pc.z) > len(pc.b) or pc.z.weights() != pc.b.weights():
                nonzero += 1
        pages[f"E{r}"] = {"nonzero_cells": nonzero}
    return {
        "profile": seq.profile.name,
        "bounds": {"s_max": seq.s_max, "f_max": seq.f_max, "through": seq.through},
        "pages": pages,
        "diagnostics": len(seq.diagnostics),
    }


def run(ctx: Context, profile: str, max_stem=None, max_f=None, through=None, force: bool = False) -> int:
    bounds = ctx.bounds(profile, max_stem, max_f, parse_through(through))
    seq = ctx.sequence(profile, bounds)
    if not force and load_sequence(ctx.storage, seq, ctx.data_hash):
        logger.info("Pages for %s already cached", profile)
    else:
        started = time.time()
        seq.run_all()
        logger.info("Computed %s through E%d in %.1fs", profile, seq.last_page, time.time() - started)
        save_sequence(ctx.storage, seq, ctx.data_hash)
    summary = summarize(seq)
    print(f"profile {profile}: E1..E{seq.last_page} on {len(seq.core)} cells "
          f"(s <= {seq.s_max}, f <= {seq.f_max})")
    for name, info in summary["pages"].items():
        print(f"  {name}: {info['nonzero_cells']} nonzero cells")
    if summary["diagnostics"]:
        print(f"  {summary['diagnostics']} data diagnostics recorded (non-strict run)")
    return 0
