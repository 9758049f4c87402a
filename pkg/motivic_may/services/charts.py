"""Chart emission: TSV rows of Ext per (s, f, w) and an SVG rendering."""

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

import svgwrite

from motivic_may.errors import MayError
from motivic_may.services.algebra import multiply
from motivic_may.services.coeff import EchelonBasis
from motivic_may.services.pages import SpectralSequence
from motivic_may.services.tables import HIDDEN_MULTIPLIERS, ChartData
from motivic_may.services.verify import ext_summands

logger = logging.getLogger(__name__)

TSV_COLUMNS = ("s", "f", "w", "free_rank", "torsion_orders", "labels", "edges")
MULTIPLIERS = ("h0", "h1", "h2")
ORDER_COLORS = {None: "black", 1: "red", 2: "blue", 3: "green"}
TAU_COLORS = {0: "black", 1: "magenta", 2: "orange"}
LINE_STEPS = {"h0": (0, 1), "h1": (1, 1), "h2": (3, 1)}

Cell = Tuple[int, int]


def _in_range(s: int, f: int, stems: Tuple[int, int], max_f: Optional[int]) -> bool:
    return stems[0] <= s <= stems[1] and (max_f is None or f <= max_f)


def multiplication_edges(seq: SpectralSequence, cell: Cell) -> Dict[int, List[str]]:
    """h0, h1 and h2 products of each E-infinity summand generator, keyed by source weight.

    An edge reads ``h1:4,4,4`` for a product equal to the target generator and
    ``h0:3,2,2:tau1`` when it is tau times the target generator.
    """
    r = seq.last_page
    out: Dict[int, List[str]] = {}
    for summand, vec in seq.summands(r, *cell):
        elem = seq.element(vec, cell)
        for name in MULTIPLIERS:
            try:
                factor = seq.rep(name)
            except MayError:
                continue
            product = seq.e1.reduce(multiply(elem, factor))
            if product.is_zero():
                continue
            target, weight = seq.locate(product)
            pc = seq.page(r).get(target)
            if pc is None or pc.z is None:
                continue
            targets = pc.summands()
            span = EchelonBasis(pc.b.row_weights)
            for b in pc.b.basis():
                span.insert(b)
            for i, (_, gen) in enumerate(targets):
                span.insert(gen, frozenset({i}))
            residual, tags = span.reduce(seq.vector(product, target, weight))
            if not residual.is_zero():
                raise MayError(f"{name} times a generator in {cell} is not a cycle on E{r}")
            for i in sorted(tags):
                t_summand, _ = targets[i]
                power = t_summand.weight - weight
                edge = f"{name}:{target[0]},{target[1]},{t_summand.weight}"
                out.setdefault(summand.weight, []).append(edge + (f":tau{power}" if power else ""))
    return {w: sorted(edges) for w, edges in out.items()}


def chart_rows(seq: SpectralSequence, chart: ChartData, stems: Tuple[int, int] = (0, 70),
               max_f: Optional[int] = None) -> List[Dict[str, Any]]:
    """One row per (s, f, w) in which an Ext summand is generated, sorted."""
    ext = ext_summands(seq, chart)
    hidden: Dict[Tuple[int, int, int], List[str]] = {}
    for h in chart.hidden:
        if h.kind == "tau":
            continue
        s, f, w = h.source_degree
        hidden.setdefault((s, f, w), []).append(f"{h.kind}:{h.s},{h.f},{h.w}:hidden")
    rows = []
    for (s, f), parts in sorted(ext.items()):
        if not _in_range(s, f, stems, max_f):
            continue
        edges = multiplication_edges(seq, (s, f))
        by_weight: Dict[int, List] = {}
        for part in parts:
            by_weight.setdefault(part.weight, []).append(part)
        for w, group in sorted(by_weight.items()):
            rows.append({
                "s": s, "f": f, "w": w,
                "free_rank": sum(1 for p in group if p.order is None),
                "torsion_orders": sorted(p.order for p in group if p.order is not None),
                "labels": sorted({label for p in group for label in p.labels}),
                "edges": edges.get(w, []) + sorted(hidden.get((s, f, w), [])),
            })
    logger.info("Chart: %d rows for stems %d..%d", len(rows), *stems)
    return rows


def tsv_text(rows: Iterable[Dict[str, Any]]) -> str:
    lines = ["\t".join(TSV_COLUMNS)]
    for row in sorted(rows, key=lambda r: (r["s"], r["f"], r["w"])):
        lines.append("\t".join([
            str(row["s"]), str(row["f"]), str(row["w"]), str(row["free_rank"]),
            ",".join(str(o) for o in row["torsion_orders"]),
            ";".join(row["labels"]),
            ";".join(row["edges"]),
        ]))
    return "\n".join(lines) + "\n"


def write_tsv(rows: Iterable[Dict[str, Any]], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(tsv_text(rows))
    return path


def _parse_edge(edge: str) -> Tuple[str, Tuple[int, int, int], int, bool]:
    parts = edge.split(":")
    s, f, w = (int(x) for x in parts[1].split(","))
    power = next((int(p[3:]) for p in parts[2:] if p.startswith("tau")), 0)
    return parts[0], (s, f, w), power, "hidden" in parts[2:]


def render_svg(rows: List[Dict[str, Any]], path: Path, stems: Tuple[int, int] = (0, 70),
               max_f: int = 20, unit: int = 24) -> Path:
    """Dots colored by torsion order, product lines, and red arrows for h1 towers reaching the top."""
    width = (stems[1] - stems[0] + 3) * unit
    height = (max_f + 3) * unit
    dwg = svgwrite.Drawing(str(path), size=(width, height), profile="full")

    def coord(s: float, f: float) -> Tuple[float, float]:
        return ((s - stems[0] + 1.5) * unit, height - (f + 1.5) * unit)

    grid = dwg.add(dwg.g(id="grid", stroke="#dddddd"))
    for s in range(stems[0], stems[1] + 1):
        grid.add(dwg.line(start=coord(s, 0), end=coord(s, max_f)))
    for f in range(max_f + 1):
        grid.add(dwg.line(start=coord(stems[0], f), end=coord(stems[1], f)))
    labels = dwg.add(dwg.g(id="axes", font_size=unit // 2, fill="black"))
    for s in range(stems[0], stems[1] + 1, 2):
        x, y = coord(s, 0)
        labels.add(dwg.text(str(s), insert=(x - unit / 4, y + unit)))
    for f in range(0, max_f + 1, 2):
        x, y = coord(stems[0], f)
        labels.add(dwg.text(str(f), insert=(x - unit, y + unit / 6)))

    positions: Dict[Tuple[int, int, int], Tuple[float, float]] = {}
    by_cell: Dict[Cell, List[Dict[str, Any]]] = {}
    for row in rows:
        if _in_range(row["s"], row["f"], stems, max_f):
            by_cell.setdefault((row["s"], row["f"]), []).append(row)
    dots = dwg.add(dwg.g(id="classes"))
    for (s, f), cell_rows in sorted(by_cell.items()):
        classes = [(row["w"], order) for row in sorted(cell_rows, key=lambda r: r["w"])
                   for order in [None] * row["free_rank"] + list(row["torsion_orders"])]
        for k, (w, order) in enumerate(classes):
            x, y = coord(s + (k - (len(classes) - 1) / 2) * 0.25, f)
            positions.setdefault((s, f, w), (x, y))
            dots.add(dwg.circle(center=(x, y), r=unit / 8, fill=ORDER_COLORS.get(order, "gray")))

    lines = dwg.add(dwg.g(id="products", stroke_width=1))
    for row in rows:
        start = positions.get((row["s"], row["f"], row["w"]))
        if start is None:
            continue
        for edge in row["edges"]:
            kind, target, power, hidden = _parse_edge(edge)
            end = positions.get(target)
            if kind == "h1" and target[1] > max_f:
                ds, df = LINE_STEPS[kind]
                lines.add(dwg.line(start=start, end=coord(row["s"] + ds, row["f"] + df), stroke="red"))
                continue
            if end is None:
                continue
            extra = {"stroke_dasharray": "3,3"} if hidden else {}
            lines.add(dwg.line(start=start, end=end, stroke=TAU_COLORS.get(power, "gray"), **extra))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    dwg.save(pretty=True)
    return Path(path)


def hidden_summary(chart: ChartData) -> Dict[str, int]:
    """Number of hidden extensions per multiplier."""
    return {kind: len(chart.hidden_of(kind)) for kind in HIDDEN_MULTIPLIERS}


