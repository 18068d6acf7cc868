"""Deterministic SVG charts for report records.

The SVG is assembled by hand from a short list of primitives so that two runs
over the same records file produce byte-identical output. Coordinates are
always formatted with four decimal places and elements are emitted in file
order; nothing depends on dict iteration or library versions.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .errors import ParseError

WIDTH, HEIGHT = 640, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 30, 60

PALETTE = ("#1b6ca8", "#d1495b", "#66a182", "#edae49", "#8d5a97", "#5c5c5c",
           "#2e4057", "#c47335")

DASHES = ("none", "6,3", "2,2", "8,2,2,2")


@dataclass
class RecordRow:
    method: str
    cost: str
    arm: str
    r: int
    share: float
    mean_retries: float
    mean_l1: float
    mean_l2: float


@dataclass
class Records:
    kind: str
    seed: int
    r_max: int
    rows: list[RecordRow]
    theorem_optimal: float | None = None
    theorem_identity: float | None = None
    theorem_random: list[float] | None = None


def parse_records(path: str) -> Records:
    """Read a records file back into memory; raises ParseError on mismatch."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "nonadv-report v1":
        raise ParseError(f"{path}: not a nonadv-report v1 file")
    kind, seed, r_max = "", 0, 0
    rows: list[RecordRow] = []
    t_opt = t_ident = None
    t_rand: list[float] = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        head, _, rest = line.partition(" ")
        try:
            if head == "kind":
                kind = rest
            elif head == "seed":
                seed = int(rest)
            elif head == "rmax":
                r_max = int(rest)
            elif head == "config":
                pass
            elif head == "row":
                kv = dict(part.split("=", 1) for part in rest.split(" "))
                rows.append(RecordRow(
                    method=kv["method"], cost=kv["cost"], arm=kv["arm"],
                    r=int(kv["r"]), share=float(kv["share"]),
                    mean_retries=float(kv["mean_retries"]),
                    mean_l1=float(kv["mean_l1"]), mean_l2=float(kv["mean_l2"])))
            elif head == "theorem":
                kv = dict(part.split("=", 1) for part in rest.split(" "))
                t_opt = float(kv["optimal"])
                t_ident = float(kv["identity"])
            elif head == "theorem_random":
                _, value = rest.split(" ", 1)
                t_rand.append(float(value))
            else:
                raise ParseError(f"{path}:{ln}: unknown record {head!r}")
        except (KeyError, ValueError) as exc:
            raise ParseError(f"{path}:{ln}: malformed record: {exc}") from exc
    return Records(kind=kind, seed=seed, r_max=r_max, rows=rows,
                   theorem_optimal=t_opt, theorem_identity=t_ident,
                   theorem_random=t_rand or None)


# ---------------------------------------------------------------------------
# SVG primitives


def _f(v: float) -> str:
    return f"{v:.4f}"


class SvgCanvas:
    def __init__(self, title: str):
        self.parts: list[str] = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
            "<!-- nonadv-chart v1 -->",
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" '
            f'font-family="monospace" font-size="14">{title}</text>',
        ]

    def line(self, x1, y1, x2, y2, color="#000000", width=1.0):
        self.parts.append(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
            f'stroke="{color}" stroke-width="{_f(width)}"/>')

    def polyline(self, points, color, dash="none"):
        coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in points)
        dash_attr = "" if dash == "none" else f' stroke-dasharray="{dash}"'
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="1.5000"{dash_attr}/>')

    def rect(self, x, y, w, h, color):
        self.parts.append(
            f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
            f'fill="{color}"/>')

    def circle(self, x, y, r, color):
        self.parts.append(
            f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(r)}" fill="{color}"/>')

    def text(self, x, y, s, anchor="middle", size=11, color="#000000"):
        self.parts.append(
            f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}" '
            f'font-family="monospace" font-size="{size}" fill="{color}">{s}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _plot_area():
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    return x0, x1, y0, y1


def _axes(canvas: SvgCanvas, x_label: str, y_label: str):
    x0, x1, y0, y1 = _plot_area()
    canvas.line(x0, y0, x1, y0)
    canvas.line(x0, y0, x0, y1)
    canvas.text((x0 + x1) / 2, HEIGHT - 12, x_label)
    canvas.text(16, (y0 + y1) / 2, y_label, anchor="middle")


def _series_label(row: RecordRow, vary_cost: bool, vary_arm: bool) -> str:
    label = row.method
    if vary_cost:
        label += f"/{row.cost}"
    if vary_arm:
        label += f" ({row.arm})"
    return label


def _group_rows(records: Records):
    """Rows grouped into per-series share curves, file order preserved."""
    series: dict[tuple, list[RecordRow]] = {}
    order: list[tuple] = []
    for row in records.rows:
        key = (row.method, row.cost, row.arm)
        if key not in series:
            series[key] = []
            order.append(key)
        series[key].append(row)
    costs = {k[1] for k in order}
    arms = {k[2] for k in order}
    vary_cost, vary_arm = len(costs) > 1, len(arms) > 1
    return order, series, vary_cost, vary_arm


def render_share_chart(records: Records) -> str:
    canvas = SvgCanvas(f"{records.kind}: non-adversarial share by retry")
    _axes(canvas, "retry round r", "share")
    x0, x1, y0, y1 = _plot_area()
    r_max = records.r_max
    order, series, vary_cost, vary_arm = _group_rows(records)

    def sx(r):
        return x0 + (x1 - x0) * (r / max(r_max, 1))

    def sy(v):
        return y0 - (y0 - y1) * v

    for r in range(r_max + 1):
        canvas.line(sx(r), y0, sx(r), y0 + 4)
        canvas.text(sx(r), y0 + 16, str(r))
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        canvas.line(x0 - 4, sy(tick), x0, sy(tick))
        canvas.text(x0 - 8, sy(tick) + 4, f"{tick:.2f}", anchor="end")

    for i, key in enumerate(order):
        rows = sorted(series[key], key=lambda r: r.r)
        pts = [(sx(r.r), sy(r.share)) for r in rows]
        color = PALETTE[i % len(PALETTE)]
        dash = DASHES[(i // len(PALETTE)) % len(DASHES)]
        canvas.polyline(pts, color, dash)
        for x, y in pts:
            canvas.circle(x, y, 2.5, color)
        label = _series_label(rows[0], vary_cost, vary_arm)
        ly = MARGIN_T + 14 * i
        canvas.line(x1 - 150, ly, x1 - 130, ly, color=color, width=2.0)
        canvas.text(x1 - 124, ly + 4, label, anchor="start", size=10)
    return canvas.render()


def render_cost_chart(records: Records) -> str:
    canvas = SvgCanvas(f"{records.kind}: mean L1 cost of converged recourse")
    _axes(canvas, "", "mean L1")
    x0, x1, y0, y1 = _plot_area()
    order, series, vary_cost, vary_arm = _group_rows(records)
    values = []
    for key in order:
        row = series[key][0]
        values.append((_series_label(row, vary_cost, vary_arm), row.mean_l1))
    finite = [v for _, v in values if v == v]
    top = max(finite) if finite else 1.0
    top = top if top > 0 else 1.0
    slot = (x1 - x0) / max(len(values), 1)
    for tick in (0.0, 0.5, 1.0):
        y = y0 - (y0 - y1) * tick
        canvas.line(x0 - 4, y, x0, y)
        canvas.text(x0 - 8, y + 4, f"{top * tick:.2f}", anchor="end")
    for i, (label, v) in enumerate(values):
        color = PALETTE[i % len(PALETTE)]
        cx = x0 + slot * (i + 0.5)
        if v == v:
            h = (y0 - y1) * (v / top)
            canvas.rect(cx - slot * 0.3, y0 - h, slot * 0.6, h, color)
            canvas.text(cx, y0 - h - 4, f"{v:.2f}", size=9)
        canvas.text(cx, y0 + 16, label, size=9)
    return canvas.render()


def render_theorem_chart(records: Records) -> str:
    canvas = SvgCanvas(f"{records.kind}: mean nadv by weighting")
    _axes(canvas, "", "mean nadv")
    x0, x1, y0, y1 = _plot_area()
    rand = records.theorem_random or []
    bars = [("optimal", records.theorem_optimal),
            ("identity", records.theorem_identity)]
    top = max([v for _, v in bars if v is not None] + rand + [1e-12]) * 1.15
    slot = (x1 - x0) / 3
    for tick in (0.0, 0.5, 1.0):
        y = y0 - (y0 - y1) * tick
        canvas.line(x0 - 4, y, x0, y)
        canvas.text(x0 - 8, y + 4, f"{top * tick:.2f}", anchor="end")
    for i, (label, v) in enumerate(bars):
        cx = x0 + slot * (i + 0.5)
        if v is not None:
            h = (y0 - y1) * (v / top)
            canvas.rect(cx - slot * 0.25, y0 - h, slot * 0.5, h, PALETTE[i])
            canvas.text(cx, y0 - h - 4, f"{v:.3f}", size=9)
        canvas.text(cx, y0 + 16, label, size=10)
    cx = x0 + slot * 2.5
    for v in rand:
        y = y0 - (y0 - y1) * (v / top)
        canvas.line(cx - slot * 0.2, y, cx + slot * 0.2, y,
                    color="#999999", width=0.8)
    canvas.text(cx, y0 + 16, "random", size=10)
    return canvas.render()


def render_plots(records_path: str, outdir: str) -> list[str]:
    """Render charts for one records file; returns the written SVG paths."""
    records = parse_records(records_path)
    if not records.rows and records.theorem_optimal is None:
        raise ParseError(f"{records_path}: report contains nothing to plot")
    written = []
    if records.theorem_optimal is not None:
        path = os.path.join(outdir, f"{records.kind}_theorem.svg")
        with open(path, "w") as fh:
            fh.write(render_theorem_chart(records))
        written.append(path)
    if records.rows:
        path = os.path.join(outdir, f"{records.kind}_shares.svg")
        with open(path, "w") as fh:
            fh.write(render_share_chart(records))
        written.append(path)
        path = os.path.join(outdir, f"{records.kind}_costs.svg")
        with open(path, "w") as fh:
            fh.write(render_cost_chart(records))
        written.append(path)
    return written
