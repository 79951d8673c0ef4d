"""SVG rendering of a prune result: one patch grid per frame.

ATS tokens are blue. Each DTM anchor and the tokens merged into it share one
fill colour; anchors get a red border, merged tokens a border in the group
colour. Dropped tokens are grey. Anchor frames carry a red outline and segment
starts a brown vertical rule.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from ..core import Origin, PruneResult

CELL = 8
GAP = 12
PER_ROW = 8
ATS_COLOR = "#1f77b4"
ANCHOR_BORDER = "#d62728"
DROPPED = "#dddddd"
BOUNDARY = "#8c564b"


def _group_color(row: int) -> str:
    hue = (row * 137.508) % 360.0
    return f"hsl({hue:.1f},60%,62%)"


def render_svg(result: PruneResult) -> str:
    F, ph, pw = result.frame_count, result.pool_out_h, result.pool_out_w
    fw, fh = pw * CELL, ph * CELL
    cols = min(F, PER_ROW)
    rows = (F + PER_ROW - 1) // PER_ROW
    width = GAP + cols * (fw + GAP)
    height = GAP + rows * (fh + GAP + 10)
    anchor_frames = {f for b in result.budgets for f in b.anchor_frames}
    segment_starts = {s for s, _ in result.segmentation}

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<title>{escape(f'{len(result)} of {F * result.tokens_per_frame} tokens retained')}</title>",
    ]
    for f in range(F):
        x0 = GAP + (f % PER_ROW) * (fw + GAP)
        y0 = GAP + (f // PER_ROW) * (fh + GAP + 10)
        out.append(f'<g class="frame" data-frame="{f}">')
        for s in range(result.tokens_per_frame):
            x = x0 + (s % pw) * CELL
            y = y0 + (s // pw) * CELL
            row = int(result.assignment[f, s])
            if row < 0:
                fill = stroke = DROPPED
            elif result.origin[row] == Origin.ATS:
                fill = stroke = ATS_COLOR
            else:
                fill = _group_color(row)
                is_anchor = result.frame_index[row] == f and result.spatial_index[row] == s
                stroke = ANCHOR_BORDER if is_anchor else fill
            out.append(
                f'<rect class="patch" x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
                f'fill="{fill}" stroke="{stroke}" stroke-width="1"/>'
            )
        if f in anchor_frames:
            out.append(
                f'<rect class="anchor-frame" x="{x0 - 2}" y="{y0 - 2}" width="{fw + 4}" '
                f'height="{fh + 4}" fill="none" stroke="{ANCHOR_BORDER}" stroke-width="2"/>'
            )
        if f in segment_starts and f > 0:
            lx = x0 - GAP // 2
            out.append(
                f'<line class="segment-boundary" x1="{lx}" y1="{y0 - 4}" x2="{lx}" '
                f'y2="{y0 + fh + 4}" stroke="{BOUNDARY}" stroke-width="3"/>'
            )
        out.append(f'<text x="{x0}" y="{y0 + fh + 9}" font-size="8">{f}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
