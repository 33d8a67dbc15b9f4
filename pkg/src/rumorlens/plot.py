"""Static SVG timeline of one claim: certainty per time bin around the resolution point.

Encoding (also written into every SVG as comments):

- x: bin index, ``floor((t - t_resolving) / width)``
- y: mean certainty of the bin's tweets, on [0, 1]
- marker area: ``AREA_PER_ITEM`` square pixels per tweet in the bin
- fill: linear interpolation from ``COLOR_LOW`` (FCR 0) to ``COLOR_HIGH`` (FCR 1)
  over the bin's mean FCR
- shape: triangle for the bin holding the resolving tweet (bin 0), circle otherwise
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from rumorlens.certainty import GlmModel, aggregate_certainty
from rumorlens.corpus import Claim, index_tweets
from rumorlens.features import BIN_WIDTH, claim_ratios
from rumorlens.io import atomic_write_text, write_csv
from rumorlens.lexicon import Lexicon

AREA_PER_ITEM = 60.0
COLOR_LOW = (44, 123, 182)
COLOR_HIGH = (215, 25, 28)
WIDTH, HEIGHT = 640, 360
MARGIN = 48
CSV_HEADER = ["bin", "certainty", "fcr", "count", "area", "color", "shape"]


@dataclass(frozen=True)
class TimelineBin:
    bin: int
    certainty: float
    fcr: float
    count: int

    @property
    def area(self) -> float:
        return AREA_PER_ITEM * self.count

    @property
    def color(self) -> str:
        return fcr_color(self.fcr)

    @property
    def shape(self) -> str:
        return "triangle" if self.bin == 0 else "circle"


def fcr_color(fcr: float) -> str:
    t = min(max(float(fcr), 0.0), 1.0)
    rgb = [round(lo + t * (hi - lo)) for lo, hi in zip(COLOR_LOW, COLOR_HIGH)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def timeline_bins(
    claim: Claim,
    lexicon: Lexicon,
    model: GlmModel | None = None,
    source: str = "predicted",
    width: float = BIN_WIDTH,
) -> list[TimelineBin]:
    """Bin a claim's tweets; ``source`` is "predicted" (needs ``model``) or "annotated".

    Annotated mode keeps only tweets with a usable certainty aggregate.
    """
    resolving = claim.resolving_tweet
    if resolving is None:
        raise ValueError(f"claim {claim.id!r} has no resolving tweet")
    ratios = claim_ratios(claim, lexicon)
    tweets = [t for _, t in index_tweets(claim)]
    if source == "predicted":
        if model is None:
            raise ValueError("predicted certainty needs a fitted model")
        scores: list[float | None] = list(model.predict(np.array([r.as_array() for r in ratios])))
    elif source == "annotated":
        scores = [aggregate_certainty(t.certainty_labels) if t.certainty_labels else None for t in tweets]
    else:
        raise ValueError(f"unknown certainty source {source!r}")

    groups: dict[int, list[tuple[float, float]]] = {}
    for tweet, ratio, score in zip(tweets, ratios, scores):
        if score is None:
            continue
        b = math.floor((tweet.timestamp - resolving.timestamp) / width)
        groups.setdefault(b, []).append((float(score), ratio.fcr))
    return [
        TimelineBin(b, float(np.mean([s for s, _ in v])), float(np.mean([f for _, f in v])), len(v))
        for b, v in sorted(groups.items())
    ]


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def render_svg(bins: Sequence[TimelineBin], title: str = "") -> str:
    if not bins:
        raise ValueError("nothing to plot")
    # axis always includes the resolution point
    lo = min(min(b.bin for b in bins), 0)
    hi = max(max(b.bin for b in bins), 0)
    span = max(hi - lo, 1)
    plot_w, plot_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def sx(b: int) -> float:
        return MARGIN + (b - lo) / span * plot_w if hi > lo else WIDTH / 2

    def sy(v: float) -> float:
        return MARGIN + (1.0 - v) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        "<!-- x: bin index relative to the resolving tweet; y: mean certainty in [0,1] -->",
        f"<!-- area-per-item: {AREA_PER_ITEM} -->",
        f"<!-- color-scale: linear fcr 0 {fcr_color(0)} fcr 1 {fcr_color(1)} -->",
        "<!-- shape: triangle marks bin 0 (resolving tweet), circle elsewhere -->",
    ]
    if title:
        out.append(f'<text x="{MARGIN}" y="{MARGIN / 2:.0f}" font-size="14">{_escape(title)}</text>')
    out.append(
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>'
    )
    out.append(f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>')
    for v in (0.0, 0.5, 1.0):
        out.append(f'<text x="{MARGIN - 30}" y="{_fmt(sy(v) + 4)}" font-size="10">{v:.1f}</text>')
    out.append(
        f'<line x1="{_fmt(sx(0))}" y1="{MARGIN}" x2="{_fmt(sx(0))}" y2="{HEIGHT - MARGIN}" '
        'stroke="gray" stroke-dasharray="4 3"/>'
    )
    for b in bins:
        x, y = sx(b.bin), sy(b.certainty)
        data = f'data-bin="{b.bin}" data-count="{b.count}" data-area="{_fmt(b.area)}" data-fcr="{b.fcr:.6f}"'
        if b.shape == "triangle":
            # equilateral triangle with the bin's area, centred on its centroid
            side = math.sqrt(4 * b.area / math.sqrt(3))
            h = side * math.sqrt(3) / 2
            pts = [(x, y - 2 * h / 3), (x - side / 2, y + h / 3), (x + side / 2, y + h / 3)]
            pts_s = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in pts)
            out.append(f'<polygon points="{pts_s}" fill="{b.color}" stroke="black" {data}/>')
        else:
            r = math.sqrt(b.area / math.pi)
            out.append(
                f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" fill="{b.color}" stroke="black" {data}/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def csv_rows(bins: Sequence[TimelineBin]):
    for b in bins:
        yield [b.bin, b.certainty, b.fcr, b.count, b.area, b.color, b.shape]


def write_timeline(bins: Sequence[TimelineBin], svg_path, csv_path, title: str = "") -> None:
    atomic_write_text(svg_path, render_svg(bins, title))
    write_csv(csv_path, CSV_HEADER, csv_rows(bins))
