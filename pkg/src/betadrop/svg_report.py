"""Hand-rolled static SVG charts for report files.

Deterministic output: same report dict, same bytes. Two charts: a per-class
Brier bar chart and a stacked correct/incorrect bar chart over the
confidence bins (mean across folds).
"""

from __future__ import annotations

_W, _H = 480, 280
_ML, _MB, _MT = 56, 46, 24


def _frame(title: str, body: str) -> str:
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="11">\n'
        f'<rect width="{_W}" height="{_H}" fill="white"/>\n'
        f'<text x="{_W / 2:.1f}" y="15" text-anchor="middle" font-size="13">{title}</text>\n'
        f"{body}</svg>\n"
    )


def _bars(values: list[float], labels: list[str], color: str, vmax: float) -> str:
    plot_w, plot_h = _W - _ML - 16, _H - _MT - _MB
    n = len(values)
    band = plot_w / max(n, 1)
    parts = [
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_MT + plot_h}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT + plot_h}" x2="{_ML + plot_w}" y2="{_MT + plot_h}" stroke="black"/>',
        f'<text x="12" y="{_MT + 6}" font-size="10">{vmax:.3g}</text>',
    ]
    for i, (v, lab) in enumerate(zip(values, labels)):
        h = 0.0 if vmax <= 0 else (v / vmax) * plot_h
        x = _ML + i * band + band * 0.15
        parts.append(
            f'<rect x="{x:.1f}" y="{_MT + plot_h - h:.1f}" width="{band * 0.7:.1f}" '
            f'height="{h:.1f}" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{x + band * 0.35:.1f}" y="{_MT + plot_h + 14}" '
            f'text-anchor="middle" font-size="9">{lab}</text>'
        )
        parts.append(
            f'<text x="{x + band * 0.35:.1f}" y="{_MT + plot_h - h - 3:.1f}" '
            f'text-anchor="middle" font-size="9">{v:.3f}</text>'
        )
    return "\n".join(parts) + "\n"


def per_class_brier_svg(report: dict) -> str:
    values = [float(v) for v in report["mean"]["per_class_brier"]]
    labels = [str(c) for c in report["dataset"]["classes"]]
    vmax = max(max(values), 1e-9) * 1.2
    return _frame("per-class Brier (mean over folds)", _bars(values, labels, "#4878a8", vmax))


def bins_svg(report: dict) -> str:
    folds = report["folds"]
    if not folds:
        return _frame("confidence bins", "")
    nbins = len(folds[0]["metrics"]["bins"])
    correct = [0] * nbins
    incorrect = [0] * nbins
    for f in folds:
        for j, b in enumerate(f["metrics"]["bins"]):
            correct[j] += b["correct"]
            incorrect[j] += b["incorrect"]
    edges = folds[0]["metrics"]["bins"]
    labels = [f"{b['lo']:.2f}-{b['hi']:.2f}" for b in edges]
    plot_w, plot_h = _W - _ML - 16, _H - _MT - _MB
    vmax = max(max(c + w for c, w in zip(correct, incorrect)), 1) * 1.2
    band = plot_w / nbins
    parts = [
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_MT + plot_h}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT + plot_h}" x2="{_ML + plot_w}" y2="{_MT + plot_h}" stroke="black"/>',
        f'<rect x="{_ML}" y="4" width="10" height="10" fill="#4878a8"/>'
        f'<text x="{_ML + 14}" y="13">correct</text>',
        f'<rect x="{_ML + 90}" y="4" width="10" height="10" fill="#c05050"/>'
        f'<text x="{_ML + 104}" y="13">incorrect</text>',
    ]
    for j in range(nbins):
        x = _ML + j * band + band * 0.15
        hc = correct[j] / vmax * plot_h
        hw = incorrect[j] / vmax * plot_h
        parts.append(
            f'<rect x="{x:.1f}" y="{_MT + plot_h - hc:.1f}" width="{band * 0.7:.1f}" '
            f'height="{hc:.1f}" fill="#4878a8"/>'
        )
        parts.append(
            f'<rect x="{x:.1f}" y="{_MT + plot_h - hc - hw:.1f}" width="{band * 0.7:.1f}" '
            f'height="{hw:.1f}" fill="#c05050"/>'
        )
        parts.append(
            f'<text x="{x + band * 0.35:.1f}" y="{_MT + plot_h + 14}" '
            f'text-anchor="middle" font-size="9">{labels[j]}</text>'
        )
    return _frame("predictions by confidence bin", "\n".join(parts) + "\n")


def report_svgs(report: dict) -> dict[str, str]:
    return {
        "per_class_brier.svg": per_class_brier_svg(report),
        "bins.svg": bins_svg(report),
    }
