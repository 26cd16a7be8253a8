"""Minimal static SVG output: rescaled spectra vs 1/N with ladder guides."""


def _map(v, lo, hi, out_lo, out_hi):
    if hi == lo:
        return 0.5 * (out_lo + out_hi)
    return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)


def spectrum_svg(report, path, width=640, height=480, pad=50):
    xs = [1.0 / row.n for row in report.rows]
    if not xs:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write('<svg xmlns="http://www.w3.org/2000/svg"/>\n')
        return
    y_top = 1.05 * max(
        max((max(row.rescaled) for row in report.rows if row.rescaled), default=1.0),
        report.ladder.values[-1],
    )
    x_lo, x_hi = 0.0, 1.1 * max(xs)

    def px(v):
        return _map(v, x_lo, x_hi, pad, width - pad)

    def py(v):
        return _map(v, 0.0, y_top, height - pad, pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for itv in report.intervals:
        parts.append(
            f'<rect x="{pad}" y="{py(itv["b"]):.2f}" width="{width - 2 * pad}" '
            f'height="{py(itv["a"]) - py(itv["b"]):.2f}" fill="#cfe8cf"/>'
        )
    for lam in report.ladder.values:
        parts.append(
            f'<line x1="{pad}" y1="{py(lam):.2f}" x2="{width - pad}" y2="{py(lam):.2f}" '
            f'stroke="#888" stroke-dasharray="6,4"/>'
        )
    for row in report.rows:
        x = px(1.0 / row.n)
        for v in row.rescaled:
            if 0 <= v <= y_top:
                parts.append(f'<circle cx="{x:.2f}" cy="{py(v):.2f}" r="2" fill="#1f4e99"/>')
    parts.append(
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" '
        f'stroke="black"/>'
    )
    parts.append(f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>')
    parts.append(
        f'<text x="{width // 2}" y="{height - 12}" font-size="13" text-anchor="middle">'
        "1 / N</text>"
    )
    parts.append(
        f'<text x="14" y="{height // 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 14 {height // 2})">rescaled eigenvalue</text>'
    )
    for row in report.rows:
        parts.append(
            f'<text x="{px(1.0 / row.n):.2f}" y="{height - pad + 16}" font-size="11" '
            f'text-anchor="middle">1/{row.n}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
