"""Static SVG phase diagram: S against eta, points coloured by stability."""
from xml.sax.saxutils import escape

COLOURS = {"min": "#1f77b4", "max": "#d62728", "saddle": "#ff7f0e", "degenerate": "#7f7f7f"}
LINES = {"isotropic": "#555555", "prolate": "#2ca02c", "oblate": "#9467bd",
         "unstable_near_zero": "#8c564b"}
W, H, PAD = 640, 420, 56


def _ticks(lo, hi, n=6):
    step = (hi - lo) / (n - 1)
    return [lo + k * step for k in range(n)]


def phase_svg(rows, eta_range, s_range=(-0.5, 1.0), title="phase diagram"):
    """rows: dicts with eta, branch, S, stability (gap rows have S None)."""
    x0, x1 = eta_range
    if x1 <= x0:
        x1 = x0 + 1.0
    y0, y1 = s_range

    def X(e):
        return PAD + (e - x0) / (x1 - x0) * (W - 2 * PAD)

    def Y(s):
        return H - PAD - (s - y0) / (y1 - y0) * (H - 2 * PAD)

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" viewBox="0 0 %d %d">' % (W, H, W, H),
           '<rect width="100%" height="100%" fill="white"/>',
           '<text x="%d" y="24" font-family="sans-serif" font-size="15">%s</text>' % (PAD, escape(title)),
           '<g stroke="black" fill="none"><rect x="%d" y="%d" width="%d" height="%d"/></g>'
           % (PAD, PAD, W - 2 * PAD, H - 2 * PAD)]
    out.append('<g font-family="sans-serif" font-size="11">')
    for t in _ticks(x0, x1):
        out.append('<line x1="%.2f" y1="%d" x2="%.2f" y2="%d" stroke="black"/>' % (X(t), H - PAD, X(t), H - PAD + 5))
        out.append('<text x="%.2f" y="%d" text-anchor="middle">%.3g</text>' % (X(t), H - PAD + 18, t))
    for t in _ticks(y0, y1, 7):
        out.append('<line x1="%d" y1="%.2f" x2="%d" y2="%.2f" stroke="black"/>' % (PAD - 5, Y(t), PAD, Y(t)))
        out.append('<text x="%d" y="%.2f" text-anchor="end">%.2f</text>' % (PAD - 8, Y(t) + 4, t))
    out.append('<text x="%d" y="%d" text-anchor="middle">eta</text>' % (W // 2, H - 12))
    out.append('<text x="14" y="%d" transform="rotate(-90 14 %d)" text-anchor="middle">S</text>' % (H // 2, H // 2))
    out.append('</g>')

    pts = [r for r in rows if r["S"] is not None]
    # one polyline per branch; the near-zero branch has a sheet on each side of S = 0
    groups = {}
    for r in pts:
        key = r["branch"] if r["branch"] != "unstable_near_zero" else "%s%s" % (r["branch"], "+" if r["S"] > 0 else "-")
        groups.setdefault(key, []).append(r)
    for key in sorted(groups):
        g = sorted(groups[key], key=lambda r: r["eta"])
        colour = LINES.get(key.rstrip("+-"), "black")
        coords = " ".join("%.2f,%.2f" % (X(r["eta"]), Y(r["S"])) for r in g)
        out.append('<polyline points="%s" fill="none" stroke="%s" stroke-width="1.5"><title>%s</title></polyline>'
                   % (coords, colour, escape(key)))
    for r in pts:
        out.append('<circle cx="%.2f" cy="%.2f" r="2.6" fill="%s"/>'
                   % (X(r["eta"]), Y(r["S"]), COLOURS.get(r["stability"], "black")))
    ly = PAD + 10
    out.append('<g font-family="sans-serif" font-size="11">')
    for name in ("min", "max", "saddle", "degenerate"):
        out.append('<circle cx="%d" cy="%d" r="4" fill="%s"/>' % (W - PAD - 80, ly, COLOURS[name]))
        out.append('<text x="%d" y="%d">%s</text>' % (W - PAD - 70, ly + 4, name))
        ly += 16
    out.append('</g></svg>')
    return "\n".join(out) + "\n"
