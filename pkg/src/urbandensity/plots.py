"""Dependency-free SVG plots of the density profile and its residuals."""

from xml.sax.saxutils import escape

import numpy as np

from .regions import UNIFORM

WIDTH, HEIGHT = 800, 400
MARGIN = dict(left=70, right=20, top=40, bottom=50)
BAND_COLORS = {"uniform": "#bfe8bf", "variation": "#f4c2c2"}


def _fmt(v):
    return f"{v:.2f}"


class _Axes:
    """Maps data coordinates into the SVG plot rectangle."""

    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            pad = abs(self.y0) * 0.1 or 1.0
            self.y0, self.y1 = self.y0 - pad, self.y1 + pad
        self.left = MARGIN["left"]
        self.right = WIDTH - MARGIN["right"]
        self.top = MARGIN["top"]
        self.bottom = HEIGHT - MARGIN["bottom"]

    def px(self, x):
        return self.left + (x - self.x0) / (self.x1 - self.x0) * (self.right - self.left)

    def py(self, y):
        return self.bottom - (y - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)

    def points(self, xs, ys):
        return " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys))

    def frame(self, title, xlabel, ylabel, nticks=5):
        out = [
            f'<rect class="frame" x="{self.left}" y="{self.top}" '
            f'width="{self.right - self.left}" height="{self.bottom - self.top}" '
            'fill="none" stroke="#333"/>',
            f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>',
            f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="13">'
            f"{escape(xlabel)}</text>",
            f'<text x="16" y="{HEIGHT / 2}" text-anchor="middle" font-size="13" '
            f'transform="rotate(-90 16 {HEIGHT / 2})">{escape(ylabel)}</text>',
        ]
        for t in np.linspace(self.x0, self.x1, nticks):
            x = _fmt(self.px(t))
            out.append(f'<line x1="{x}" y1="{self.bottom}" x2="{x}" y2="{self.bottom + 5}" stroke="#333"/>')
            out.append(f'<text x="{x}" y="{self.bottom + 18}" text-anchor="middle" font-size="11">{t:.2f}</text>')
        for t in np.linspace(self.y0, self.y1, nticks):
            y = _fmt(self.py(t))
            out.append(f'<line x1="{self.left - 5}" y1="{y}" x2="{self.left}" y2="{y}" stroke="#333"/>')
            out.append(f'<text x="{self.left - 8}" y="{y}" text-anchor="end" font-size="11" '
                       f'dominant-baseline="middle">{t:.3g}</text>')
        return out


def _document(body):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">')
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *body, "</svg>"]) + "\n"


def gradient_svg(profile, fit, peaks=(), minima=None):
    """Profile means with IQR band, fitted line and peak markers."""
    d = np.asarray(profile.bin_distance_km, dtype=np.float64)
    m = np.asarray(profile.mean_density, dtype=np.float64)
    lo, hi = np.asarray(profile.q25), np.asarray(profile.q75)
    line = fit.beta + fit.alpha * d
    ylo = float(min(lo.min(), m.min(), line.min()))
    yhi = float(max(hi.max(), m.max(), line.max()))
    ax = _Axes((float(d.min()), float(d.max())), (ylo, yhi))
    body = ax.frame(f"Density gradient (alpha = {fit.alpha:.4f} /km)",
                    "distance from center (km)", "mean urban density")
    band = ax.points(np.concatenate([d, d[::-1]]), np.concatenate([hi, lo[::-1]]))
    body.append(f'<polygon class="iqr" points="{band}" fill="#9ecae1" fill-opacity="0.4" stroke="none"/>')
    body.append(f'<polyline class="profile" points="{ax.points(d, m)}" fill="none" stroke="#08519c" stroke-width="1.5"/>')
    body.append(f'<polyline class="fit" points="{ax.points(d[[0, -1]], line[[0, -1]])}" '
                'fill="none" stroke="#d62728" stroke-width="2" stroke-dasharray="6 3"/>')
    if minima is not None:
        for x, y in zip(*minima):
            body.append(f'<circle class="minimum" cx="{_fmt(ax.px(x))}" cy="{_fmt(ax.py(y))}" r="3" fill="#d62728"/>')
    for p in peaks:
        x, y = ax.px(p.distance_km), ax.py(p.density)
        body.append(f'<path class="peak" d="M {_fmt(x)} {_fmt(y - 12)} l -5 -9 l 10 0 z" fill="#ff7f0e"/>')
    return _document(body)


def difference_svg(residuals, regions):
    """Residuals over green (uniform) / red (variation) region bands."""
    d = np.asarray(residuals.distance_km, dtype=np.float64)
    r = np.asarray(residuals.residual, dtype=np.float64)
    amp = float(np.abs(r).max()) or 1.0
    ax = _Axes((float(d.min()), float(d.max())), (-1.1 * amp, 1.1 * amp))
    body = []
    for i, reg in enumerate(regions.regions):
        x0, x1 = ax.px(reg.start_km), ax.px(reg.end_km)
        color = BAND_COLORS[reg.label]
        body.append(
            f'<rect class="region region-{reg.label}" data-region="{i + 1}" x="{_fmt(x0)}" '
            f'y="{ax.top}" width="{_fmt(x1 - x0)}" height="{ax.bottom - ax.top}" fill="{color}"/>'
        )
        body.append(f'<text x="{_fmt((x0 + x1) / 2)}" y="{ax.top + 16}" text-anchor="middle" '
                    f'font-size="12">R{i + 1} {"U" if reg.label == UNIFORM else "V"}</text>')
    body += ax.frame("Residuals (observed - fitted)", "distance from center (km)", "density residual")
    body.append(f'<line class="zero" x1="{ax.left}" y1="{_fmt(ax.py(0))}" x2="{ax.right}" '
                f'y2="{_fmt(ax.py(0))}" stroke="#555" stroke-dasharray="4 3"/>')
    body.append(f'<polyline class="residual" points="{ax.points(d, r)}" fill="none" stroke="#222" stroke-width="1.2"/>')
    return _document(body)
