"""Slow, direct reference implementations used as test oracles.

Each one loops over pixels / pairs and shares no code with the package.
"""
import math

import numpy as np


def gaussian_weights(w, sigma):
    r = w // 2
    g = [[math.exp(-(i * i + j * j) / (2 * sigma * sigma)) for j in range(-r, r + 1)] for i in range(-r, r + 1)]
    total = sum(sum(row) for row in g)
    return [[v / total for v in row] for row in g]


def threshold_map(depth, w, sigma):
    """Windowed Gaussian mean with the window clipped at the border and the
    weights renormalised over in-bounds pixels."""
    h, wd = depth.shape
    g = gaussian_weights(w, sigma)
    r = w // 2
    out = np.zeros((h, wd))
    for y in range(h):
        for x in range(wd):
            num = den = 0.0
            for i in range(-r, r + 1):
                for j in range(-r, r + 1):
                    yy, xx = y + i, x + j
                    if 0 <= yy < h and 0 <= xx < wd:
                        num += g[i + r][j + r] * depth[yy, xx]
                        den += g[i + r][j + r]
            out[y, x] = num / den
    return out


def window_reduce(m, radius, fn):
    h, w = m.shape
    out = np.zeros_like(m, dtype=bool)
    for y in range(h):
        for x in range(w):
            vals = [
                bool(m[yy, xx])
                for yy in range(max(0, y - radius), min(h, y + radius + 1))
                for xx in range(max(0, x - radius), min(w, x + radius + 1))
            ]
            out[y, x] = fn(vals)
    return out


def dilate(m, radius):
    return window_reduce(m, radius, any)


def erode(m, radius):
    return window_reduce(m, radius, all)


def recon(y, x):
    total = 0.0
    for i in range(y.shape[0]):
        for j in range(y.shape[1]):
            total += (y[i, j] - x[i, j]) ** 2
    return total


def cosine(a, b):
    dot = sum(float(p) * float(q) for p, q in zip(a, b))
    na = math.sqrt(sum(float(p) ** 2 for p in a))
    nb = math.sqrt(sum(float(q) ** 2 for q in b))
    if na < 1e-12 or nb < 1e-12:
        return 0.0
    return max(-1.0, min(1.0, dot / (na * nb)))


def hinge_sum(y, x, pairs, delta):
    return sum(max(0.0, cosine(y[j], x[k]) - cosine(y[j], x[j]) + delta) for j, k in pairs)


def ssim(a, b, window=7, k1=0.01, k2=0.03, dynamic_range=1.0):
    c1, c2 = (k1 * dynamic_range) ** 2, (k2 * dynamic_range) ** 2
    h, w = a.shape
    vals = []
    n = window * window
    for y in range(h - window + 1):
        for x in range(w - window + 1):
            pa = [float(v) for v in a[y:y + window, x:x + window].ravel()]
            pb = [float(v) for v in b[y:y + window, x:x + window].ravel()]
            ma, mb = sum(pa) / n, sum(pb) / n
            va = sum((p - ma) ** 2 for p in pa) / n
            vb = sum((q - mb) ** 2 for q in pb) / n
            cov = sum((p - ma) * (q - mb) for p, q in zip(pa, pb)) / n
            vals.append((2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2)))
    return sum(vals) / len(vals)


def bilinear(field, x, y):
    h, w = field.shape[:2]
    x = min(max(x, 0.0), w - 1.0)
    y = min(max(y, 0.0), h - 1.0)
    x0, y0 = int(math.floor(x)), int(math.floor(y))
    x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
    fx, fy = x - x0, y - y0
    return ((1 - fx) * (1 - fy) * field[y0, x0] + fx * (1 - fy) * field[y0, x1]
            + (1 - fx) * fy * field[y1, x0] + fx * fy * field[y1, x1])


def edge_match(pred, oracle, tol):
    """(matched_pred, matched_oracle) by nearest-pixel search."""
    pp = list(zip(*np.nonzero(pred)))
    oo = list(zip(*np.nonzero(oracle)))

    def near(p, pts):
        return any(max(abs(p[0] - q[0]), abs(p[1] - q[1])) <= tol for q in pts)

    return sum(near(p, oo) for p in pp), sum(near(q, pp) for q in oo)


def components8(m):
    """8-connected components by flood fill; list of sets of (x, y)."""
    seen = set()
    comps = []
    h, w = m.shape
    for y in range(h):
        for x in range(w):
            if m[y, x] and (x, y) not in seen:
                stack, comp = [(x, y)], set()
                seen.add((x, y))
                while stack:
                    cx, cy = stack.pop()
                    comp.add((cx, cy))
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            nx, ny = cx + dx, cy + dy
                            if 0 <= nx < w and 0 <= ny < h and m[ny, nx] and (nx, ny) not in seen:
                                seen.add((nx, ny))
                                stack.append((nx, ny))
                comps.append(comp)
    return comps
