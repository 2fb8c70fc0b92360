"""Reproducible synthetic 2D datasets with ground-truth labels."""

from __future__ import annotations

import math

import numpy as np

from .oracle import NOISE, Dataset

KINDS = ("blobs", "moons", "rings", "noisy")


def blobs(n_clusters: int = 2, n_per: int = 100, sigma: float = 1.0,
          separation: float = 50.0, seed=None) -> Dataset:
    """Gaussian blobs on a line, ``separation`` (in units of sigma) apart."""
    rng = np.random.default_rng(seed)
    pts, labels = [], []
    for j in range(n_clusters):
        center = np.array([j * separation * sigma, 0.0])
        pts.append(center + rng.normal(0.0, sigma, size=(n_per, 2)))
        labels += [j] * n_per
    return Dataset(np.vstack(pts), np.array(labels))


def moons(n: int = 400, noise: float = 0.05, scale: float = 100.0, seed=None) -> Dataset:
    """Two interleaving half circles."""
    rng = np.random.default_rng(seed)
    n0 = n // 2
    n1 = n - n0
    t0 = rng.uniform(0, math.pi, n0)
    t1 = rng.uniform(0, math.pi, n1)
    a = np.c_[np.cos(t0), np.sin(t0)]
    b = np.c_[1 - np.cos(t1), 0.5 - np.sin(t1)]
    pts = np.vstack([a, b]) + rng.normal(0.0, noise, size=(n, 2))
    return Dataset(pts * scale, np.r_[np.zeros(n0, int), np.ones(n1, int)])


def rings(n: int = 600, radii=(1.0, 3.0), width: float = 0.2, scale: float = 30.0,
          seed=None) -> Dataset:
    """Concentric annuli; a centroid method cannot split them."""
    rng = np.random.default_rng(seed)
    per = np.full(len(radii), n // len(radii))
    per[: n - per.sum()] += 1
    pts, labels = [], []
    for j, (r, m) in enumerate(zip(radii, per)):
        t = rng.uniform(0, 2 * math.pi, m)
        rr = r + rng.uniform(-width / 2, width / 2, m)
        pts.append(np.c_[rr * np.cos(t), rr * np.sin(t)])
        labels += [j] * int(m)
    return Dataset(np.vstack(pts) * scale, np.array(labels))


# -- the Chameleon-like benchmark ---------------------------------------------

def _arc(rng, m, cx, cy, r_in, r_out, a0, a1):
    t = rng.uniform(a0, a1, m)
    r = np.sqrt(rng.uniform(r_in ** 2, r_out ** 2, m))
    return np.c_[cx + r * np.cos(t), cy + r * np.sin(t)]


def _rect(rng, m, x0, y0, x1, y1):
    return np.c_[rng.uniform(x0, x1, m), rng.uniform(y0, y1, m)]


def _wave(rng, m, x0, x1, yc, amp, period, thick):
    x = rng.uniform(x0, x1, m)
    y = yc + amp * np.sin(2 * math.pi * (x - x0) / period) + rng.uniform(-thick / 2, thick / 2, m)
    return np.c_[x, y]


def _ellipse(rng, m, cx, cy, rx, ry):
    t = rng.uniform(0, 2 * math.pi, m)
    r = np.sqrt(rng.uniform(0, 1, m))
    return np.c_[cx + rx * r * np.cos(t), cy + ry * r * np.sin(t)]


# (area, sampler) pieces per cluster; the L shape is two rectangles
def _shapes():
    return [
        [(math.pi / 2 * (140 ** 2 - 50 ** 2), lambda g, m: _arc(g, m, 170, 330, 50, 140, 0, math.pi))],
        [(320 * 70, lambda g, m: _wave(g, m, 360, 680, 420, 30, 320, 70))],
        [(0.775 * math.pi * (100 ** 2 - 40 ** 2),
          lambda g, m: _arc(g, m, 530, 215, 40, 100, 0.3 * math.pi, 1.85 * math.pi))],
        [(80 * 160, lambda g, m: _rect(g, m, 30, 100, 110, 260)),
         (250 * 80, lambda g, m: _rect(g, m, 30, 20, 280, 100))],
        [(math.pi * 50 * 50, lambda g, m: _ellipse(g, m, 290, 210, 50, 50))],
        [(350 * 50, lambda g, m: _rect(g, m, 330, 15, 680, 65))],
    ]


NOISY_BBOX = (0.0, 0.0, 700.0, 500.0)


def noisy(n: int = 10000, noise: float = 0.1, seed=None) -> Dataset:
    """Six clusters of equal density in a 700 x 500 box plus uniform noise.

    Shapes: an arch, a wave band, an open ring, an L, a disc and a bar, 50 to
    90 units thick and at least 40 units apart.  ``noise`` is the fraction of the ``n``
    points drawn uniformly over the whole box (label NOISE).
    """
    if not 0 <= noise < 1:
        raise ValueError("noise must be in [0, 1)")
    rng = np.random.default_rng(seed)
    n_noise = int(round(n * noise))
    n_clu = n - n_noise
    pieces = [(j, area, fn) for j, shape in enumerate(_shapes()) for area, fn in shape]
    areas = np.array([p[1] for p in pieces])
    counts = rng.multinomial(n_clu, areas / areas.sum())
    pts, labels = [], []
    for (j, _, fn), m in zip(pieces, counts):
        pts.append(fn(rng, int(m)))
        labels += [j] * int(m)
    x0, y0, x1, y1 = NOISY_BBOX
    pts.append(_rect(rng, n_noise, x0, y0, x1, y1))
    labels += [NOISE] * n_noise
    pts = np.vstack(pts)
    labels = np.array(labels)
    order = rng.permutation(n)
    return Dataset(pts[order], labels[order])


def inject_noise(dataset: Dataset, pct: float, seed=None, bbox=None) -> Dataset:
    """Append ``pct`` percent of ``len(dataset)`` uniform points labeled NOISE."""
    if pct < 0:
        raise ValueError("noise percentage must be >= 0")
    rng = np.random.default_rng(seed)
    m = int(round(len(dataset) * pct / 100.0))
    xmin, ymin, xmax, ymax = bbox if bbox is not None else dataset.bounds()
    extra = np.c_[rng.uniform(xmin, xmax, m), rng.uniform(ymin, ymax, m)]
    labels = dataset.truth_labels
    if labels is None:
        labels = np.zeros(len(dataset), dtype=int)
    return Dataset(np.vstack([dataset.points, extra]), np.r_[labels, np.full(m, NOISE)])


def generate(kind: str, seed=None, **params) -> Dataset:
    try:
        fn = {"blobs": blobs, "moons": moons, "rings": rings, "noisy": noisy}[kind]
    except KeyError:
        raise ValueError(f"unknown dataset kind {kind!r}; choose from {KINDS}") from None
    return fn(seed=seed, **params)
