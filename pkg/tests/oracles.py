"""Slow, obviously-correct reference implementations used only by the tests."""

import itertools
import math

import numpy as np


def brute_knn(points, q, k):
    """(ids, distances) of the k nearest points; ties by id.

    Distances use sqrt(dx*dx + dy*dy) in that order so results are bit-exact."""
    d = []
    for x, y in points:
        dx, dy = x - q[0], y - q[1]
        d.append(math.sqrt(dx * dx + dy * dy))
    order = sorted(range(len(points)), key=lambda i: (d[i], i))[:k]
    return order, [d[i] for i in order]


def brute_pair_counts(P, C):
    a = b = c = d = 0
    for i, j in itertools.combinations(range(len(P)), 2):
        same_p, same_c = P[i] == P[j], C[i] == C[j]
        if same_p and same_c:
            a += 1
        elif not same_p and not same_c:
            b += 1
        elif same_p:
            c += 1
        else:
            d += 1
    return a, b, c, d


def brute_range_count(points, i, eps):
    pts = np.asarray(points, dtype=float)
    return sum(1 for p in pts if math.hypot(*(p - pts[i])) <= eps)


def brute_dbscan(points, eps, min_pts):
    """Reachability closure over an explicit distance matrix.

    Clusters are numbered by their smallest core id and a border point joins
    the cluster of its lowest-id core neighbor, matching the library's rules.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    near = dist <= eps
    core = near.sum(1) >= min_pts
    comp = [-1] * n
    next_id = 0
    for s in range(n):
        if not core[s] or comp[s] != -1:
            continue
        comp[s] = next_id
        stack = [s]
        while stack:
            u = stack.pop()
            for v in np.flatnonzero(core & near[u]):
                if comp[v] == -1:
                    comp[v] = next_id
                    stack.append(int(v))
        next_id += 1
    labels = list(comp)
    for i in range(n):
        if core[i]:
            continue
        cores = np.flatnonzero(core & near[i])
        labels[i] = comp[cores[0]] if len(cores) else -1
    return labels


def canonical(labels):
    """Relabel clusters by first appearance; -1 stays -1."""
    out, seen = [], {}
    for lab in labels:
        lab = int(lab)
        out.append(-1 if lab == -1 else seen.setdefault(lab, len(seen)))
    return out


def union_find_components(n, edges):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    roots = [find(i) for i in range(n)]
    return canonical(roots)


def brute_l_distance(a, b, l):
    d = sorted(math.dist(p, q) for p in a for q in b)
    return sum(d[:l]) / len(d[:l])


def dense_runs_1d(xs, width, n_cells, min_pts):
    counts = [0] * n_cells
    for x in xs:
        c = int(math.floor(x / width))
        if 0 <= c < n_cells:
            counts[c] += 1
    runs, start = [], None
    for i, cnt in enumerate(counts + [0]):
        if cnt >= min_pts and start is None:
            start = i
        elif cnt < min_pts and start is not None:
            runs.append((start, i - 1))
            start = None
    return runs, counts


def make_line_domain(rng, h, min_pts, noise_cells=0, max_run=8, gap=(10, 40), touching=False):
    """Points on a line forming ``h`` dense runs of unit cells, plus optional
    sub-threshold noise cells (1..min_pts-1 points).  Noise cells avoid the
    runs' neighbors unless ``touching``."""
    lens = rng.integers(1, max_run + 1, size=h)
    gaps = rng.integers(gap[0], gap[1] + 1, size=h + 1)
    xs, pos = [], int(gaps[0])
    dense = set()
    for length, g in zip(lens, gaps[1:]):
        for cell in range(pos, pos + int(length)):
            m = int(rng.integers(min_pts, 2 * min_pts + 1))
            xs += list(cell + rng.uniform(0.05, 0.95, m))
            dense.add(cell)
        pos += int(length) + int(g)
    n_cells = pos
    placed = 0
    while placed < noise_cells:
        cell = int(rng.integers(0, n_cells))
        if cell in dense or (not touching and (cell - 1 in dense or cell + 1 in dense)):
            continue
        xs += list(cell + rng.uniform(0.05, 0.95, int(rng.integers(1, min_pts))))
        dense.add(cell)   # never reuse
        placed += 1
    return np.array(xs), n_cells
