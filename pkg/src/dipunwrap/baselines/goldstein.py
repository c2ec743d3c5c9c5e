"""Residues, branch cuts and flood-fill integration (Goldstein's algorithm)."""

from __future__ import annotations

from collections import deque

import numpy as np

from ..core import TWO_PI, as_grid, wrap
from .itoh import unwrap_itoh_1d


def residues(psi) -> np.ndarray:
    """Integer charge of every 2x2 loop, shape ``(H-1, W-1)``.

    The loop visits (i,j) -> (i,j+1) -> (i+1,j+1) -> (i+1,j) -> (i,j).
    """
    psi = as_grid(psi, "psi")
    if min(psi.shape) < 2:
        raise ValueError("residues need at least a 2x2 grid")
    a = psi[:-1, :-1]
    b = psi[:-1, 1:]
    c = psi[1:, 1:]
    d = psi[1:, :-1]
    loop = wrap(b - a) + wrap(c - b) + wrap(d - c) + wrap(a - d)
    return np.rint(loop / TWO_PI).astype(np.int64)


def _line(p, q):
    """8-connected pixel line from ``p`` to ``q`` inclusive."""
    (r0, c0), (r1, c1) = p, q
    n = max(abs(r1 - r0), abs(c1 - c0))
    if n == 0:
        return [(r0, c0)]
    t = np.arange(n + 1) / n
    rows = np.rint(r0 + t * (r1 - r0)).astype(int)
    cols = np.rint(c0 + t * (c1 - c0)).astype(int)
    return list(zip(rows.tolist(), cols.tolist()))


def branch_cuts(res: np.ndarray, shape: tuple[int, int], max_radius: int | None = None) -> np.ndarray:
    """Boolean cut mask on the pixel grid balancing all residues.

    Residue (i, j) is anchored on pixel (i, j). Starting from each unbalanced
    residue, a box grows around the members of the current tree; every residue
    found is joined to the tree by a cut. The tree is closed when its charge
    reaches zero or when a box touches the border, in which case a cut is drawn
    to the nearest border pixel.
    """
    H, W = shape
    cut = np.zeros(shape, dtype=bool)
    charge = {(int(i), int(j)): int(res[i, j]) for i, j in zip(*np.nonzero(res))}
    if not charge:
        return cut
    max_radius = max_radius or max(H, W)
    visited: set[tuple[int, int]] = set()
    # residue lookup by row for box queries
    positions = np.array(sorted(charge), dtype=int)

    def in_box(center, r):
        ci, cj = center
        sel = (np.abs(positions[:, 0] - ci) <= r) & (np.abs(positions[:, 1] - cj) <= r)
        found = [tuple(p) for p in positions[sel].tolist()]
        found.sort(key=lambda p: (max(abs(p[0] - ci), abs(p[1] - cj)), p))
        return found

    def border_target(p):
        i, j = p
        options = [(i, (0, j)), (H - 1 - i, (H - 1, j)), (j, (i, 0)), (W - 1 - j, (i, W - 1))]
        return min(options)[1]

    def draw(p, q):
        for r, c in _line(p, q):
            cut[r, c] = True

    for start in sorted(charge):
        if start in visited:
            continue
        visited.add(start)
        tree = [start]
        net = charge[start]
        cut[start] = True
        radius = 1
        while net != 0 and radius <= max_radius:
            for member in list(tree):
                bi, bj = member
                if bi - radius < 0 or bj - radius < 0 or bi + radius > H - 1 or bj + radius > W - 1:
                    draw(member, border_target(member))
                    net = 0
                    break
                for other in in_box(member, radius):
                    if other == member:
                        continue
                    if other in visited:
                        continue
                    draw(member, other)
                    visited.add(other)
                    tree.append(other)
                    net += charge[other]
                    if net == 0:
                        break
                if net == 0:
                    break
            radius += 1
        if net != 0:
            draw(start, border_target(start))
    return cut


def _integrate(psi: np.ndarray, cut: np.ndarray, reference: tuple[int, int]) -> np.ndarray:
    H, W = psi.shape
    k = np.zeros(psi.shape, dtype=np.int64)
    done = np.zeros(psi.shape, dtype=bool)
    steps = ((0, 1), (1, 0), (0, -1), (-1, 0))

    def jump(src, dst):
        # integer step making psi[dst] + 2*pi*k[dst] continuous with src
        return k[src] + int(np.rint((psi[src] - psi[dst]) / TWO_PI))

    def flood(seeds, allow_cut: bool):
        queue = deque(seeds)
        while queue:
            p = queue.popleft()
            if cut[p] and not allow_cut:
                continue
            for di, dj in steps:
                q = (p[0] + di, p[1] + dj)
                if 0 <= q[0] < H and 0 <= q[1] < W and not done[q]:
                    k[q] = jump(p, q)
                    done[q] = True
                    if allow_cut or not cut[q]:
                        queue.append(q)

    # pixels on cuts are unwrapped from a neighbour but never propagate
    done[reference] = True
    flood([reference], allow_cut=False)
    while not done.all():
        # regions sealed off by cuts: continue from whatever has been reached
        frontier = [tuple(p) for p in np.argwhere(done).tolist()]
        before = done.sum()
        flood(frontier, allow_cut=True)
        if done.sum() == before:  # pragma: no cover - grid is connected
            break
    return psi + TWO_PI * k


def unwrap_goldstein(psi, reference: tuple[int, int] = (0, 0)) -> np.ndarray:
    psi = as_grid(psi, "psi")
    if min(psi.shape) == 1:
        return unwrap_itoh_1d(psi.ravel()).reshape(psi.shape)
    cut = branch_cuts(residues(psi), psi.shape)
    ref = tuple(reference)
    if cut[ref]:
        free = np.argwhere(~cut)
        ref = tuple(free[0]) if len(free) else ref
    return _integrate(psi, cut, ref)
