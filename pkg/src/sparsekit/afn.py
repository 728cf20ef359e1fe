"""Random-projection furthest-neighbor structures.

DfnStructure answers fixed-radius decision queries: given (q, r), either
return a point at distance >= r / cbar (post-checked before returning) or
Fail (None).  It keeps one sorted list of projections per Gaussian
direction; points far from q in some direction are candidates.

AfnStructure wraps several independent DFN copies and binary-searches the
radius between bw/2 and sqrt(d)/eps * bw, where bw is the current boxwidth
of the point set, maintained exactly under inserts and deletes through
per-dimension sorted lists.

Builds and updates need exclusive access; queries are read-only and safe to
run concurrently between mutations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotFound
from .sortedlist import SortedKeyList

__all__ = ["AfnConfig", "DfnStructure", "AfnStructure", "gaussian_matrix", "solve_threshold"]


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def gaussian_matrix(rows: int, cols: int, seed) -> np.ndarray:
    """Standard normals via Box-Muller over counter-based Philox streams.

    Philox keyed by the seed makes structures bit-reproducible across runs
    and platforms regardless of draw order elsewhere.
    """
    gen = np.random.Generator(np.random.Philox(seed))
    n = rows * cols
    u1 = 1.0 - gen.random(n)  # (0, 1], keeps log finite
    u2 = gen.random(n)
    g = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    return g.reshape(rows, cols)


def solve_threshold(n: int, tol: float = 1e-10) -> float:
    """The t >= 1 solving e^{t^2/2} / t = 2n, by bisection.

    The map is increasing on [1, inf) and e^{1/2} < 2 <= 2n, so the root
    exists and is unique on that branch.
    """
    target = 2.0 * n

    def f(t: float) -> float:
        return math.exp(t * t / 2.0) / t - target

    lo, hi = 1.0, 2.0
    while f(hi) < 0.0:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class AfnConfig:
    """Leading constants behind the Theta(.) sizes, with a desk-scale profile.

    scale multiplies every count before the ceiling; the desk profile
    (scale=0.25) keeps CI runs fast while preserving the formulas.
    """

    directions_mult: float = 1.0  # ell = ceil(mult * n^{1/cbar^2} log^{(1-1/cbar^2)/2} n)
    copies_mult: float = 1.0  # s = ceil(mult * log log(d / (eps delta)))
    search_rounds_mult: float = 1.0  # rounds = ceil(mult * log(d / (eps delta)))
    scale: float = 1.0

    @classmethod
    def desk(cls) -> "AfnConfig":
        return cls(scale=0.25)

    def directions(self, n: int, cbar: float) -> int:
        expo = 1.0 / cbar**2
        logn = max(math.log(max(n, 2)), 1.0)
        raw = n**expo * logn ** ((1.0 - expo) / 2.0)
        return max(1, math.ceil(self.scale * self.directions_mult * raw))

    def copies(self, d: int, eps: float, delta: float) -> int:
        raw = math.log(max(math.log(max(d / (eps * delta), 3.0)), 1.5))
        return max(1, math.ceil(self.scale * self.copies_mult * max(raw, 1.0)))

    def search_rounds(self, d: int, eps: float, delta: float) -> int:
        raw = math.log(max(d / (eps * delta), 2.0))
        return max(1, math.ceil(self.scale * self.search_rounds_mult * raw))


class DfnStructure:
    """Fixed-radius decision version of approximate furthest neighbor."""

    def __init__(self, points, cbar: float, seed, config: AfnConfig = None):
        if cbar <= 1.0:
            raise ValueError("cbar must exceed 1")
        self.config = config or AfnConfig()
        pts = {pid: np.asarray(p, dtype=float) for pid, p in points}
        if not pts:
            raise ValueError("need at least one point")
        self.dim = next(iter(pts.values())).shape[0]
        self.cbar = float(cbar)
        self.n0 = len(pts)
        self.ell = self.config.directions(self.n0, self.cbar)
        self.t = solve_threshold(self.n0)
        self.seed = seed
        self.directions = gaussian_matrix(self.ell, self.dim, seed)
        self._points = {}
        self._lists = [SortedKeyList() for _ in range(self.ell)]
        for pid, p in pts.items():
            self.insert(pid, p)

    def __len__(self) -> int:
        return len(self._points)

    def point(self, pid):
        return self._points[pid]

    def insert(self, pid, p) -> None:
        p = np.asarray(p, dtype=float)
        if pid in self._points:
            raise ValueError(f"point id {pid!r} already stored")
        keys = self.directions @ p
        for i in range(self.ell):
            self._lists[i].insert(float(keys[i]), pid)
        self._points[pid] = p

    def delete(self, pid) -> None:
        if pid not in self._points:
            raise NotFound(f"point id {pid!r} not stored")
        p = self._points.pop(pid)
        keys = self.directions @ p
        for i in range(self.ell):
            self._lists[i].delete(float(keys[i]), pid)

    def projection_list(self, i: int) -> SortedKeyList:
        return self._lists[i]

    def query(self, q, r: float):
        """A (pid, point) at distance >= r/cbar from q, or None.

        Collects at most 2*ell + 1 candidates whose projection gap exceeds
        r t / cbar across the directions, then returns the farthest
        candidate passing the distance post-check.
        """
        if r <= 0.0:
            raise ValueError("radius must be positive")
        q = np.asarray(q, dtype=float)
        T = r * self.t / self.cbar
        cap = 2 * self.ell + 1
        seen = {}
        proj_q = self.directions @ q
        for i in range(self.ell):
            if len(seen) > cap:
                break
            center = float(proj_q[i])
            for key, pid in self._lists[i].search_leq(center - T):
                if len(seen) >= cap:
                    break
                seen.setdefault(pid, key)
            for key, pid in self._lists[i].search_geq(center + T):
                if len(seen) >= cap:
                    break
                seen.setdefault(pid, key)
        best = None
        best_dist = r / self.cbar
        for pid in seen:
            p = self._points[pid]
            dist = float(np.linalg.norm(p - q))
            if dist >= best_dist:
                best_dist = dist
                best = (pid, p)
        return best


class AfnStructure:
    """Amplified furthest-neighbor search over independent DFN copies."""

    def __init__(self, points, cbar: float, delta: float, seed, config: AfnConfig = None):
        self.config = config or AfnConfig()
        points = [(pid, np.asarray(p, dtype=float)) for pid, p in points]
        if not points:
            raise ValueError("need at least one point")
        self.dim = points[0][1].shape[0]
        self.cbar = float(cbar)
        self.delta = float(delta)
        self.eps = max(self.cbar - 1.0, 1e-9)
        self.copies = self.config.copies(self.dim, self.eps, self.delta)
        self.rounds = self.config.search_rounds(self.dim, self.eps, self.delta)
        seeds = _seed_sequence(seed).spawn(self.copies)
        self._dfns = [
            DfnStructure(points, cbar, seeds[i], self.config) for i in range(self.copies)
        ]
        self._dim_lists = [SortedKeyList() for _ in range(self.dim)]
        self._points = {}
        for pid, p in points:
            self._register(pid, p)

    def _register(self, pid, p) -> None:
        for j in range(self.dim):
            self._dim_lists[j].insert(float(p[j]), pid)
        self._points[pid] = p

    def __len__(self) -> int:
        return len(self._points)

    @property
    def boxwidth(self) -> float:
        widths = (lst.max()[0] - lst.min()[0] for lst in self._dim_lists)
        return max(widths)

    def insert(self, pid, p) -> None:
        p = np.asarray(p, dtype=float)
        for dfn in self._dfns:
            dfn.insert(pid, p)
        self._register(pid, p)

    def delete(self, pid) -> None:
        if pid not in self._points:
            raise NotFound(f"point id {pid!r} not stored")
        p = self._points.pop(pid)
        for dfn in self._dfns:
            dfn.delete(pid)
        for j in range(self.dim):
            self._dim_lists[j].delete(float(p[j]), pid)

    def _query_all_copies(self, q, r: float):
        for dfn in self._dfns:
            hit = dfn.query(q, r)
            if hit is not None:
                return hit
        return None

    def query(self, q):
        """An approximate furthest neighbor (pid, point) of q, or None.

        Binary search brackets the largest radius at which some DFN copy
        still answers; the witness from the highest successful radius is
        returned.  A zero boxwidth means all points coincide, so any stored
        point is exact.
        """
        q = np.asarray(q, dtype=float)
        bw = self.boxwidth
        if bw == 0.0:
            pid = next(iter(self._points))
            return pid, self._points[pid]
        lo = bw / 2.0
        hi = math.sqrt(self.dim) / self.eps * bw
        best = self._query_all_copies(q, lo)
        for _ in range(self.rounds):
            mid = 0.5 * (lo + hi)
            hit = self._query_all_copies(q, mid)
            if hit is not None:
                best = hit
                lo = mid
            else:
                hi = mid
        return best
