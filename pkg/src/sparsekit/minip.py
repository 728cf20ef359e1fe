"""Robust minimum-inner-product search over an adaptive query sequence.

Pipeline: unit-sphere points are sketched by every member of an ensemble of
seeded tensor JL transforms; each sketch carries a battery of independent
furthest-neighbor replicas over the sketched points.  A query samples a few
ensemble members, quantizes each sketched query to a lambda-grid (so replica
success generalizes over a net of possible queries), asks the replicas for
far points, and converts distance back to inner product through
<p, x> = 1 - ||p - x||^2 / 2.  Candidates violating the advertised bound
tau/c + lambda_tilde are discarded, so a returned point never violates it.

Build and update need exclusive access; queries are read-only between
mutations and draw all randomness from an explicit caller RNG.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .afn import AfnConfig, AfnStructure
from .errors import ConfigError, DimensionMismatch, NotFound
from .sketch import SketchEnsemble, ensemble_size_default

__all__ = [
    "minip_transform_dataset",
    "minip_transform_query",
    "exact_min_ip",
    "MinIpConfig",
    "minip_window",
    "RobustMinIpIndex",
]


def minip_transform_dataset(X, D_X: float = None):
    """Map dataset rows x to unit vectors (x/D_X, 0, sqrt(1 - |x|^2/D_X^2)).

    D_X defaults to the largest row norm.  Returns (augmented rows, D_X).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    norms = np.linalg.norm(X, axis=1)
    if D_X is None:
        D_X = float(norms.max())
    if D_X <= 0.0:
        raise ValueError("dataset diameter must be positive")
    if np.any(norms > D_X * (1 + 1e-12)):
        raise ValueError("a dataset point exceeds the stated diameter D_X")
    scaled = X / D_X
    tail = np.sqrt(np.clip(1.0 - (norms / D_X) ** 2, 0.0, None))
    out = np.hstack([scaled, np.zeros((X.shape[0], 1)), tail[:, None]])
    return out, D_X


def minip_transform_query(y, D_Y: float = None):
    """Map a query y to the unit vector (y/D_Y, sqrt(1 - |y|^2/D_Y^2), 0).

    With the default D_Y = |y| this just normalizes the query and pads.
    """
    y = np.asarray(y, dtype=float)
    norm = float(np.linalg.norm(y))
    if D_Y is None:
        D_Y = norm
    if D_Y <= 0.0:
        raise ValueError("query norm must be positive")
    if norm > D_Y * (1 + 1e-12):
        raise ValueError("query norm exceeds the stated D_Y")
    tail = math.sqrt(max(1.0 - (norm / D_Y) ** 2, 0.0))
    return np.concatenate([y / D_Y, [tail], [0.0]]), D_Y


def exact_min_ip(Y, q) -> tuple[int, float]:
    """Exhaustive argmin of <y_i, q>; ties broken by smallest index."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] == 0:
        raise ValueError("empty dataset")
    q = np.asarray(q, dtype=float)
    ips = Y @ q
    idx = int(np.argmin(ips))
    return idx, float(ips[idx])


def minip_window(tau: float, eps: float) -> tuple[float, float]:
    """Upper ends of the two admissible c-windows (sqrt2 regime, n^0.01 regime)."""
    base = (1.0 - eps) ** 2 * tau + 2.0 * eps
    return 8.0 * tau / (base + 7.0), 400.0 * tau / (base + 399.0)


@dataclass
class MinIpConfig:
    """Replica/ensemble counts; formulas at scale=1.0, desk profile at 0.25.

    sketch_dim overrides the ensemble target dimension when set, which desk
    runs use to keep the sketched dimension commensurate with the input.
    """

    scale: float = 1.0
    sketch_kind: str = "sparse"
    sketch_dim: int = None  # type: ignore[assignment]
    sketch_sparsity: int = None  # type: ignore[assignment]
    afn: AfnConfig = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.afn is None:
            self.afn = AfnConfig(scale=self.scale)

    @classmethod
    def desk(cls, **kw) -> "MinIpConfig":
        return cls(scale=0.25, **kw)

    def ensemble_size(self, n: int, d: int, delta: float) -> int:
        return ensemble_size_default(d, n, delta, scale=self.scale)

    def replica_count(self, n: int, s_dim: int, lam: float, delta: float) -> int:
        raw = s_dim * math.log(n * s_dim / (lam * delta))
        return max(1, math.ceil(self.scale * raw))

    def sample_count(self, b: int, k: int) -> int:
        raw = math.log(max(b, 2))
        return min(k, max(1, math.ceil(self.scale * raw)))


class RobustMinIpIndex:
    """Approximate Min-IP index hardened against adaptive queries.

    Parameters follow the (c, tau) contract: when some stored point has
    inner product <= tau with the query, a returned point z satisfies
    <x, z> <= tau/c + lambda_tilde; otherwise Fail (None) is allowed.
    """

    #: constant in front of the lambda_tilde additive-error formula
    LAMBDA_CONST = 2.0

    def __init__(
        self,
        points,
        c: float,
        tau: float,
        lam: float,
        delta: float,
        eps: float,
        seed: int,
        config: MinIpConfig = None,
        transform: bool = False,
        D_X: float = None,
    ):
        """Index `points` (unit rows, or raw rows with transform=True)."""
        self.config = config or MinIpConfig()
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if transform:
            pts, D_X = minip_transform_dataset(pts, D_X)
        else:
            D_X = 1.0
            norms = np.linalg.norm(pts, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-9):
                raise ValueError("points must be unit vectors (or pass transform=True)")
        self.D_X = D_X
        self.tau = float(tau)
        self.c = float(c)
        self.lam = float(lam)
        self.delta = float(delta)
        self.eps = float(eps)
        self.seed = int(seed)
        self._validate_window()

        n, d = pts.shape
        self.alpha = min((n * d) ** -9.0, 1e-6)
        self.lambda_tilde = (
            self.LAMBDA_CONST
            * math.sqrt((self.c - self.tau) / (self.c * (1.0 - self.tau)))
            * (self.lam + self.alpha)
        )

        side = max(1, math.ceil(math.sqrt(d)))
        b = self.config.sketch_dim
        if b is None:
            b = max(8, math.ceil(4.0 / max(eps, 0.05) ** 2 * math.log(n / delta)))
        k = self.config.ensemble_size(n, d, delta)
        self.ensemble = SketchEnsemble(
            kind=self.config.sketch_kind,
            side=side,
            b=b,
            k=k,
            master_seed=self.seed,
            s=self.config.sketch_sparsity,
            delta=delta,
        )
        self.b = self.ensemble.b
        self.kappa = self.config.replica_count(n, self.b, self.lam, self.delta)

        self._points = {}
        self._next_id = 0
        self._replicas = []  # one list of AfnStructures per ensemble member
        ids = list(range(n))
        self._next_id = n
        for i, p in enumerate(pts):
            self._points[i] = p
        replica_seeds = np.random.SeedSequence(self.seed + 1).spawn(len(self.ensemble))
        for j, sketch in enumerate(self.ensemble.sketches):
            sketched = [(pid, sketch.apply_flat(self._points[pid])) for pid in ids]
            seeds = replica_seeds[j].spawn(self.kappa)
            self._replicas.append(
                [
                    AfnStructure(
                        sketched, self.cbar, self.delta, seeds[r], self.config.afn
                    )
                    for r in range(self.kappa)
                ]
            )

    def _validate_window(self):
        c, tau, eps = self.c, self.tau, self.eps
        if not 0.0 < tau < 1.0:
            raise ConfigError(f"tau={tau} violates 0 < tau < 1")
        if not 0.0 < c < 1.0:
            raise ConfigError(f"c={c} violates 0 < c < 1")
        if c <= tau:
            raise ConfigError(f"c={c} violates c > tau={tau}")
        hi_sqrt2, hi_hundred = minip_window(tau, eps)
        if c < hi_hundred:
            self.regime = "n^0.01"
        elif c < hi_sqrt2:
            self.regime = "n^0.5"
        else:
            raise ConfigError(
                f"c={c} violates c < 8*tau/((1-eps)^2*tau + 2*eps + 7) = {hi_sqrt2}"
            )
        self.cbar_sq = c * (1.0 - tau) * (1.0 - eps) ** 2 / (4.0 * (c - tau))
        self.cbar = math.sqrt(self.cbar_sq)
        if self.cbar <= 1.0:
            raise ConfigError(
                f"derived AFN ratio cbar={self.cbar} violates cbar > 1"
            )

    @property
    def count(self) -> int:
        return len(self._points)

    def point(self, pid) -> np.ndarray:
        return self._points[pid]

    def insert(self, p, pid=None):
        p = np.asarray(p, dtype=float)
        if abs(np.linalg.norm(p) - 1.0) > 1e-9:
            raise ValueError("inserted points must be unit vectors")
        if pid is None:
            pid = self._next_id
            self._next_id += 1
        if pid in self._points:
            raise ValueError(f"point id {pid!r} already stored")
        self._points[pid] = p
        for sketch, replicas in zip(self.ensemble.sketches, self._replicas):
            sp = sketch.apply_flat(p)
            for afn in replicas:
                afn.insert(pid, sp)
        return pid

    def delete(self, pid) -> None:
        if pid not in self._points:
            raise NotFound(f"point id {pid!r} not stored")
        del self._points[pid]
        for replicas in self._replicas:
            for afn in replicas:
                afn.delete(pid)

    def _quantize(self, v: np.ndarray) -> np.ndarray:
        step = self.lam / self.b
        return np.round(v / step) * step

    def query(self, x, rng: np.random.Generator):
        """Best (pid, point, ip) meeting the additive Min-IP bound, or None."""
        x = np.asarray(x, dtype=float)
        if abs(np.linalg.norm(x) - 1.0) > 1e-9:
            raise DimensionMismatch("query must be a unit vector")
        count = self.config.sample_count(self.b, len(self.ensemble))
        sampled = self.ensemble.sample(count, rng)
        best = None
        for j in sampled:
            sketch = self.ensemble.sketches[j]
            xq = self._quantize(sketch.apply_flat(x))
            for afn in self._replicas[j]:
                hit = afn.query(xq)
                if hit is None:
                    continue
                pid = hit[0]
                ip = float(self._points[pid] @ x)
                if best is None or ip < best[2]:
                    best = (pid, self._points[pid], ip)
        if best is None:
            return None
        if best[2] > self.tau / self.c + self.lambda_tilde:
            return None
        return best

    def descriptor(self) -> dict:
        """Replayable parameters and seeds (contents excluded)."""
        return {
            "c": self.c,
            "tau": self.tau,
            "lambda": self.lam,
            "delta": self.delta,
            "eps": self.eps,
            "seed": self.seed,
            "regime": self.regime,
            "cbar_sq": self.cbar_sq,
            "kappa": self.kappa,
            "lambda_tilde": self.lambda_tilde,
            "D_X": self.D_X,
            "ensemble": self.ensemble.descriptor(),
        }

    def to_json(self) -> str:
        return json.dumps(self.descriptor(), sort_keys=True)
