"""Johnson-Lindenstrauss transforms for tensor products of vectors.

Two seeded linear maps R^{d^2} -> R^b with fast application to u (x) v
(= vec(u v^T), row-major):

* TensorSrhtSketch: subsample b coordinates of (H D1 (x) H D2), applied via
  fast Walsh-Hadamard transforms in O(d log d + b).
* TensorSparseSketch: s stacked count-sketch blocks of size b/s, applied via
  block FFT convolutions in O(s (nnz(u) + nnz(v)) + b log(b/s)).

Plus the adaptive-robust ensemble: many independent small sketches, of which
queries sample a few and keep the best.  Sketches are immutable after
construction and application is pure, so concurrent use is safe; ensemble
sampling takes an explicit RNG.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionMismatch
from .hashing import PolyHash, SignHash

__all__ = [
    "TensorSrhtSketch",
    "TensorSparseSketch",
    "SketchEnsemble",
    "sketch_dim_default",
    "sparsity_default",
    "ensemble_size_default",
]


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def fwht(x: np.ndarray) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform along the last axis."""
    x = np.array(x, dtype=float)
    n = x.shape[-1]
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < n:
        x = x.reshape(x.shape[:-1] + (n // (2 * h), 2, h))
        a = x[..., 0, :].copy()
        b = x[..., 1, :]
        x[..., 0, :] = a + b
        x[..., 1, :] = a - b
        x = x.reshape(x.shape[:-3] + (n,))
        h *= 2
    return x


def sketch_dim_default(eps: float, m: int, delta: float) -> int:
    """Default target dimension: ceil(4 eps^-2 log(m/delta))."""
    return math.ceil(4.0 / eps**2 * math.log(m / delta))


def sparsity_default(eps: float, b: int) -> int:
    """Default column sparsity: ceil(eps * b)."""
    return math.ceil(eps * b)


def ensemble_size_default(d: int, m: int, delta: float, scale: float = 1.0) -> int:
    """Default ensemble size: ceil((d + log(1/delta)) * log(m d)), scaled."""
    return max(1, math.ceil(scale * (d + math.log(1.0 / delta)) * math.log(m * d)))


class _TensorSketchBase:
    side: int
    b: int
    seed: int

    def _pad_pair(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
            raise DimensionMismatch("u and v must be equal-length vectors")
        if u.shape[0] > self.side:
            raise DimensionMismatch(
                f"vectors of dim {u.shape[0]} exceed sketch side {self.side}"
            )
        up = np.zeros(self.side)
        vp = np.zeros(self.side)
        up[: u.shape[0]] = u
        vp[: v.shape[0]] = v
        return up, vp

    def _pad_flat(self, x) -> np.ndarray:
        """Embed a flat input into the side x side tensor grid.

        A length-side^2 input is read as a row-major side x side matrix; any
        shorter input is zero-extended first, so plain (non-tensor) points
        share one fixed norm-preserving embedding.
        """
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] > self.side**2:
            raise DimensionMismatch(
                f"flat input of length {x.shape} exceeds sketch capacity {self.side ** 2}"
            )
        xp = np.zeros(self.side**2)
        xp[: x.shape[0]] = x
        return xp

    def apply_pair(self, u, v) -> np.ndarray:
        raise NotImplementedError

    def apply_flat(self, x) -> np.ndarray:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError


class TensorSrhtSketch(_TensorSketchBase):
    """Subsampled randomized Hadamard transform for degree-two tensors.

    The input side is zero-padded to the next power of two; padding is
    invisible to callers (norms are unchanged).  H is the +-1 Hadamard
    matrix, D1 and D2 are Rademacher diagonals, and b coordinates of the
    d^2-dimensional product are sampled with replacement and scaled by
    1/sqrt(b).
    """

    kind = "srht"

    def __init__(self, side: int, b: int, seed: int):
        if side < 1 or b < 1:
            raise ConfigError("side and b must be positive")
        self.side = _next_pow2(side)
        self.b = b
        self.seed = int(seed)
        rng = np.random.default_rng(self.seed)
        self.d1 = rng.integers(0, 2, size=self.side) * 2 - 1
        self.d2 = rng.integers(0, 2, size=self.side) * 2 - 1
        self.rows = rng.integers(0, self.side**2, size=b)
        self._row_i, self._row_j = np.divmod(self.rows, self.side)

    def apply_pair(self, u, v) -> np.ndarray:
        up, vp = self._pad_pair(u, v)
        a = fwht(self.d1 * up)
        c = fwht(self.d2 * vp)
        return a[self._row_i] * c[self._row_j] / math.sqrt(self.b)

    def apply_flat(self, x) -> np.ndarray:
        X = self._pad_flat(x).reshape(self.side, self.side)
        # (H D1) X (H D2)^T through column then row Hadamard passes
        Z = fwht((self.d1[:, None] * X).T).T
        Z = fwht(self.d2 * Z)
        return Z[self._row_i, self._row_j] / math.sqrt(self.b)

    def materialize(self) -> np.ndarray:
        """Explicit b x side^2 matrix; for small-d verification only."""
        from scipy.linalg import hadamard

        H = hadamard(self.side).astype(float)
        HD1 = H * self.d1
        HD2 = H * self.d2
        S = np.empty((self.b, self.side**2))
        for k in range(self.b):
            S[k] = np.kron(HD1[self._row_i[k]], HD2[self._row_j[k]])
        return S / math.sqrt(self.b)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "side": self.side, "b": self.b, "seed": self.seed}


class TensorSparseSketch(_TensorSketchBase):
    """Sparse degree-two tensor embedding: s count-sketch blocks of size b/s.

    Entry (r, (i, j)) is sigma1(i,k) sigma2(j,k)/sqrt(s) when
    ((h1(i,k) + h2(j,k)) mod b/s) + k*(b/s) = r for the block k, giving every
    implicit column exactly s nonzeros, one per block.  Hash and sign
    functions are Theta(log 1/delta)-wise independent polynomials.
    """

    kind = "sparse"

    def __init__(self, side: int, b: int, s: int, seed: int, delta: float = 0.01):
        if side < 1:
            raise ConfigError("side must be positive")
        if s < 1 or b < s or b % s != 0:
            raise ConfigError(f"b={b} must be a positive multiple of s={s}")
        self.side = int(side)
        self.b = b
        self.s = s
        self.block = b // s
        self.seed = int(seed)
        self.delta = delta
        degree = max(2, math.ceil(math.log(1.0 / delta)))
        ss = np.random.SeedSequence(self.seed).spawn(4)
        self.h1 = PolyHash(degree, self.block, ss[0]).grid(self.side, s)
        self.h2 = PolyHash(degree, self.block, ss[1]).grid(self.side, s)
        self.sg1 = SignHash(degree, ss[2]).grid(self.side, s).astype(float)
        self.sg2 = SignHash(degree, ss[3]).grid(self.side, s).astype(float)

    def apply_pair(self, u, v) -> np.ndarray:
        up, vp = self._pad_pair(u, v)
        out = np.empty(self.b)
        scale = 1.0 / math.sqrt(self.s)
        for k in range(self.s):
            c1 = np.zeros(self.block)
            c2 = np.zeros(self.block)
            np.add.at(c1, self.h1[:, k], self.sg1[:, k] * up)
            np.add.at(c2, self.h2[:, k], self.sg2[:, k] * vp)
            conv = np.fft.irfft(np.fft.rfft(c1) * np.fft.rfft(c2), n=self.block)
            out[k * self.block : (k + 1) * self.block] = conv * scale
        return out

    def apply_flat(self, x) -> np.ndarray:
        X = self._pad_flat(x).reshape(self.side, self.side)
        out = np.zeros(self.b)
        scale = 1.0 / math.sqrt(self.s)
        for k in range(self.s):
            rows = (self.h1[:, k][:, None] + self.h2[:, k][None, :]) % self.block
            vals = self.sg1[:, k][:, None] * self.sg2[:, k][None, :] * X
            np.add.at(out, rows.ravel() + k * self.block, vals.ravel() * scale)
        return out

    def materialize(self) -> np.ndarray:
        """Explicit b x side^2 matrix; for small-d verification only."""
        R = np.zeros((self.b, self.side**2))
        for i in range(self.side):
            for j in range(self.side):
                col = i * self.side + j
                for k in range(self.s):
                    r = (self.h1[i, k] + self.h2[j, k]) % self.block + k * self.block
                    R[r, col] += self.sg1[i, k] * self.sg2[j, k] / math.sqrt(self.s)
        return R

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "side": self.side,
            "b": self.b,
            "s": self.s,
            "seed": self.seed,
            "delta": self.delta,
        }


def _make_sketch(kind: str, side: int, b: int, s, seed: int, delta: float):
    if kind == "srht":
        return TensorSrhtSketch(side, b, seed)
    if kind == "sparse":
        if s is None:
            s = sparsity_default(0.5, b)
        b_adj = -(-b // s) * s
        return TensorSparseSketch(side, b_adj, s, seed, delta)
    raise ConfigError(f"unknown sketch kind {kind!r}")


@dataclass
class SketchEnsemble:
    """k independent sketches with seeds derived from one master seed.

    During an adaptive query sequence a caller samples a few members per
    query and keeps the best answer; a 0.95 fraction of members preserves
    any fixed distance, so sampled subsets are good with high probability.
    """

    kind: str
    side: int
    b: int
    k: int
    master_seed: int
    s: int = None  # type: ignore[assignment]
    delta: float = 0.01
    alpha: float = 1e-6  # additive distortion floor at desk scale

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("ensemble size k must be >= 1")
        seeds = np.random.SeedSequence(self.master_seed).generate_state(self.k)
        self.sketches = [
            _make_sketch(self.kind, self.side, self.b, self.s, int(seed), self.delta)
            for seed in seeds
        ]
        self.side = self.sketches[0].side
        self.b = self.sketches[0].b
        if self.kind == "sparse":
            self.s = self.sketches[0].s

    def __len__(self) -> int:
        return self.k

    def __getitem__(self, i: int):
        return self.sketches[i]

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform sample of member indices without replacement."""
        if not 1 <= count <= self.k:
            raise ConfigError(f"sample count {count} not in [1, {self.k}]")
        return rng.choice(self.k, size=count, replace=False)

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "side": self.side,
            "b": self.b,
            "s": self.s,
            "k": self.k,
            "master_seed": self.master_seed,
            "delta": self.delta,
            "alpha": self.alpha,
        }

    def to_json(self) -> str:
        return json.dumps(self.descriptor(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SketchEnsemble":
        spec = json.loads(text)
        return cls(
            kind=spec["kind"],
            side=spec["side"],
            b=spec["b"],
            k=spec["k"],
            master_seed=spec["master_seed"],
            s=spec.get("s"),
            delta=spec.get("delta", 0.01),
            alpha=spec.get("alpha", 1e-6),
        )
