"""One-sided Kadison-Singer subset selection.

Greedy growth of a set S under a single upper barrier: at step j the score
of a candidate i against the scaled accumulator T_j = (1/beta) sum_{S} v v^T
is

    c_i = v_i^T (a_{j+1} I - T_j)^{-2} v_i / (Phi^{a_j} - Phi^{a_{j+1}})
          + v_i^T (a_{j+1} I - T_j)^{-1} v_i

and any i with c_i <= beta keeps the potential falling and the norm below
the barrier a_{j+1}.  The exact backend scans for the argmin; the
approximate backends ask a Min-IP structure for a candidate, verify the
witness inequality directly, and fall back to the scan (counted) whenever
the structure fails or its answer does not verify.  Chosen indices are
deleted from the backing structure immediately, so they are never proposed
again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .aipe import AipeConfig, InnerProductEstimator
from .errors import BarrierCollapse, ConfigError, PreconditionViolation
from .linalg import VectorFamily, WeightedSelection, check_isotropy, eigendecompose
from .minip import MinIpConfig, RobustMinIpIndex, minip_transform_query

__all__ = [
    "ks_barrier_sequence",
    "ks_query_matrix",
    "ks_greedy_exact",
    "ks_select",
    "KsRunResult",
]

NORM_TOL = 1e-9
ISOTROPY_TOL = 1e-6


def ks_barrier_sequence(N: float, m: int, n: int) -> np.ndarray:
    """a_i = 1/sqrt(N) + (1 + 1/(sqrt(N)-1)) i/m for i = 0..n."""
    if N < 2:
        raise ConfigError(f"N={N} violates N >= 2 (1/(sqrt(N)-1) must be finite)")
    if not 0 <= n < m:
        raise ConfigError(f"n={n} violates 0 <= n < m={m}")
    i = np.arange(n + 1, dtype=float)
    root = math.sqrt(N)
    return 1.0 / root + (1.0 + 1.0 / (root - 1.0)) * i / m


def ks_query_matrix(T: np.ndarray, a_prev: float, a_cur: float) -> np.ndarray:
    """The d x d matrix whose inner product with v v^T is the greedy score."""
    eig = eigendecompose(T)
    vals, Q = eig.eigenvalues, eig.eigenvectors
    if a_cur <= vals[-1]:
        raise BarrierCollapse(f"barrier a={a_cur} does not clear ||T||={vals[-1]}")
    inv_cur = 1.0 / (a_cur - vals)
    inv_prev = 1.0 / (a_prev - vals)
    phi_gap = float(inv_prev.sum() - inv_cur.sum())
    if phi_gap <= 0.0:
        raise BarrierCollapse("potential gap is nonpositive")
    M = (Q * inv_cur) @ Q.T
    return M @ M / phi_gap + M


def _check_family(family: VectorFamily, N: float) -> None:
    norms = np.linalg.norm(family.vectors, axis=1)
    target = 1.0 / math.sqrt(N)
    if np.any(np.abs(norms - target) > NORM_TOL):
        raise PreconditionViolation(f"every vector must have norm 1/sqrt(N)={target}")
    if not check_isotropy(family, ISOTROPY_TOL):
        raise PreconditionViolation("family is not isotropic")
    if family.count != family.dim * N:
        raise PreconditionViolation(
            f"m={family.count} must equal d*N={family.dim * N}"
        )


@dataclass
class KsRunResult:
    selection: WeightedSelection
    final_norm: float
    barrier_sequence: np.ndarray
    potential_trace: list = field(default_factory=list)
    score_trace: list = field(default_factory=list)
    fallbacks: int = 0
    backend: str = "exact"
    beta: float = 1.0

    def as_dict(self) -> dict:
        return {
            "selection": self.selection.as_dict(),
            "final_norm": self.final_norm,
            "barrier_sequence": self.barrier_sequence.tolist(),
            "potential_trace": self.potential_trace,
            "score_trace": self.score_trace,
            "fallbacks": self.fallbacks,
            "backend": self.backend,
            "beta": self.beta,
        }


def _greedy_loop(family, N, n, beta, propose, on_select=None) -> KsRunResult:
    """Core loop; `propose(Qmat)` suggests a candidate index or None.

    Suggested indices are verified against the witness inequality
    c_i <= beta; failures fall back to the exact argmin scan over the
    remaining set (counted), so every accepted step preserves the barrier
    invariants.  `on_select(i)` retires the chosen index from any backing
    structure before the next step.
    """
    d = family.dim
    m = family.count
    V = family.vectors
    a = ks_barrier_sequence(N, m, n)
    T = np.zeros((d, d))
    remaining = list(range(m))
    chosen: list[int] = []
    result = KsRunResult(selection=None, final_norm=math.nan, barrier_sequence=a, beta=beta)
    result.potential_trace.append(d / a[0])  # Phi^{a_0}(0)
    witness_tol = 1.0 + 1e-9
    for j in range(n):
        Qmat = ks_query_matrix(T, a[j], a[j + 1])
        i_star = propose(Qmat)
        if i_star is not None and i_star in remaining:
            witness = float(V[i_star] @ Qmat @ V[i_star])
            if witness > beta * witness_tol:
                i_star = None
        else:
            i_star = None
        if i_star is None:
            result.fallbacks += 1
            rows = V[remaining]
            scores = np.einsum("ij,jk,ik->i", rows, Qmat, rows)
            i_star = remaining[int(np.argmin(scores))]
            witness = float(scores.min())
            if witness > beta * witness_tol:
                raise BarrierCollapse(
                    f"no index keeps the potential bounded at step {j}"
                )
        result.score_trace.append(witness)
        T = T + np.outer(V[i_star], V[i_star]) / beta
        chosen.append(i_star)
        remaining.remove(i_star)
        if on_select is not None:
            on_select(i_star)
        vals = np.linalg.eigvalsh(T)
        if vals[-1] >= a[j + 1]:
            raise BarrierCollapse(
                f"accumulator norm {vals[-1]} crossed barrier {a[j + 1]}"
            )
        result.potential_trace.append(float(np.sum(1.0 / (a[j + 1] - vals))))
    selection = WeightedSelection(np.array(chosen), np.ones(len(chosen)))
    result.selection = selection
    result.final_norm = float(np.linalg.eigvalsh(selection.reconstruct(family))[-1])
    return result


def ks_greedy_exact(family: VectorFamily, N: float, n: int) -> KsRunResult:
    """Exact greedy (beta = 1): final norm < a_n."""
    _check_family(family, N)
    result = _greedy_loop(family, N, n, 1.0, lambda Qmat: None)
    result.fallbacks = 0  # the scan is the primary path here, not a fallback
    return result


def ks_select(
    family: VectorFamily,
    N: float,
    n: int,
    backend: str = "exact",
    c: float = None,
    tau: float = None,
    delta: float = 0.1,
    seed: int = 0,
    aipe_config: AipeConfig = None,
    minip_config: MinIpConfig = None,
) -> KsRunResult:
    """Select n indices with the chosen backend.

    Output-norm guarantees: exact backend < a_n; aipe backend <= (1/c) a_n;
    afn backend <= (2/c) a_n.
    """
    _check_family(family, N)
    if backend == "exact":
        return ks_greedy_exact(family, N, n)
    if c is None or tau is None:
        raise ConfigError("approximate backends need both c and tau")
    if not tau < c:
        raise ConfigError(f"c={c} violates c > tau={tau}")
    beta = 1.0 / c
    V = family.vectors
    vec_points = np.stack([np.outer(v, v).ravel() for v in V])
    rng = np.random.default_rng(seed)

    if backend == "aipe":
        hi = 1.01 * tau / (0.01 + tau)
        if not c < hi:
            raise ConfigError(f"c={c} violates c < 1.01*tau/(0.01+tau) = {hi}")
        # distance ratio this (c, tau) demands: (1+eps)^2 = c(1-tau)/(c-tau)
        eps = math.sqrt(c * (1.0 - tau) / (c - tau)) - 1.0
        est = InnerProductEstimator(
            vec_points, eps, delta, seed, aipe_config or AipeConfig()
        )

        def propose(Qmat):
            q = tau * Qmat.ravel()
            norm = np.linalg.norm(q)
            if norm == 0.0:
                return None
            return est.query_min(q / max(norm, 1.0), rng)

        result = _greedy_loop(family, N, n, beta, propose, on_select=est.delete)
        result.backend = "aipe"
        return result

    if backend == "afn":
        index = RobustMinIpIndex(
            vec_points,
            c=c,
            tau=tau,
            lam=0.05,
            delta=delta,
            eps=0.05,
            seed=seed,
            config=minip_config or MinIpConfig(),
            transform=True,
        )

        def propose(Qmat):
            q = tau * Qmat.ravel()
            if np.linalg.norm(q) == 0.0:
                return None
            xq, _ = minip_transform_query(q)
            hit = index.query(xq, rng)
            return None if hit is None else hit[0]

        result = _greedy_loop(family, N, n, beta, propose, on_select=index.delete)
        result.backend = "afn"
        return result

    raise ConfigError(f"unknown backend {backend!r}")
