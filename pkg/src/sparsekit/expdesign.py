"""Swap rounding for experimental design with Min-IP-accelerated removal.

Maintains a size-n set S and the normalized inverse-square matrix
A_t = (c_t I + alpha sum_{i in S} x x^T)^{-2} with tr[A_t] = 1.  Each
iteration removes the member with the smallest B^- score (found by a Min-IP
structure or an eligible-filtered scan) and inserts the non-member with the
largest B^+ score (always by linear scan: the target values are ~1/n, too
small for approximate search to resolve).  The loop exits as soon as
lambda_min of the selected Gram matrix clears 1 - gamma eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .aipe import AipeConfig, InnerProductEstimator
from .errors import (
    ConfigError,
    IterationExhausted,
    NoEligibleRemoval,
    PreconditionViolation,
)
from .linalg import VectorFamily, WeightedSelection, eigendecompose
from .minip import MinIpConfig, RobustMinIpIndex, minip_transform_query

__all__ = [
    "find_ct",
    "b_scores",
    "swap_query_matrix",
    "swap_round",
    "SwapRunResult",
    "INELIGIBLE",
]

INELIGIBLE = None  # sentinel returned for b_minus when the denominator is <= 0


def find_ct(Z: np.ndarray, alpha: float, tol: float = 1e-10) -> float:
    """The constant c with sum_i (c + alpha lambda_i)^{-2} = 1.

    One eigendecomposition, then monotone bisection on the scalar map; each
    evaluation is O(d).  The map decreases from +inf to 0 on
    (-alpha lambda_min, inf), so the root exists and is unique.
    """
    vals = eigendecompose(Z).eigenvalues
    scaled = alpha * vals
    d = len(vals)

    def trace_at(c: float) -> float:
        return float(np.sum((c + scaled) ** -2.0))

    hi = math.sqrt(d) - scaled[0]  # trace_at(hi) = sum (sqrt(d) + a(l_i - l_min))^-2 <= 1
    lo_base = -scaled[0]
    step = max(abs(hi - lo_base), 1.0)
    lo = lo_base + step
    while trace_at(lo) < 1.0:
        step /= 2.0
        lo = lo_base + step
        if step < 1e-300:
            raise ArithmeticError("bisection bracket collapsed")
    hi = max(hi, lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if trace_at(mid) > 1.0:
            lo = mid
        else:
            hi = mid
        if abs(trace_at(0.5 * (lo + hi)) - 1.0) <= tol:
            break
    return 0.5 * (lo + hi)


def b_scores(A: np.ndarray, A_half: np.ndarray, x: np.ndarray, alpha: float, beta: float):
    """(B^+, B^-) for one vector; B^- is INELIGIBLE when its denominator <= 0."""
    num = float(x @ A @ x)
    half = float(x @ A_half @ x)
    b_plus = num / (beta + 2.0 * alpha * half)
    denom_minus = beta - 2.0 * alpha * half
    if denom_minus <= 0.0:
        if num == 0.0 and half == 0.0:
            return 0.0, 0.0
        return b_plus, INELIGIBLE
    return b_plus, num / denom_minus


def swap_query_matrix(A: np.ndarray, A_half: np.ndarray, n: int, epsilon: float, alpha: float) -> np.ndarray:
    """Matrix q with <q, x x^T> <= beta  <=>  B^-(x) <= (1-eps)/(beta n) for eligible x."""
    return A / ((1.0 - epsilon) / n) + 2.0 * alpha * A_half


@dataclass
class SwapRunResult:
    selection: WeightedSelection
    lambda_min: float
    swaps: int
    lambda_trace: list = field(default_factory=list)
    trace_minus: list = field(default_factory=list)  # B^-(x_{i_t}) per executed swap
    trace_plus: list = field(default_factory=list)  # B^+(x_{j_t}) per executed swap
    trace_norm: list = field(default_factory=list)  # tr[A_t] per iteration
    fallbacks: int = 0
    backend: str = "exact"
    initial_set: np.ndarray = None

    def as_dict(self) -> dict:
        return {
            "selection": self.selection.as_dict(),
            "lambda_min": self.lambda_min,
            "swaps": self.swaps,
            "lambda_trace": self.lambda_trace,
            "fallbacks": self.fallbacks,
            "backend": self.backend,
        }


def _removal_scan(rows, A, A_half, alpha, beta):
    """Index (into rows) minimizing B^- among eligible members."""
    nums = np.einsum("ij,jk,ik->i", rows, A, rows)
    halves = np.einsum("ij,jk,ik->i", rows, A_half, rows)
    denoms = beta - 2.0 * alpha * halves
    eligible = denoms > 0.0
    if not np.any(eligible):
        raise NoEligibleRemoval("no member has a positive B^- denominator")
    scores = np.full(len(rows), np.inf)
    scores[eligible] = nums[eligible] / denoms[eligible]
    return int(np.argmin(scores)), scores


def swap_round(
    family: VectorFamily,
    pi,
    n: int,
    epsilon: float,
    gamma: float = 3.0,
    c: float = 0.5,
    tau: float = None,
    backend: str = "exact",
    seed: int = 0,
    aipe_config: AipeConfig = None,
    minip_config: MinIpConfig = None,
) -> SwapRunResult:
    """Round the fractional design pi to an n-subset with lambda_min >= 1 - gamma eps.

    Expects the family already whitened: sum_i pi_i x_i x_i^T = I (use
    linalg.whiten first; the CLI exposes --whiten).
    """
    X = family.vectors
    m, d = X.shape
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (m,):
        raise PreconditionViolation("pi must assign one weight to every vector")
    if np.any(pi < 0.0) or np.any(pi > 1.0):
        raise PreconditionViolation("pi must lie in [0, 1]^m")
    if pi.sum() > n + 1e-9:
        raise PreconditionViolation(f"||pi||_1={pi.sum()} violates ||pi||_1 <= n={n}")
    iso = X.T @ (pi[:, None] * X)
    if np.linalg.norm(iso - np.eye(d)) > 1e-6:
        raise PreconditionViolation(
            "sum_i pi_i x_i x_i^T != I; whiten the family first"
        )
    if gamma < 3.0:
        raise PreconditionViolation(f"gamma={gamma} violates gamma >= 3")
    if not 0.0 < epsilon <= 1.0 / gamma:
        raise PreconditionViolation(f"epsilon={epsilon} violates 0 < eps <= 1/gamma")
    if not 0.0 < c < 1.0:
        raise ConfigError(f"c={c} violates 0 < c < 1")
    beta = 1.0 / c
    n_floor = 6.0 * d / epsilon**2 / (gamma - 1.0 - 2.0 / c)
    if gamma - 1.0 - 2.0 / c <= 0.0 or n < n_floor:
        raise PreconditionViolation(
            f"n={n} violates n >= 6d/eps^2/(gamma-1-2/c) = {n_floor}"
        )
    if n > m:
        raise PreconditionViolation(f"n={n} exceeds m={m}")

    alpha = math.sqrt(d) * beta / epsilon
    T_cap = math.ceil(n / (c * epsilon))
    rng = np.random.default_rng(seed)
    members = list(rng.choice(m, size=n, replace=False))
    result = SwapRunResult(
        selection=None,
        lambda_min=math.nan,
        swaps=0,
        backend=backend,
        initial_set=np.array(sorted(members)),
    )

    structure = None
    if backend == "aipe":
        if tau is None:
            raise ConfigError("aipe backend needs tau")
        hi = 1.01 * tau / (0.01 + tau)
        if not tau < c < hi:
            raise ConfigError(f"c={c} violates tau < c < 1.01*tau/(0.01+tau) = {hi}")
        eps_ds = math.sqrt(c * (1.0 - tau) / (c - tau)) - 1.0
        member_vecs = np.stack([np.outer(X[i], X[i]).ravel() for i in members])
        structure = InnerProductEstimator(
            member_vecs, eps_ds, 0.1, seed, aipe_config or AipeConfig()
        )
        est_id_to_member = dict(zip(structure.ids(), members))
    elif backend == "afn":
        if tau is None:
            raise ConfigError("afn backend needs tau")
        member_vecs = np.stack([np.outer(X[i], X[i]).ravel() for i in members])
        # diameter over ALL rows so later inserts from the complement fit
        global_dx = float(np.max(np.linalg.norm(X, axis=1) ** 2))
        structure = RobustMinIpIndex(
            member_vecs,
            c=c,
            tau=tau,
            lam=0.05,
            delta=0.1,
            eps=0.05,
            seed=seed,
            config=minip_config or MinIpConfig(),
            transform=True,
            D_X=global_dx,
        )
        est_id_to_member = dict(zip(range(n), members))
    elif backend != "exact":
        raise ConfigError(f"unknown backend {backend!r}")

    member_mask = np.zeros(m, dtype=bool)
    member_mask[members] = True
    removal_bound = (1.0 - epsilon) / (beta * n)

    def current_lambda_min():
        Z = X[member_mask].T @ X[member_mask]
        return float(np.linalg.eigvalsh(Z)[0]), Z

    lam_min, Z = current_lambda_min()
    result.lambda_trace.append(lam_min)
    t = 1
    while t <= T_cap and lam_min <= 1.0 - gamma * epsilon:
        c_t = find_ct(Z, alpha)
        eig = eigendecompose(Z)
        inv_gaps = 1.0 / (c_t + alpha * eig.eigenvalues)
        A_half = (eig.eigenvectors * inv_gaps) @ eig.eigenvectors.T
        A = (eig.eigenvectors * inv_gaps**2) @ eig.eigenvectors.T
        result.trace_norm.append(float(np.trace(A)))

        member_list = np.flatnonzero(member_mask)
        rows = X[member_list]
        i_t = None
        if structure is not None:
            q = tau * swap_query_matrix(A, A_half, n, epsilon, alpha).ravel()
            if np.linalg.norm(q) > 0.0:
                if backend == "aipe":
                    pid = structure.query_min(q / max(np.linalg.norm(q), 1.0), rng)
                    cand = est_id_to_member.get(pid)
                else:
                    xq, _ = minip_transform_query(q)
                    hit = structure.query(xq, rng)
                    cand = None if hit is None else est_id_to_member.get(hit[0])
                if cand is not None and member_mask[cand]:
                    bp, bm = b_scores(A, A_half, X[cand], alpha, beta)
                    if bm is not INELIGIBLE and bm <= removal_bound * (1.0 + 1e-9):
                        i_t = cand
                        b_minus_val = bm
            if i_t is None:
                result.fallbacks += 1
        if i_t is None:
            local, scores = _removal_scan(rows, A, A_half, alpha, beta)
            i_t = int(member_list[local])
            b_minus_val = float(scores[local])

        comp_list = np.flatnonzero(~member_mask)
        comp_rows = X[comp_list]
        nums = np.einsum("ij,jk,ik->i", comp_rows, A, comp_rows)
        halves = np.einsum("ij,jk,ik->i", comp_rows, A_half, comp_rows)
        plus_scores = nums / (beta + 2.0 * alpha * halves)
        j_t = int(comp_list[int(np.argmax(plus_scores))])
        b_plus_val = float(plus_scores.max())

        member_mask[i_t] = False
        member_mask[j_t] = True
        result.trace_minus.append(b_minus_val)
        result.trace_plus.append(b_plus_val)
        result.swaps += 1
        if structure is not None:
            if backend == "aipe":
                est_pid = next(k for k, v in est_id_to_member.items() if v == i_t)
                structure.delete(est_pid)
                del est_id_to_member[est_pid]
                new_pid = structure.insert(np.outer(X[j_t], X[j_t]).ravel())
                est_id_to_member[new_pid] = j_t
            else:
                est_pid = next(k for k, v in est_id_to_member.items() if v == i_t)
                structure.delete(est_pid)
                del est_id_to_member[est_pid]
                vec = np.outer(X[j_t], X[j_t]).ravel()
                aug, _ = structure_transform(structure, vec)
                new_pid = structure.insert(aug)
                est_id_to_member[new_pid] = j_t

        lam_min, Z = current_lambda_min()
        result.lambda_trace.append(lam_min)
        t += 1

    members_final = np.flatnonzero(member_mask)
    result.selection = WeightedSelection(members_final, np.ones(len(members_final)))
    result.lambda_min = lam_min
    if lam_min <= 1.0 - gamma * epsilon:
        raise IterationExhausted(
            f"hit the swap cap T={T_cap} at lambda_min={lam_min}",
            lambda_min=lam_min,
            result=result,
        )
    return result


def structure_transform(index: RobustMinIpIndex, vec: np.ndarray):
    """Re-apply the index's dataset transform to a new raw vector."""
    norm = float(np.linalg.norm(vec))
    if norm > index.D_X * (1 + 1e-12):
        raise PreconditionViolation("new point exceeds the index diameter D_X")
    scaled = vec / index.D_X
    tail = math.sqrt(max(1.0 - (norm / index.D_X) ** 2, 0.0))
    return np.concatenate([scaled, [0.0], [tail]]), index.D_X
