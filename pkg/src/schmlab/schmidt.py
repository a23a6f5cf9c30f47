"""Schmidt-number certification.

Upper bounds come from explicit convex decompositions (eigen-ensemble,
attached generating ensembles, and randomized remixing of the eigenbasis);
lower bounds from the canonical one-parameter family of k-positive maps
Lambda_t(rho) = Tr(rho) I - t rho, which is k-positive exactly for
t <= 1/k.  The module also builds kernel-projector Schmidt witnesses and
runs the greedy edge-state decomposition.

The lower bound is sound but incomplete: it exhausts one map family, not
all k-positive maps, so `lower <= SN <= upper` always, with equality not
guaranteed.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from . import linalg
from .errors import ValidationError, WitnessDegenerateError
from .linalg import BipartiteDims
from .sampling import derive_seed, rng_for, random_sr_pure_state
from .states import (
    DEFAULT_TOL,
    DensityMatrix,
    Ensemble,
    PureState,
    RankTolerance,
    schmidt_rank,
)

# Eigenvalue below -CERT_MARGIN counts as a certified positivity violation.
CERT_MARGIN = 1e-9

# Default shift for the shift-and-invert descent in min_overlap_sr.
OVERLAP_SHIFT = 1e-3

# Total dimension up to which min_overlap_sr also runs the dense oracle.
DENSE_ORACLE_LIMIT = 16


def _thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("SCHMLAB_THREADS", "1")))
    except ValueError:
        return 1


def _multistart(run: Callable[[int], tuple], restarts: int):
    """Run restarts serially or in threads; reduce deterministically.

    Results are ordered by (value, restart index), so the winner does not
    depend on scheduling.
    """
    threads = _thread_cap()
    if threads > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(restarts)))
    else:
        results = [run(i) for i in range(restarts)]
    best_idx = min(range(len(results)), key=lambda i: (results[i][0], i))
    return results[best_idx]


# ---------------------------------------------------------------------------
# Lambda-map lower bound
# ---------------------------------------------------------------------------

def lambda_map(rho, t: float) -> np.ndarray:
    """Lambda_t(rho) = Tr(rho) I - t rho on a single system."""
    rho = linalg.as_matrix(rho, "rho")
    if rho.shape[0] != rho.shape[1]:
        raise ValidationError(f"rho must be square, got {rho.shape}")
    return np.trace(rho) * np.eye(rho.shape[0]) - t * rho


def apply_lambda_on_b(matrix: np.ndarray, dims: BipartiteDims, t: float) -> np.ndarray:
    """(Id_A ⊗ Lambda_t)(omega) = (Tr_B omega) ⊗ I_B - t omega."""
    reduced = linalg.partial_trace(matrix, dims, "B")
    return np.kron(reduced, np.eye(dims.dimB)) - t * matrix


@dataclass(frozen=True)
class LambdaEvidence:
    """Violation record for the lower bound: parameter and eigenvalue."""

    t: float
    eigenvalue: float


def sn_lower_bound(omega: DensityMatrix,
                   margin: float = CERT_MARGIN) -> tuple[int, Optional[LambdaEvidence]]:
    """Largest k+1 with (Id ⊗ Lambda_{1/k})(omega) negative; 1 if none.

    The scan over k = 1 .. min(dim)-1 is monotone: the violation eigenvalue
    is nondecreasing in k, so it stops at the first non-violation.
    """
    best: Optional[tuple[int, float]] = None
    for k in range(1, omega.dims.min_dim):
        ev = linalg.min_eigenvalue(apply_lambda_on_b(omega.matrix, omega.dims, 1.0 / k))
        if ev < -margin:
            best = (k, ev)
        else:
            break
    if best is None:
        return 1, None
    k, ev = best
    return k + 1, LambdaEvidence(t=1.0 / k, eigenvalue=ev)


# ---------------------------------------------------------------------------
# Decomposition upper bound
# ---------------------------------------------------------------------------

def eigen_ensemble(omega: DensityMatrix, floor: float = 1e-12) -> Ensemble:
    """Spectral decomposition as an ensemble of eigenvectors."""
    vals, vecs = linalg.eigh(omega.matrix)
    keep = vals > floor
    weights = vals[keep]
    weights = weights / weights.sum()
    members = []
    for w, idx in zip(weights, np.nonzero(keep)[0]):
        members.append((float(w), PureState.normalized(vecs[:, idx], omega.dims)))
    return tuple(members)


def ensemble_max_sr(members: Sequence[tuple[float, PureState]],
                    tol: RankTolerance = DEFAULT_TOL) -> int:
    return max(schmidt_rank(psi, tol) for _, psi in members)


def _ensemble_from_columns(cols: np.ndarray, dims: BipartiteDims) -> Ensemble:
    members = []
    for j in range(cols.shape[1]):
        w = float(np.vdot(cols[:, j], cols[:, j]).real)
        if w > 1e-14:
            members.append((w, PureState.normalized(cols[:, j], dims)))
    total = sum(w for w, _ in members)
    return tuple((w / total, psi) for w, psi in members)


def _truncate_columns_to_sr(cols: np.ndarray, dims: BipartiteDims, r: int) -> np.ndarray:
    out = np.empty_like(cols)
    for j in range(cols.shape[1]):
        m = cols[:, j].reshape(dims.dimA, dims.dimB)
        u, s, vh = np.linalg.svd(m, full_matrices=False)
        out[:, j] = ((u[:, :r] * s[:r]) @ vh[:r, :]).reshape(-1)
    return out


def sn_upper_bound(omega: DensityMatrix, budget: int = 500, seed: int = 0,
                   tol: RankTolerance = DEFAULT_TOL,
                   hints: Optional[Sequence[Ensemble]] = None,
                   polish_iters: int = 60, floor: int = 1) -> tuple[int, Ensemble]:
    """Best decomposition found: (max member Schmidt rank, ensemble).

    Candidates: the eigen-ensemble, any ensemble attached to the state,
    any caller hints (validated), and `budget` randomized remixings of the
    eigenbasis.  A remix draws a Haar co-isometry U (all ensembles of a
    state arise this way) and then alternates SVD truncation of the members
    with an orthogonal-Procrustes refit, steering the ensemble toward
    members of lower Schmidt rank while reconstructing omega exactly.
    `floor` is a known lower bound on the Schmidt number; the remix search
    stops once it is reached, since no decomposition can beat it.
    """
    dims = omega.dims
    candidates: list[Ensemble] = [eigen_ensemble(omega)]
    if omega.ensemble is not None:
        candidates.append(omega.ensemble)
    for hint in hints or ():
        state_with_hint = omega.with_ensemble(hint)  # validates the hint
        candidates.append(state_with_hint.ensemble)

    best_ens = min(candidates, key=lambda ens: ensemble_max_sr(ens, tol))
    best_k = ensemble_max_sr(best_ens, tol)
    if best_k <= max(1, floor) or budget <= 0:
        return best_k, best_ens

    vals, vecs = linalg.eigh(omega.matrix)
    rank = max(1, int(np.count_nonzero(vals > 1e-12)))
    factor = vecs[:, :rank] * np.sqrt(np.clip(vals[:rank], 0.0, None))  # M M† = omega

    for trial in range(budget):
        target = best_k - 1
        size = rank + trial % (rank + 1)
        rng = rng_for(seed, f"sn_upper/remix/{trial}")
        g = rng.normal(size=(size, rank)) + 1j * rng.normal(size=(size, rank))
        q, _ = np.linalg.qr(g)
        co_iso = q.conj().T  # rank x size, co_iso @ co_iso† = I
        cols = factor @ co_iso
        for _ in range(polish_iters):
            truncated = _truncate_columns_to_sr(cols, dims, target)
            u, _, vh = np.linalg.svd(factor.conj().T @ truncated, full_matrices=False)
            co_iso = u @ vh
            new_cols = factor @ co_iso
            if np.linalg.norm(new_cols - cols) < 1e-12:
                cols = new_cols
                break
            cols = new_cols
        ens = _ensemble_from_columns(cols, dims)
        k = ensemble_max_sr(ens, tol)
        if k < best_k:
            best_k, best_ens = k, ens
            if best_k <= max(1, floor):
                break
    return best_k, best_ens


@dataclass(frozen=True)
class SchmidtCertificate:
    """Two-sided Schmidt number certificate.

    ``lower <= SN(state) <= upper`` whenever ``consistent`` is true;
    a false flag marks the (never silently hidden) case where the
    heuristic upper-bound search failed to reach the certified lower bound.
    """

    lower: int
    upper: int
    lower_evidence: Optional[LambdaEvidence]
    upper_evidence: Ensemble
    consistent: bool


def certify(omega: DensityMatrix, budget: int = 500, seed: int = 0,
            tol: RankTolerance = DEFAULT_TOL,
            hints: Optional[Sequence[Ensemble]] = None) -> SchmidtCertificate:
    """Run both bounds and assemble the certificate."""
    lower, evidence = sn_lower_bound(omega)
    upper, ensemble = sn_upper_bound(omega, budget=budget, seed=seed, tol=tol,
                                     hints=hints, floor=lower)
    return SchmidtCertificate(
        lower=lower,
        upper=upper,
        lower_evidence=evidence,
        upper_evidence=ensemble,
        consistent=lower <= upper,
    )


# ---------------------------------------------------------------------------
# Minimal overlap of bounded-Schmidt-rank states with a PSD operator
# ---------------------------------------------------------------------------

def _truncate_vec_to_sr(vec: np.ndarray, dims: BipartiteDims, r: int) -> np.ndarray:
    m = vec.reshape(dims.dimA, dims.dimB)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    out = ((u[:, :r] * s[:r]) @ vh[:r, :]).reshape(-1)
    norm = np.linalg.norm(out)
    if norm <= 1e-300:
        out = np.zeros_like(vec)
        out[0] = 1.0
        return out
    return out / norm


def _overlap(p4, phi: np.ndarray) -> float:
    return float(np.vdot(phi, (p4 @ phi)).real)


def _seesaw_min_overlap(p4: np.ndarray, dims: BipartiteDims, r: int,
                        a: np.ndarray, b: np.ndarray, sweeps: int,
                        converge_tol: float = 1e-12):
    """Exact alternating minimization of <phi|P|phi> over Schmidt rank <= r.

    With one side's frame held orthonormal, the optimal other side is the
    bottom eigenvector of a contracted (r*d)-dimensional quadratic form, so
    every sweep is a pair of exact eigenproblems.  `p4` is the operator
    reshaped to (dA, dB, dA, dB).
    """
    dA, dB = dims.dimA, dims.dimB
    value = np.inf
    for _ in range(sweeps):
        # B orthonormal -> solve for the A-side stack.
        b, rb = np.linalg.qr(b)
        a = a @ rb.T
        qa = np.einsum("aibj,ik,jl->kalb", p4, b.conj(), b).reshape(r * dA, r * dA)
        vals, vecs = np.linalg.eigh((qa + qa.conj().T) / 2)
        a = vecs[:, 0].reshape(r, dA).T
        # A orthonormal -> solve for the B-side stack.
        a, ra = np.linalg.qr(a)
        b = b @ ra.T
        qb = np.einsum("aibj,ak,bl->kilj", p4, a.conj(), a).reshape(r * dB, r * dB)
        vals, vecs = np.linalg.eigh((qb + qb.conj().T) / 2)
        b = vecs[:, 0].reshape(r, dB).T
        if abs(vals[0] - value) < converge_tol:
            value = vals[0]
            break
        value = vals[0]
    phi = (a @ b.T).reshape(-1)
    phi /= np.linalg.norm(phi)
    return float(value), a, b, phi


def min_overlap_grid(p, r: int, dims: BipartiteDims, samples: int = 200,
                     sweeps: int = 80, seed: int = 0) -> tuple[float, PureState]:
    """Grid + polish oracle for min <phi|P|phi> over Schmidt rank <= r.

    Independent of the shift-and-invert path: random Schmidt-rank-r seeds
    polished by the exact alternating minimization of `_seesaw_min_overlap`.
    """
    p = linalg.hermitize(p)
    dA, dB = dims.dimA, dims.dimB
    r = min(r, dims.min_dim)
    p4 = p.reshape(dA, dB, dA, dB)

    def run(sample: int):
        rng = rng_for(seed, f"min_overlap_grid/{sample}")
        a = rng.normal(size=(dA, r)) + 1j * rng.normal(size=(dA, r))
        b = rng.normal(size=(dB, r)) + 1j * rng.normal(size=(dB, r))
        value, _, _, phi = _seesaw_min_overlap(p4, dims, r, a, b, sweeps)
        return value, phi

    value, phi = _multistart(run, samples)
    return float(value), PureState(phi, dims)


def min_overlap_sr(p, r: int, dims: BipartiteDims, restarts: int = 64,
                   iters: int = 150, shift: float = OVERLAP_SHIFT, seed: int = 0,
                   dense_limit: int = DENSE_ORACLE_LIMIT) -> tuple[float, PureState]:
    """epsilon = min <phi|P|phi> over pure phi with Schmidt rank <= r.

    Main path: multi-start alternating descent that pushes toward the
    bottom of P by shift-and-invert, then SVD-truncates back to Schmidt
    rank r.  At total dimension <= `dense_limit` the independent grid +
    polish oracle also runs and the smaller value wins.  The landscape is
    nonconvex; the result is the best local value found, reproducible for
    a fixed seed.
    """
    p = linalg.hermitize(p)
    if p.shape[0] != dims.total:
        raise ValidationError(f"operator shape {p.shape} does not match dims {dims}")
    if not 1 <= r:
        raise ValidationError(f"rank bound must be >= 1, got {r}")
    if r >= dims.min_dim:
        vals, vecs = linalg.eigh(p)
        return float(vals[-1]), PureState.normalized(vecs[:, -1], dims)

    n = dims.total
    solver = scipy.linalg.cho_factor(p + shift * np.eye(n), check_finite=False)

    def run(restart: int):
        rng = rng_for(seed, f"min_overlap/{restart}")
        phi = random_sr_pure_state(rng, dims, r).amplitudes
        value = _overlap(p, phi)
        for _ in range(iters):
            step = scipy.linalg.cho_solve(solver, phi, check_finite=False)
            phi_next = _truncate_vec_to_sr(step, dims, r)
            value_next = _overlap(p, phi_next)
            if abs(value_next - value) < 1e-14:
                phi, value = phi_next, value_next
                break
            phi, value = phi_next, value_next
        return value, phi

    value, phi = _multistart(run, restarts)
    best = (float(value), PureState(phi, dims))

    if dims.total <= dense_limit:
        oracle = min_overlap_grid(p, r, dims, samples=max(restarts, 128),
                                  seed=derive_seed(seed, "min_overlap/oracle"))
        if oracle[0] < best[0]:
            best = oracle
    return best


# ---------------------------------------------------------------------------
# Witness construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WitnessOperator:
    """Hermitian witness with its construction recipe and detection margin."""

    matrix: np.ndarray
    order: int
    recipe: dict
    margin: float


def build_witness(delta: DensityMatrix, k: int, c_op=None, restarts: int = 64,
                  seed: int = 0, tol: RankTolerance = DEFAULT_TOL) -> WitnessOperator:
    """Kernel-projector witness W = P - (eps/c) C of order k.

    P projects onto the kernel of `delta`, eps is the minimal overlap of
    Schmidt-rank <= k-1 pure states with P, and c = ||C||.  Then
    Tr(W sigma) >= 0 on the whole order-(k-1) Schmidt class while
    Tr(W delta) = -(eps/c) Tr(C delta) < 0.
    """
    if k < 2:
        raise ValidationError(f"witness order must be >= 2, got {k}")
    dims = delta.dims
    c_mat = np.eye(dims.total, dtype=np.complex128) if c_op is None \
        else linalg.hermitize(c_op)
    if linalg.min_eigenvalue(c_mat) < -CERT_MARGIN:
        raise ValidationError("C must be positive semidefinite")
    trace_c_delta = float(np.trace(c_mat @ delta.matrix).real)
    if trace_c_delta <= 1e-12:
        raise ValidationError("C must have Tr(C delta) > 0")

    support, _, kernel = linalg.support_kernel(delta.matrix, tol.rel_cutoff)
    if kernel.shape[1] == 0:
        raise ValidationError("delta has full rank; kernel-projector witness needs a kernel")
    proj = kernel @ kernel.conj().T

    epsilon, argmin = min_overlap_sr(proj, k - 1, dims, restarts=restarts, seed=seed)
    if epsilon <= CERT_MARGIN:
        raise WitnessDegenerateError(
            f"minimal kernel overlap {epsilon:.3e} is below the certification floor; "
            "low-Schmidt-rank states approach the kernel of delta",
            residual=epsilon,
        )
    c_norm = linalg.operator_norm(c_mat)
    w = proj - (epsilon / c_norm) * c_mat
    margin = float(np.trace(w @ delta.matrix).real)
    recipe = {
        "kind": "kernel_projector",
        "P": proj,
        "C": c_mat,
        "epsilon": float(epsilon),
        "c": float(c_norm),
        "seed": int(seed),
        "argmin": argmin.amplitudes,
    }
    return WitnessOperator(matrix=w, order=k, recipe=recipe, margin=margin)


def witness_from_lambda(omega: DensityMatrix) -> Optional[WitnessOperator]:
    """Witness (Id ⊗ Lambda_t)(|v><v|) from the lower-bound violation.

    Returns None when the Lambda family detects nothing.  The map is
    self-adjoint, so Tr(W omega) equals the violating eigenvalue.
    """
    lower, evidence = sn_lower_bound(omega)
    if evidence is None:
        return None
    out = apply_lambda_on_b(omega.matrix, omega.dims, evidence.t)
    _, vecs = linalg.eigh(out)
    v = vecs[:, -1]
    w = apply_lambda_on_b(np.outer(v, v.conj()), omega.dims, evidence.t)
    recipe = {"kind": "lambda_map", "t": evidence.t}
    return WitnessOperator(matrix=linalg.hermitize(w), order=lower,
                           recipe=recipe, margin=evidence.eigenvalue)


# ---------------------------------------------------------------------------
# Subtraction and the edge decomposition
# ---------------------------------------------------------------------------

def _support_data(matrix: np.ndarray, rel_cutoff: float):
    vals, vecs = linalg.eigh(matrix)
    if vals[0] <= 0.0:
        raise ValidationError("operator is numerically zero")
    rank = int(np.count_nonzero(vals >= rel_cutoff * vals[0]))
    return vecs[:, :rank], vals[:rank], vecs[:, rank:]


def _max_subtraction_raw(matrix: np.ndarray, support, vals, sigma: np.ndarray,
                         kernel_tol: float) -> float:
    sigma_tr = float(np.trace(sigma).real)
    inside = support.conj().T @ sigma @ support
    kernel_mass = sigma_tr - float(np.trace(inside).real)
    if kernel_mass > kernel_tol * max(sigma_tr, 1e-30):
        return 0.0
    scaled = inside / np.sqrt(vals)[:, None] / np.sqrt(vals)[None, :]
    top = float(np.linalg.eigvalsh((scaled + scaled.conj().T) / 2)[-1])
    if top <= 1e-300:
        return 0.0
    lam = 1.0 / top
    # Small kernel leakage can push omega - lam*sigma slightly below the
    # PSD floor; shave lam until the exact check passes.
    for _ in range(60):
        if linalg.min_eigenvalue(matrix - lam * sigma) >= -CERT_MARGIN:
            break
        lam *= 0.995
    else:
        return 0.0
    return lam


def max_subtraction(omega: DensityMatrix, sigma: DensityMatrix,
                    tol: RankTolerance = DEFAULT_TOL) -> float:
    """Largest lam >= 0 with omega - lam * sigma still PSD.

    Zero when sigma leaks outside the support of omega (checked at the rank
    tolerance); otherwise 1 / ||(omega^+)^(1/2) sigma (omega^+)^(1/2)||,
    verified against the exact eigenvalue floor.
    """
    if omega.dims != sigma.dims:
        raise ValidationError("omega and sigma must share dims")
    support, vals, _ = _support_data(omega.matrix, tol.rel_cutoff)
    return _max_subtraction_raw(omega.matrix, support, vals, sigma.matrix,
                                kernel_tol=tol.rel_cutoff)


def _project_to_support_sr(phi: np.ndarray, support: np.ndarray,
                           dims: BipartiteDims, r: int, iters: int = 500,
                           target: float = 1e-13) -> tuple[np.ndarray, float]:
    """Alternating projection onto (support subspace) ∩ (Schmidt rank <= r).

    Returns the final unit vector and its residual kernel mass.  Converges
    linearly when the intersection is transversal; may stall at a positive
    residual when the support holds no rank-r states near the start.
    """
    kernel_mass = np.inf
    for _ in range(iters):
        # phi stays exactly Schmidt rank r; stop once its own leakage out of
        # the support is negligible.
        inside = support @ (support.conj().T @ phi)
        norm = np.linalg.norm(inside)
        if norm <= 1e-300:
            return phi, 1.0
        kernel_mass = max(0.0, 1.0 - norm * norm)
        if kernel_mass < target:
            return phi, kernel_mass
        phi = _truncate_vec_to_sr(inside, dims, r)
    return phi, kernel_mass


def _subtractable_candidates(matrix: np.ndarray, dims: BipartiteDims, r: int,
                             restarts: int, seed: int,
                             tol: RankTolerance) -> list[tuple[float, np.ndarray]]:
    """Distinct Schmidt rank <= r states with positive subtraction weight.

    The weight of phi is tr / <phi|omega^+|phi> and is nonzero only for phi
    inside the support of omega.  On a rank-deficient support the feasible
    set is thin, so each start (truncated support eigenvectors plus random
    support vectors) is driven into it by plain alternating projection;
    tilting that search collapses the start diversity into a single basin.
    On a full support feasibility is free and an exact seesaw descent of
    the normalized pseudo-inverse picks heavy candidates instead.  Feasible
    points are deduplicated by overlap and ordered by decreasing weight.
    """
    support, vals, kernel = _support_data(matrix, tol.rel_cutoff)
    tr = float(np.trace(matrix).real)
    rank = support.shape[1]
    full_support = kernel.shape[1] == 0

    pinv4 = kernel4 = None
    if full_support:
        pinv = (support / vals) @ support.conj().T * tr
        pinv = (pinv + pinv.conj().T) / 2 * (float(vals[-1]) / tr)
        pinv4 = pinv.reshape(dims.dimA, dims.dimB, dims.dimA, dims.dimB)
    else:
        kernel4 = (kernel @ kernel.conj().T).reshape(
            dims.dimA, dims.dimB, dims.dimA, dims.dimB
        )

    n_warm = min(rank, max(2, restarts // 4))

    def run(restart: int):
        if restart < n_warm:
            phi = _truncate_vec_to_sr(support[:, restart], dims, r)
        else:
            rng = rng_for(seed, f"subtract/{restart}")
            g = rng.normal(size=rank) + 1j * rng.normal(size=rank)
            phi = _truncate_vec_to_sr(support @ g, dims, r)
        if full_support:
            m = phi.reshape(dims.dimA, dims.dimB)
            u, s, vh = np.linalg.svd(m, full_matrices=False)
            a = u[:, :r] * s[:r]
            b = vh[:r, :].T
            _, _, _, phi = _seesaw_min_overlap(pinv4, dims, r, a, b, sweeps=80)
            kernel_mass = 0.0
        elif restart % 2 == 0:
            phi, kernel_mass = _project_to_support_sr(phi, support, dims, r)
        else:
            # Second engine: exact seesaw on the kernel projector reaches
            # basins the plain alternating projection misses.
            m = phi.reshape(dims.dimA, dims.dimB)
            u, s, vh = np.linalg.svd(m, full_matrices=False)
            a = u[:, :r] * s[:r]
            b = vh[:r, :].T
            kernel_mass, _, _, phi = _seesaw_min_overlap(
                kernel4, dims, r, a, b, sweeps=150)
            if 0 < kernel_mass <= 1e-6:
                phi, kernel_mass = _project_to_support_sr(phi, support, dims, r)
        if kernel_mass > tol.rel_cutoff:
            return 0.0, None
        if not full_support and kernel_mass > 1e-14:
            # Candidates are later subtracted with their full weight against
            # a nearly-closed support gap, where leakage out of the support
            # is amplified quadratically; polish it down hard.
            phi, kernel_mass = _project_to_support_sr(phi, support, dims, r,
                                                      iters=2000, target=1e-14)
            if kernel_mass > 1e-13:
                return 0.0, None
        sigma = np.outer(phi, phi.conj())
        lam = _max_subtraction_raw(matrix / tr, support, vals / tr, sigma,
                                   kernel_tol=tol.rel_cutoff)
        return -lam, phi

    threads = _thread_cap()
    total = n_warm + restarts
    if threads > 1 and total > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(total)))
    else:
        results = [run(i) for i in range(total)]

    found: list[tuple[float, np.ndarray]] = []
    for neg_lam, phi in sorted(results, key=lambda item: item[0]):
        if phi is None or neg_lam >= 0.0:
            continue
        if any(abs(np.vdot(phi, other)) > 0.999 for _, other in found):
            continue
        found.append((-neg_lam, phi))
    return found


def _best_subtractable(matrix: np.ndarray, dims: BipartiteDims, r: int,
                       restarts: int, seed: int,
                       tol: RankTolerance) -> tuple[float, Optional[np.ndarray]]:
    """Heaviest subtractable Schmidt rank <= r state found by the sweep."""
    found = _subtractable_candidates(matrix, dims, r, restarts, seed, tol)
    if not found:
        return 0.0, None
    return found[0]


def _packing_weights(matrix: np.ndarray, pool: Sequence[np.ndarray],
                     c0: Optional[np.ndarray] = None, mu0: float = 0.1,
                     mu_min: float = 1e-5) -> np.ndarray:
    """maximize sum(c) subject to sum_i c_i |phi_i><phi_i| <= omega, c >= 0.

    Log-barrier Newton restricted to the support of omega.  Greedy weight
    assignment along overlapping candidates strands removable mass; this
    small packing program reallocates the collected pool exactly.  The
    barrier stops at a spectral gap of about `mu_min` * rank: candidates
    leak out of the support at the 1e-13 level, and pushing the gap lower
    would amplify that leakage into remainder negativity beyond the PSD
    floor (the leftover gap only pads the reported mixing weight upward,
    which stays an upper bound).
    """
    support, vals, _ = _support_data(matrix, 1e-10)
    omega_s = support.conj().T @ matrix @ support
    omega_s = (omega_s + omega_s.conj().T) / 2
    members = np.stack([support.conj().T @ phi for phi in pool], axis=1)
    m = members.shape[1]
    c = np.full(m, 1e-8) if c0 is None else np.maximum(c0, 1e-8) * 0.9
    for _ in range(60):  # pull the start strictly inside the cone
        gap = omega_s - (members * c) @ members.conj().T
        if np.linalg.eigvalsh((gap + gap.conj().T) / 2)[0] > 1e-14:
            break
        c = c * 0.5
    mu = mu0
    while mu > mu_min:
        for _ in range(60):
            gap = omega_s - (members * c) @ members.conj().T
            gap = (gap + gap.conj().T) / 2
            try:
                chol = np.linalg.cholesky(gap)
            except np.linalg.LinAlgError:
                c = c * 0.5
                continue
            solved = np.linalg.solve(chol, members)
            inner = solved.conj().T @ solved  # <phi_i| gap^-1 |phi_j>
            grad = -1.0 + mu * np.diag(inner).real - mu / c
            hess = mu * (np.abs(inner) ** 2) + np.diag(mu / c ** 2)
            try:
                step = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                break
            t = 1.0
            ok = False
            for _ in range(50):
                trial = c + t * step
                if np.all(trial > 0):
                    gap_t = omega_s - (members * trial) @ members.conj().T
                    if np.linalg.eigvalsh((gap_t + gap_t.conj().T) / 2)[0] > 0:
                        ok = True
                        break
                t *= 0.5
            if not ok:
                break
            c = c + t * step
            if np.linalg.norm(t * step) < 1e-12:
                break
        mu *= 0.2
    return np.maximum(c, 0.0)


def max_subtractable(omega: DensityMatrix, r: int, restarts: int = 64,
                     seed: int = 0,
                     tol: RankTolerance = DEFAULT_TOL) -> tuple[float, Optional[PureState]]:
    """Largest weight of any Schmidt rank <= r pure state under omega."""
    lam, phi = _best_subtractable(omega.matrix, omega.dims, r, restarts, seed, tol)
    if phi is None:
        return 0.0, None
    return lam, PureState(phi, omega.dims)


@dataclass(frozen=True)
class EdgeDecomposition:
    """omega = (1-p) * within + p * edge with within in the lower class.

    p is an upper bound on the minimal mixing weight: the subtraction is a
    greedy heuristic, not the exact compactness argument.
    """

    p: float
    within: Optional[DensityMatrix]
    edge: Optional[DensityMatrix]
    removed: Ensemble
    rounds: int


def edge_decompose(omega: DensityMatrix, k: int, budget: int = 500, seed: int = 0,
                   tol: RankTolerance = DEFAULT_TOL, damping: float = 0.5,
                   weight_floor: float = 1e-6) -> EdgeDecomposition:
    """Greedy split of a Schmidt-class-k state into class-(k-1) plus edge.

    Greedy subtraction drives the bulk of the split: each round searches
    the remainder for subtractable Schmidt rank <= k-1 pure states and
    removes `damping` times the best candidate's maximal weight.  Because
    greedy weight choices along overlapping candidates strand removable
    mass, every discovered candidate is kept in a pool and, whenever the
    greedy step stalls, the pool weights are reallocated exactly by a
    small packing program; the loop ends when reallocation stops helping,
    several consecutive rounds find nothing above `weight_floor`, or the
    budget of search restarts is spent.
    """
    if k < 2:
        raise ValidationError(f"edge decomposition needs k >= 2, got {k}")
    r = k - 1
    if omega.ensemble is not None and ensemble_max_sr(omega.ensemble, tol) <= r:
        return EdgeDecomposition(p=0.0, within=omega, edge=None,
                                 removed=omega.ensemble, rounds=0)

    pool: list[np.ndarray] = []
    weights = np.zeros(0)
    pool_cap = 64
    remainder = omega.matrix.copy()
    omega_support, _, _ = _support_data(omega.matrix, tol.rel_cutoff)
    full_rank = omega_support.shape[1] == omega.dims.total

    def admit(phi: np.ndarray) -> Optional[np.ndarray]:
        """Re-polish a candidate against the input state's own support.

        Late-round remainders are small, so their relative rank cutoff can
        admit directions that are absolutely negligible in omega; a pool
        member leaking into those directions would poison the packing
        remainder once subtracted with full weight.
        """
        if full_rank:
            return phi
        phi, kernel_mass = _project_to_support_sr(phi, omega_support,
                                                  omega.dims, r,
                                                  iters=2000, target=1e-14)
        return phi if kernel_mass <= 1e-13 else None

    def recompute_remainder():
        out = omega.matrix.copy()
        for c, phi in zip(weights, pool):
            out -= c * np.outer(phi, phi.conj())
        return out

    restarts_per_round = 12
    max_stall = 5
    spent = 0
    rounds = 0
    stall = 0
    while spent < budget and stall < max_stall:
        trace_left = float(np.trace(remainder).real)
        if trace_left < 1e-9:
            break
        rounds += 1
        candidates = _subtractable_candidates(
            remainder, omega.dims, r, restarts_per_round,
            derive_seed(seed, f"edge/round/{rounds}"), tol,
        )
        spent += restarts_per_round
        admitted = []
        for _, phi in candidates:
            phi = admit(phi)
            if phi is None:
                continue
            if not any(abs(np.vdot(phi, other)) > 0.999 for other in pool):
                pool.append(phi)
                weights = np.append(weights, 0.0)
            # Admission re-polished the vector, so its weight against the
            # current remainder must be recomputed before subtracting.
            support, vals, _ = _support_data(remainder, tol.rel_cutoff)
            lam_rel = _max_subtraction_raw(
                remainder / trace_left, support, vals / trace_left,
                np.outer(phi, phi.conj()), kernel_tol=tol.rel_cutoff,
            )
            admitted.append((lam_rel, phi))
        admitted.sort(key=lambda item: -item[0])
        if admitted and admitted[0][0] * trace_left > weight_floor:
            lam_rel, phi = admitted[0]
            index = next(i for i, other in enumerate(pool)
                         if abs(np.vdot(phi, other)) > 0.999)
            weights[index] += damping * lam_rel * trace_left
            remainder = recompute_remainder()
            stall = 0
            continue
        if not pool:
            stall += 1
            continue
        before = float(np.trace(remainder).real)
        weights = _packing_weights(omega.matrix, pool, c0=weights)
        if len(pool) > pool_cap:
            order = np.argsort(weights)[::-1]
            keep = np.sort(order[:pool_cap])
            pool = [pool[i] for i in keep]
            weights = weights[keep]
        remainder = recompute_remainder()
        after = float(np.trace(remainder).real)
        if after <= 2e-4:
            break  # at the packing gap floor; refinement cannot resolve less
        stall = 0 if after < 0.9 * before else stall + 1

    if pool:
        weights = _packing_weights(omega.matrix, pool, c0=weights)
        remainder = recompute_remainder()

    removed = [(float(c), PureState(phi, omega.dims))
               for c, phi in zip(weights, pool) if c > 1e-12]

    p = min(1.0, max(0.0, float(np.trace(remainder).real)))
    if not removed:
        return EdgeDecomposition(p=1.0, within=None, edge=omega, removed=(),
                                 rounds=rounds)

    removed_total = sum(w for w, _ in removed)
    within = DensityMatrix.from_ensemble([(w / removed_total, psi)
                                          for w, psi in removed])
    if p <= 1e-9:
        return EdgeDecomposition(p=0.0, within=within, edge=None,
                                 removed=within.ensemble, rounds=rounds)

    # Clip roundoff negativity before renormalizing the small remainder.
    vals, vecs = linalg.eigh(remainder)
    vals = np.clip(vals, 0.0, None)
    edge_matrix = (vecs * vals) @ vecs.conj().T
    edge_matrix /= np.trace(edge_matrix).real
    edge = DensityMatrix(edge_matrix, omega.dims)
    return EdgeDecomposition(p=p, within=within, edge=edge,
                             removed=within.ensemble, rounds=rounds)
