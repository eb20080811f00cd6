"""Harmonic Ritz update of the recycle subspace, and subspace angles."""

import numpy as np
import scipy.linalg

from .arnoldi import as_operator
from .core import RankDeficient, generalized_eig, qr_orthonormalize, svd_values
from .engines import RecycleSubspace, augmented_quantities


def harmonic_ritz_pencil(dec, rec):
    """Left and right matrices of the harmonic Ritz eigenproblem.

    With Wbar = [C, V_{j+1}] and Gbar = blockdiag(D, Hbar), the pairs
    (theta, g) solve Gbar^* Wbar^* Wbar Gbar g = theta Gbar^* Wbar^* Vhat g.
    The non-orthonormal Wbar columns make this differ from the classical
    recycled-GMRES procedure by the extra Wbar^* Wbar factor.
    """
    aug = augmented_quantities(dec, rec)
    k = rec.k
    Us = aug.Vhat[:, :k]
    Wbar = np.concatenate([rec.C, dec.V], axis=1)
    WG = Wbar @ aug.Gbar
    lhs = WG.conj().T @ WG
    rhs = WG.conj().T @ np.concatenate([Us, dec.Vj], axis=1)
    return lhs, rhs


def harmonic_ritz_update(dec, rec, op, k):
    """New recycle subspace from the k smallest-magnitude harmonic Ritz pairs.

    Selecting the smallest |theta| targets functions whose singularity
    sits at the origin. The returned U has unit columns; C = A U is
    recomputed with k fresh operator applications, and no QR of C is
    needed. Numerically dependent selected vectors are dropped (the
    actual k may shrink).
    """
    op = as_operator(op)
    if k == 0:
        return RecycleSubspace.empty(op.dim)
    lhs, rhs = harmonic_ritz_pencil(dec, rec)
    sv = svd_values(rhs)
    if sv[0] > 0.0 and sv[-1] >= 1e-12 * sv[0]:
        values, vectors = generalized_eig(lhs, rhs)
    else:
        # [U, V_j] can become nearly dependent once the Krylov space
        # re-converges to the recycled eigenvector approximations; the
        # pencil's right-hand matrix then fails the nonsingularity guard.
        # QZ still resolves the well-determined small pairs, the
        # degenerate ones come back infinite or NaN and are filtered.
        values, vectors = scipy.linalg.eig(lhs, rhs, check_finite=False)
    order = np.argsort(np.abs(values))
    finite = [i for i in order if np.isfinite(values[i])]
    sel = finite[: min(k, len(finite))]
    G = vectors[:, sel]

    aug = augmented_quantities(dec, rec)
    U = aug.Vhat @ G
    norms = np.linalg.norm(U, axis=0)
    if np.max(norms) == 0.0:
        raise RankDeficient("harmonic Ritz vectors are numerically zero")
    keep = norms > 1e-14 * np.max(norms)
    U = U[:, keep] / norms[keep]
    sv = svd_values(U)
    if sv[-1] < 1e-12 * sv[0]:
        # drop dependent columns via a rank-revealing QR of the selection
        Q, R = np.linalg.qr(U)
        diag = np.abs(np.diag(R))
        keep = diag > 1e-12 * np.max(diag)
        U = U[:, keep]
        U = U / np.linalg.norm(U, axis=0)
    kept = U.shape[1]
    C = np.column_stack([op.apply(U[:, i]) for i in range(kept)])
    return RecycleSubspace(U=U, C=C, D=np.eye(kept, dtype=np.complex128))


def subspace_angle(U, Z):
    """Largest principal angle (radians) between the column spans of U and Z."""
    U = np.asarray(U, dtype=np.complex128)
    Z = np.asarray(Z, dtype=np.complex128)
    if U.shape[1] == 0 or Z.shape[1] == 0:
        raise ValueError("subspace_angle needs nonempty subspaces")
    Qu, _ = qr_orthonormalize(U)
    Qz, _ = qr_orthonormalize(Z)
    M = Qu.conj().T @ Qz
    smin = float(np.clip(np.min(svd_values(M)), 0.0, 1.0))
    if smin < np.sqrt(0.5):
        return float(np.arccos(smin))
    # small angles: the cosine saturates at 1, so switch to the sine
    # of the largest principal angle, which stays well conditioned
    sines = svd_values(Qz - Qu @ M)
    smax = float(np.clip(np.max(sines) if sines.size else 0.0, 0.0, 1.0))
    return float(np.arcsin(smax))
