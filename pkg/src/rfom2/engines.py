"""The four approximation engines for f(A) b.

`arnoldi_direct` and `arnoldi_quad` are the plain Krylov baselines; the
three recycled engines consume an additional augmentation subspace U
with C = A U carried across problems. All engines are pure functions of
(decomposition, subspace, function, rule) and accumulate quadrature
sums sequentially in ascending node order for reproducibility.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .arnoldi import ArnoldiDecomposition, as_operator
from .core import (
    RankDeficient,
    SingularMatrix,
    SingularProjector,
    SingularShift,
    SingularSystem,
    lu_solve,
)
from .quadrature import QuadratureRule


@dataclass
class FunctionSpec:
    """Scalar and small-dense evaluators of one matrix function."""

    name: str
    scalar_f: callable
    dense_f: callable
    singularity: complex | None = 0.0 + 0.0j


@dataclass
class RecycleSubspace:
    """Augmentation subspace U with its image C = A U and diagonal scaling D."""

    U: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @property
    def k(self):
        return self.U.shape[1]

    @classmethod
    def empty(cls, n):
        z = np.zeros((n, 0), dtype=np.complex128)
        return cls(U=z, C=z.copy(), D=np.zeros((0, 0), dtype=np.complex128))

    @classmethod
    def from_basis(cls, op, U, d_policy="identity"):
        """Build a subspace from basis columns, applying the operator per column."""
        op = as_operator(op)
        U = np.asarray(U, dtype=np.complex128)
        C = np.column_stack([op.apply(U[:, i]) for i in range(U.shape[1])]) \
            if U.shape[1] else np.zeros((op.dim, 0), dtype=np.complex128)
        return cls(U=U, C=C, D=choose_D(U, d_policy))


def choose_D(U, policy="identity"):
    """Diagonal scaling for the augmentation basis.

    "identity" returns I_k; "unit_columns" returns the diagonal that
    rescales every column of U to unit norm.
    """
    U = np.asarray(U, dtype=np.complex128)
    k = U.shape[1]
    if policy == "identity":
        return np.eye(k, dtype=np.complex128)
    if policy == "unit_columns":
        norms = np.linalg.norm(U, axis=0)
        if k and (np.max(norms) == 0.0 or np.min(norms) < 1e-14 * np.max(norms)):
            raise RankDeficient("U has a (numerically) zero column")
        return np.diag(1.0 / norms).astype(np.complex128)
    raise ValueError(f"unknown D policy: {policy}")


@dataclass
class AugmentedQuantities:
    """Augmented basis matrices and the shifted residual-term builder.

    Satisfies (sigma I - A) Vhat = What (sigma I - G) + R(sigma) for all
    shifts, where Vhat = [U D, V_j], What = [C, V_j] and
    G = blockdiag(D, H_j).
    """

    Vhat: np.ndarray
    What: np.ndarray
    G: np.ndarray
    Gbar: np.ndarray
    UmC: np.ndarray = field(repr=False)
    tail: np.ndarray = field(repr=False)
    j: int = 0
    k: int = 0

    def R(self, sigma):
        n = self.Vhat.shape[0]
        out = np.zeros((n, self.k + self.j), dtype=np.complex128)
        out[:, : self.k] = sigma * self.UmC
        out[:, self.k + self.j - 1] = self.tail
        return out


def augmented_quantities(dec, rec):
    """Assemble the augmented basis for a decomposition and subspace."""
    j, k = dec.j, rec.k
    Us = rec.U @ rec.D
    Vhat = np.concatenate([Us, dec.Vj], axis=1)
    What = np.concatenate([rec.C, dec.Vj], axis=1)
    G = np.zeros((k + j, k + j), dtype=np.complex128)
    G[:k, :k] = rec.D
    G[k:, k:] = dec.H
    Gbar = np.zeros((k + j + 1, k + j), dtype=np.complex128)
    Gbar[:k, :k] = rec.D
    Gbar[k:, k:] = dec.Hbar
    tail = -dec.h_tail * dec.V[:, j]
    return AugmentedQuantities(
        Vhat=Vhat, What=What, G=G, Gbar=Gbar,
        UmC=Us - rec.C, tail=tail, j=j, k=k,
    )


def _node_factor(fun, rule):
    """Per-node scalar multiplying the resolvent term.

    Contour rules integrate f(z) against the resolvent; Stieltjes rules
    already absorb the density of f into their weights.
    """
    if rule.kind == "stieltjes":
        return lambda z: 1.0
    return fun.scalar_f


def arnoldi_direct(dec, fun):
    """||b|| V_j f(H_j) e_1, with f evaluated densely on the Hessenberg matrix."""
    fH = fun.dense_f(dec.H)
    return dec.beta * (dec.Vj @ fH[:, 0])


def arnoldi_quad(dec, fun, rule):
    """Quadrature form of the Arnoldi approximation (the "Arnoldi (q)" baseline)."""
    j = dec.j
    rhs = np.zeros(j, dtype=np.complex128)
    rhs[0] = dec.beta  # V_j^* b exactly, since v_1 = b/||b||
    Ij = np.eye(j, dtype=np.complex128)
    acc = np.zeros(j, dtype=np.complex128)
    factor = _node_factor(fun, rule)
    for z, w in zip(rule.nodes, rule.weights):
        mu = w * factor(z)
        try:
            y = lu_solve(z * Ij - dec.H, rhs)
        except SingularMatrix as exc:
            raise SingularShift(f"quadrature node {z} hits the spectrum of H_j") from exc
        acc += mu * y
    return dec.Vj @ acc


def rfom_v1(dec, rec, fun, rule):
    """Split-correction recycled approximation (Krylov and U parts separate).

    Per node solves the projected j x j system for the Krylov
    coefficients and back-substitutes the subspace coefficients through
    the one-time products U*U, U*C, V_j*U, V_j*C and U*V_{j+1}.
    """
    j, k = dec.j, rec.k
    U, C = rec.U, rec.C
    b = dec.b
    Ij = np.eye(j, dtype=np.complex128)
    e1 = np.zeros(j, dtype=np.complex128)
    e1[0] = 1.0

    UU = U.conj().T @ U
    UC = U.conj().T @ C
    VjU = dec.Vj.conj().T @ U
    VjC = dec.Vj.conj().T @ C
    M = U.conj().T @ dec.V
    Ub = U.conj().T @ b
    Vjb = dec.beta * e1  # V_j^* b exactly, since v_1 = b/||b||

    t1 = np.zeros(j, dtype=np.complex128)
    t2 = np.zeros(k, dtype=np.complex128)
    factor = _node_factor(fun, rule)
    for z, w in zip(rule.nodes, rule.weights):
        mu = w * factor(z)
        if k:
            Mbar = z * M[:, :j] - M @ dec.Hbar
            try:
                F = scipy.linalg.lu_factor(z * UU - UC, check_finite=False)
            except scipy.linalg.LinAlgError as exc:
                raise SingularProjector(f"projector block singular at node {z}") from exc
            if np.min(np.abs(np.diag(F[0]))) < 1e-14 * max(np.max(np.abs(z * UU - UC)), 1e-300):
                raise SingularProjector(f"projector block singular at node {z}")
            K = z * VjU - VjC
            LM = scipy.linalg.lu_solve(F, Mbar, check_finite=False)
            Lub = scipy.linalg.lu_solve(F, Ub, check_finite=False)
            coeff = z * Ij - dec.H - K @ LM
            rhs = Vjb - K @ Lub
        else:
            coeff = z * Ij - dec.H
            rhs = Vjb
        try:
            y = lu_solve(coeff, rhs)
        except SingularMatrix as exc:
            raise SingularShift(f"inner system singular at node {z}") from exc
        t1 += mu * y
        if k:
            t2 += mu * (Lub - LM @ y)
    out = dec.Vj @ t1
    if k:
        out = out + U @ t2
    return out


def _vhat_r(aug, blocks, z):
    """V_hat^* R_z from its precomputed one-time blocks."""
    tl, bl, tail_top = blocks
    k, j = aug.k, aug.j
    out = np.zeros((k + j, k + j), dtype=np.complex128)
    out[:k, :k] = z * tl
    out[k:, :k] = z * bl
    out[:k, k + j - 1] = tail_top
    return out


def _v2_setup(dec, rec):
    aug = augmented_quantities(dec, rec)
    k, j = aug.k, aug.j
    Us = aug.Vhat[:, :k]
    # V_hat^* W_hat, with the orthonormal V_j blocks filled analytically
    VhWh = np.zeros((k + j, k + j), dtype=np.complex128)
    VhWh[:k, :k] = Us.conj().T @ rec.C
    VhWh[:k, k:] = Us.conj().T @ dec.Vj
    VhWh[k:, :k] = dec.Vj.conj().T @ rec.C
    VhWh[k:, k:] = np.eye(j)
    tl = Us.conj().T @ aug.UmC
    bl = dec.Vj.conj().T @ aug.UmC
    tail_top = Us.conj().T @ aug.tail
    Vhb = np.concatenate([Us.conj().T @ dec.b, dec.beta * np.eye(j, 1, dtype=np.complex128)[:, 0]])
    return aug, VhWh, (tl, bl, tail_top), Vhb


def rfom_v2(dec, rec, fun, rule):
    """Compact recycled approximation: one (k+j) solve per quadrature node."""
    aug, VhWh, blocks, Vhb = _v2_setup(dec, rec)
    kj = aug.k + aug.j
    I = np.eye(kj, dtype=np.complex128)
    t = np.zeros(kj, dtype=np.complex128)
    factor = _node_factor(fun, rule)
    for z, w in zip(rule.nodes, rule.weights):
        sys = VhWh @ (z * I - aug.G) + _vhat_r(aug, blocks, z)
        try:
            u = lu_solve(sys, Vhb)
        except SingularMatrix as exc:
            raise SingularSystem(f"augmented system singular at node {z}") from exc
        t += w * factor(z) * u
    return aug.Vhat @ t


def rfom_v3(dec, rec, fun, rule):
    """Closed-form f(G_j) term plus a quadrature correction integral.

    The Sherman-Morrison-Woodbury splitting moves the bulk of the
    approximation into a direct evaluation of f on the augmented
    Hessenberg matrix, so fewer quadrature nodes are needed for the
    same accuracy.
    """
    aug, VhWh, blocks, Vhb = _v2_setup(dec, rec)
    k, j = aug.k, aug.j
    kj = k + j
    I = np.eye(kj, dtype=np.complex128)

    # f(G_j) evaluated blockwise; G_j is block diagonal by construction
    fG = np.zeros((kj, kj), dtype=np.complex128)
    if k:
        fG[:k, :k] = fun.dense_f(aug.G[:k, :k])
    fG[k:, k:] = fun.dense_f(dec.H)

    try:
        y0 = lu_solve(VhWh, Vhb)
    except SingularMatrix as exc:
        raise SingularSystem("V_hat^* W_hat is numerically singular") from exc
    closed = aug.Vhat @ (fG @ y0)

    t = np.zeros(kj, dtype=np.complex128)
    factor = _node_factor(fun, rule)
    for z, w in zip(rule.nodes, rule.weights):
        Gz = VhWh @ (z * I - aug.G)
        B = _vhat_r(aug, blocks, z)
        try:
            Gzinv = lu_solve(Gz, I)
            q = Gzinv @ Vhb
            s = lu_solve(I + B @ Gzinv, B @ q)
        except SingularMatrix as exc:
            raise SingularSystem(f"correction system singular at node {z}") from exc
        t += w * factor(z) * (Gzinv @ s)
    return closed - aug.Vhat @ t
