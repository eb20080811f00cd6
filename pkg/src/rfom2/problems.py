"""Test problem generators, Matrix Market ingestion, the dense oracle
and the function catalog."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .core import (
    FunctionUndefined,
    IllConditionedEigenbasis,
    ParseError,
    SingularMatrix,
    UnknownFunction,
    UnsupportedFormat,
    eig_dense,
    lu_solve,
)
from .engines import FunctionSpec

ORACLE_GENERAL_MAX_N = 1500


# ---------------------------------------------------------------------------
# Matrix Market exchange format (coordinate; real/complex;
# general/symmetric/hermitian)

def load_matrix_market(path):
    """Read a coordinate-format Matrix Market file into CSR form.

    Symmetric/hermitian files store one triangle; the loader mirrors the
    (conjugated) entries. Array and pattern files are rejected.
    """
    with open(path, "r") as fh:
        lines = fh.readlines()
    if not lines:
        raise ParseError(f"{path}:1: empty file")
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket" or header[1].lower() != "matrix":
        raise ParseError(f"{path}:1: malformed MatrixMarket header")
    fmt, field, symmetry = (h.lower() for h in header[2:5])
    if fmt != "coordinate":
        raise UnsupportedFormat(f"unsupported format {fmt!r} (only coordinate)")
    if field not in ("real", "complex"):
        raise UnsupportedFormat(f"unsupported field {field!r} (only real/complex)")
    if symmetry not in ("general", "symmetric", "hermitian"):
        raise UnsupportedFormat(f"unsupported symmetry {symmetry!r}")

    lineno = 1
    rows = cols = nnz = None
    i_idx, j_idx, vals = [], [], []
    want = 3 if field == "real" else 4
    for raw in lines[1:]:
        lineno += 1
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        parts = line.split()
        if rows is None:
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected 'rows cols nnz'")
            try:
                rows, cols, nnz = (int(p) for p in parts)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad size line") from exc
            continue
        if len(parts) != want:
            raise ParseError(f"{path}:{lineno}: expected {want} fields per entry")
        try:
            i = int(parts[0])
            j = int(parts[1])
            if field == "real":
                v = complex(float(parts[2]))
            else:
                v = complex(float(parts[2]), float(parts[3]))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: bad entry") from exc
        if not (1 <= i <= rows and 1 <= j <= cols):
            raise ParseError(f"{path}:{lineno}: index out of range")
        i_idx.append(i - 1)
        j_idx.append(j - 1)
        vals.append(v)
    if rows is None:
        raise ParseError(f"{path}:{lineno}: missing size line")
    if len(vals) != nnz:
        raise ParseError(f"{path}:{lineno}: expected {nnz} entries, got {len(vals)}")

    i_idx = np.asarray(i_idx, dtype=np.int64)
    j_idx = np.asarray(j_idx, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.complex128)
    if symmetry in ("symmetric", "hermitian"):
        off = i_idx != j_idx
        mirror = vals[off].conj() if symmetry == "hermitian" else vals[off]
        i_idx, j_idx = (np.concatenate([i_idx, j_idx[off]]),
                        np.concatenate([j_idx, i_idx[off]]))
        vals = np.concatenate([vals, mirror])
    A = scipy.sparse.coo_matrix((vals, (i_idx, j_idx)), shape=(rows, cols))
    return A.tocsr()


def save_matrix_market(path, A):
    """Write a sparse matrix as complex coordinate general, full precision."""
    A = scipy.sparse.coo_matrix(A, dtype=np.complex128)
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate complex general\n")
        fh.write(f"{A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for i, j, v in zip(A.row, A.col, A.data):
            fh.write(f"{i + 1} {j + 1} {v.real:.17g} {v.imag:.17g}\n")


# ---------------------------------------------------------------------------
# Finite difference generators

def gen_laplacian_2d(m):
    """Five-point discrete Laplacian on an m x m interior grid (Dirichlet)."""
    T = scipy.sparse.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(m, m))
    I = scipy.sparse.identity(m)
    return (scipy.sparse.kron(I, T) + scipy.sparse.kron(T, I)).tocsr()


def gen_convection_diffusion_2d(m, convection=0.0):
    """Laplacian plus a central-difference convection term in one coordinate."""
    A = gen_laplacian_2d(m)
    if convection != 0.0:
        Cd = scipy.sparse.diags([-0.5, 0.5], [-1, 1], shape=(m, m))
        I = scipy.sparse.identity(m)
        A = (A + convection * scipy.sparse.kron(I, Cd)).tocsr()
    return A


def gen_graded_hermitian(n, small_count=20, small_range=(1.5, 5.0),
                         bulk_range=(20.0, 100.0), seed=0, sparse=True):
    """Hermitian matrix with a graded spectrum: a few small outlying
    eigenvalues below a well-separated bulk.

    Built as Q diag(lam) Q^T with a random orthogonal Q; the small
    cluster is logarithmically spaced. Returned in CSR form (dense
    content) so it runs through the same sparse-operator plumbing as
    the finite difference matrices.
    """
    rng = np.random.default_rng(seed)
    small = np.geomspace(small_range[0], small_range[1], small_count)
    bulk = np.sort(rng.uniform(bulk_range[0], bulk_range[1], n - small_count))
    lam = np.concatenate([small, bulk])
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = (Q * lam) @ Q.T
    A = 0.5 * (A + A.T)
    return scipy.sparse.csr_matrix(A) if sparse else A


# ---------------------------------------------------------------------------
# Problem sequences

@dataclass
class ProblemSequence:
    base: object            # sparse matrix A^(1)
    length: int
    eps: float = 0.0
    rhs_policy: str = "random_each"
    seed: int = 0
    hermitian: bool = False


def gen_perturbation_sequence(seq):
    """Yield (operator, rhs) pairs with on-pattern random perturbations.

    Each step adds eps * E where E lives on the sparsity pattern of the
    base matrix and is Frobenius-normalized to ||A^(1)||_F; with the
    hermitian flag E is symmetrized first. All randomness comes from one
    seeded generator so identical parameters reproduce the sequence.
    """
    if seq.rhs_policy not in ("random_each", "fixed"):
        raise ValueError(f"unknown rhs policy {seq.rhs_policy!r}")
    rng = np.random.default_rng(seq.seed)
    A = scipy.sparse.csr_matrix(seq.base, dtype=np.complex128)
    n = A.shape[0]
    base_fro = scipy.sparse.linalg.norm(A, "fro")
    pattern = A.copy()
    pattern.data = np.ones_like(pattern.data)
    is_real = bool(np.all(A.data.imag == 0.0))

    def random_rhs():
        if is_real:
            return rng.standard_normal(n).astype(np.complex128)
        return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)

    fixed_b = random_rhs()
    current = A
    for i in range(seq.length):
        if i > 0 and seq.eps != 0.0:
            E = pattern.copy()
            if is_real:
                E.data = rng.standard_normal(E.data.size)
            else:
                E.data = (rng.standard_normal(E.data.size)
                          + 1j * rng.standard_normal(E.data.size))
            E = E.tocsr()
            if seq.hermitian:
                E = ((E + E.conj().T) * 0.5).tocsr()
            fro = scipy.sparse.linalg.norm(E, "fro")
            if fro > 0:
                E = E * (base_fro / fro)
            current = (current + seq.eps * E).tocsr()
        b = random_rhs() if seq.rhs_policy == "random_each" else fixed_b
        yield current, b


# ---------------------------------------------------------------------------
# Dense oracle and function catalog

def oracle_funm(A, fun, b, hermitian=False):
    """Reference f(A) b through a dense eigendecomposition.

    The Hermitian path diagonalizes unitarily; the general path guards
    against an ill-conditioned eigenbasis and a size cap. Eigenvalues at
    a singularity of f raise FunctionUndefined.
    """
    A = np.asarray(A.toarray() if scipy.sparse.issparse(A) else A, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128).reshape(-1)
    if hermitian:
        w, Q = eig_dense(A, hermitian=True)
        fw = _scalar_on_spectrum(fun, w)
        return Q @ (fw * (Q.conj().T @ b))
    if A.shape[0] > ORACLE_GENERAL_MAX_N:
        raise ValueError(f"general oracle capped at n = {ORACLE_GENERAL_MAX_N}")
    w, P = eig_dense(A, hermitian=False)
    cond = np.linalg.cond(P)
    if not np.isfinite(cond) or cond >= 1e8:
        raise IllConditionedEigenbasis(f"eigenvector condition {cond:.2e}")
    fw = _scalar_on_spectrum(fun, w)
    return P @ (fw * np.linalg.solve(P, b))


def _scalar_on_spectrum(fun, w):
    vals = np.empty(w.shape, dtype=np.complex128)
    for idx, lam in enumerate(w):
        vals[idx] = fun.scalar_f(lam)
    return vals


def _on_branch_cut(z, include_origin=True):
    z = complex(z)
    near_axis = abs(z.imag) < 1e-14 * max(abs(z), 1.0)
    if z.real < 0 and near_axis:
        return True
    return include_origin and abs(z) < 1e-300


def _dense_via_eig(scalar_f, M):
    """f(M) for a small dense M via (symmetry-aware) eigendecomposition."""
    M = np.asarray(M, dtype=np.complex128)
    scale = np.linalg.norm(M) if M.size else 0.0
    if M.shape[0] == 0:
        return M.copy()
    if scale > 0 and np.linalg.norm(M - M.conj().T) <= 1e-12 * scale:
        w, Q = eig_dense(M, hermitian=True)
        fw = np.array([scalar_f(lam) for lam in w], dtype=np.complex128)
        return (Q * fw) @ Q.conj().T
    w, P = eig_dense(M, hermitian=False)
    cond = np.linalg.cond(P)
    if not np.isfinite(cond) or cond >= 1e10:
        raise IllConditionedEigenbasis(f"eigenvector condition {cond:.2e}")
    fw = np.array([scalar_f(lam) for lam in w], dtype=np.complex128)
    return (P * fw) @ np.linalg.inv(P)


def _make_scalar(name):
    if name == "inverse":
        def f(z):
            if abs(z) < 1e-300:
                raise FunctionUndefined("1/z undefined at 0")
            return 1.0 / z
    elif name == "invsqrt":
        def f(z):
            if _on_branch_cut(z):
                raise FunctionUndefined(f"z^(-1/2) undefined at {z}")
            return complex(z) ** (-0.5)
    elif name == "sqrt":
        def f(z):
            if _on_branch_cut(z, include_origin=False):
                raise FunctionUndefined(f"sqrt undefined at {z}")
            return complex(z) ** 0.5
    elif name == "log":
        def f(z):
            if _on_branch_cut(z):
                raise FunctionUndefined(f"log undefined at {z}")
            return np.log(complex(z))
    elif name == "exp":
        def f(z):
            return np.exp(complex(z))
    else:  # pragma: no cover
        raise UnknownFunction(name)
    return f


def function_catalog(name):
    """FunctionSpec for one of: inverse, invsqrt, sqrt, log, exp,
    sign_via_invsqrt."""
    if name == "sign_via_invsqrt":
        invsqrt = _make_scalar("invsqrt")

        def scalar_sign(z):
            return complex(z) * invsqrt(complex(z) ** 2)

        def dense_sign(M):
            M = np.asarray(M, dtype=np.complex128)
            return M @ _dense_via_eig(invsqrt, M @ M)

        return FunctionSpec(name=name, scalar_f=scalar_sign, dense_f=dense_sign,
                            singularity=0.0 + 0.0j)
    if name not in ("inverse", "invsqrt", "sqrt", "log", "exp"):
        raise UnknownFunction(name)
    scalar = _make_scalar(name)
    if name == "inverse":
        def dense(M):
            M = np.asarray(M, dtype=np.complex128)
            try:
                return lu_solve(M, np.eye(M.shape[0], dtype=np.complex128))
            except SingularMatrix as exc:
                raise FunctionUndefined("matrix has an eigenvalue at 0") from exc
    else:
        def dense(M, _scalar=scalar):
            return _dense_via_eig(_scalar, M)
    singularity = None if name == "exp" else 0.0 + 0.0j
    return FunctionSpec(name=name, scalar_f=scalar, dense_f=dense,
                        singularity=singularity)
