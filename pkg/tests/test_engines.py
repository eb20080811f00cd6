"""The four f(A)b engines and their reduction/equivalence identities."""

import numpy as np
import pytest

from rfom2 import (
    CircleContour,
    FunctionSpec,
    RecycleSubspace,
    arnoldi,
    arnoldi_direct,
    arnoldi_quad,
    augmented_quantities,
    choose_D,
    guarded_contour,
    rfom_v1,
    rfom_v2,
    rfom_v3,
    stieltjes_invsqrt,
    svd_values,
    trapezoid_contour,
)
from rfom2.core import RankDeficient
from rfom2.problems import function_catalog, gen_graded_hermitian, oracle_funm


def relerr(x, ref):
    return np.linalg.norm(x - ref) / np.linalg.norm(ref)


def spd_problem(n=50, seed=0, lam_min=1.0, lam_max=9.0):
    rng = np.random.default_rng(seed)
    lam = np.linspace(lam_min, lam_max, n)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = (Q * lam) @ Q.T
    b = rng.standard_normal(n)
    return A, b, lam, Q


def eigvec_subspace(A, Q, k):
    U = Q[:, :k].astype(np.complex128)
    return RecycleSubspace(U=U, C=np.asarray(A @ U), D=np.eye(k, dtype=np.complex128))


class TestChooseD:
    def test_identity(self):
        U = np.random.default_rng(0).standard_normal((6, 3))
        assert np.allclose(choose_D(U, "identity"), np.eye(3))

    def test_unit_columns(self):
        U = np.zeros((4, 2))
        U[0, 0] = 4.0
        U[1, 1] = 2.0
        D = choose_D(U, "unit_columns")
        assert np.allclose(np.diag(D), [0.25, 0.5])
        norms = np.linalg.norm(U @ D, axis=0)
        assert np.allclose(norms, 1.0, atol=1e-14)

    def test_zero_column(self):
        U = np.zeros((4, 2))
        U[0, 0] = 1.0
        with pytest.raises(RankDeficient):
            choose_D(U, "unit_columns")


class TestArnoldiDirect:
    def test_polynomial_exactness(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((30, 30))
        b = rng.standard_normal(30)
        ident = FunctionSpec(name="id", scalar_f=lambda z: z, dense_f=lambda M: M,
                             singularity=None)
        dec = arnoldi(A, b, 5)
        x = arnoldi_direct(dec, ident)
        assert np.linalg.norm(x - A @ b) <= 1e-12 * np.linalg.norm(A @ b)

    def test_exp_of_zero_matrix(self):
        b = np.array([1.0, -2.0, 0.5])
        dec = arnoldi(np.zeros((3, 3)), b, 2)
        x = arnoldi_direct(dec, function_catalog("exp"))
        assert np.allclose(x, b, atol=1e-14)

    def test_exhaustion_equals_inverse(self):
        rng = np.random.default_rng(2)
        A = np.diag(np.linspace(1.0, 5.0, 12))
        b = np.concatenate([rng.standard_normal(6), np.zeros(6)])
        dec = arnoldi(A, b, 11)  # invariant subspace: exhaustion at j = 6
        assert dec.breakdown
        x = arnoldi_direct(dec, function_catalog("inverse"))
        exact = np.linalg.solve(A, b)
        assert relerr(x, exact) <= 1e-8


class TestArnoldiQuad:
    def test_agrees_with_direct_exp(self):
        A, b, lam, _ = spd_problem(seed=3)
        dec = arnoldi(A, b, 20)
        rule = trapezoid_contour(CircleContour(5.0 + 0.0j, 5.0), 200)
        fun = function_catalog("exp")
        xq = arnoldi_quad(dec, fun, rule)
        xd = arnoldi_direct(dec, fun)
        assert relerr(xq, xd) <= 1e-10

    def test_doubling_shrinks_gap(self):
        A, b, lam, _ = spd_problem(seed=4)
        dec = arnoldi(A, b, 20)
        fun = function_catalog("exp")
        xd = arnoldi_direct(dec, fun)
        gaps = []
        for n in (8, 16, 32, 64):
            rule = trapezoid_contour(CircleContour(5.0 + 0.0j, 5.0), n)
            gaps.append(relerr(arnoldi_quad(dec, fun, rule), xd))
        for a, b2 in zip(gaps, gaps[1:]):
            assert b2 < a or a <= 1e-14

    def test_cauchy_inverse(self):
        A, b, lam, _ = spd_problem(seed=5)
        dec = arnoldi(A, b, 15)
        rule = trapezoid_contour(CircleContour(5.0 + 0.0j, 4.6), 400)
        x = arnoldi_quad(dec, function_catalog("inverse"), rule)
        e1 = np.zeros(15)
        e1[0] = 1.0
        exact = dec.beta * (dec.Vj @ np.linalg.solve(dec.H, e1))
        assert relerr(x, exact) <= 1e-10


class TestReductions:
    """k = 0: the recycled engines collapse onto the plain baselines."""

    def setup_method(self):
        self.A, self.b, _, _ = spd_problem(seed=6)
        self.dec = arnoldi(self.A, self.b, 18)
        self.rec = RecycleSubspace.empty(50)
        self.fun = function_catalog("inverse")
        self.rule = trapezoid_contour(CircleContour(5.2 + 0.0j, 4.9), 600)

    def test_v1_bit_for_bit(self):
        x1 = rfom_v1(self.dec, self.rec, self.fun, self.rule)
        xq = arnoldi_quad(self.dec, self.fun, self.rule)
        assert np.array_equal(x1, xq)

    def test_v2_matches_quad(self):
        x2 = rfom_v2(self.dec, self.rec, self.fun, self.rule)
        xq = arnoldi_quad(self.dec, self.fun, self.rule)
        assert np.linalg.norm(x2 - xq) <= 1e-12 * np.linalg.norm(xq)

    def test_all_versions_pairwise(self):
        outs = [
            arnoldi_quad(self.dec, self.fun, self.rule),
            rfom_v1(self.dec, self.rec, self.fun, self.rule),
            rfom_v2(self.dec, self.rec, self.fun, self.rule),
            rfom_v3(self.dec, self.rec, self.fun, self.rule),
        ]
        for i in range(4):
            for l in range(i + 1, 4):
                assert relerr(outs[i], outs[l]) <= 1e-12


class TestRecycledEngines:
    """Equivalence identities, on a well-conditioned augmented basis.

    A random U keeps [U, V_j] far from rank deficiency; eigenvector-based
    subspaces make the augmented basis nearly dependent once Arnoldi
    partially converges to the same eigenvectors, which floors any
    agreement at eps * cond and is exercised separately below.
    """

    def setup_method(self):
        self.A = gen_graded_hermitian(80, small_count=8, small_range=(1.5, 1.7),
                                      bulk_range=(20.0, 100.0), seed=7).toarray()
        rng = np.random.default_rng(8)
        self.b = rng.standard_normal(80)
        self.lam, self.Q = np.linalg.eigh(self.A)
        self.dec = arnoldi(self.A, self.b, 14)
        U = rng.standard_normal((80, 8)) + 1j * rng.standard_normal((80, 8))
        self.rec = RecycleSubspace(U=U, C=self.A @ U, D=np.eye(8, dtype=complex))
        self.fun = function_catalog("inverse")
        contour = guarded_contour(self.lam.astype(complex), 0.1, singularity=0.0)
        self.rule = trapezoid_contour(contour, 3000)

    def test_v1_equals_v2(self):
        x1 = rfom_v1(self.dec, self.rec, self.fun, self.rule)
        x2 = rfom_v2(self.dec, self.rec, self.fun, self.rule)
        assert relerr(x1, x2) <= 1e-10

    def test_v3_converges_to_v2(self):
        contour = self.rule.contour
        gaps = []
        for n in (400, 800, 1600, 3200):
            rule = trapezoid_contour(contour, n)
            x2 = rfom_v2(self.dec, self.rec, self.fun, rule)
            x3 = rfom_v3(self.dec, self.rec, self.fun, rule)
            gaps.append(relerr(x3, x2))
        assert gaps[-1] <= 1e-8
        assert gaps[-1] <= gaps[0]

    def test_d_scaling_invariance(self):
        base2 = rfom_v2(self.dec, self.rec, self.fun, self.rule)
        base3 = rfom_v3(self.dec, self.rec, self.fun, self.rule)
        rng = np.random.default_rng(9)
        for D in (2.0 * np.eye(8), np.diag(rng.uniform(0.5, 3.0, 8))):
            rec = RecycleSubspace(U=self.rec.U, C=self.rec.C, D=D.astype(complex))
            assert relerr(rfom_v2(self.dec, rec, self.fun, self.rule), base2) <= 1e-10
            assert relerr(rfom_v3(self.dec, rec, self.fun, self.rule), base3) <= 1e-10

    def test_v1_beats_plain_arnoldi(self):
        # U = exact eigenvectors of the small cluster: the augmented
        # approximation removes the slow cluster modes entirely
        rec = eigvec_subspace(self.A, self.Q, 8)
        exact = oracle_funm(self.A, self.fun, self.b, hermitian=True)
        e_plain = relerr(arnoldi_quad(self.dec, self.fun, self.rule), exact)
        e_rec = relerr(rfom_v1(self.dec, rec, self.fun, self.rule), exact)
        assert e_rec < 0.1 * e_plain

    def test_v3_beats_v1_at_small_nquad(self):
        # inverse square root via 5 Stieltjes nodes: the closed-form
        # f(G) term makes v3 the more accurate engine at equal nodes
        dec = arnoldi(self.A, self.b, 10)
        rec = eigvec_subspace(self.A, self.Q, 8)
        fun = function_catalog("invsqrt")
        rule = stieltjes_invsqrt(5)
        exact = oracle_funm(self.A, fun, self.b, hermitian=True)
        e1 = relerr(rfom_v1(dec, rec, fun, rule), exact)
        e3 = relerr(rfom_v3(dec, rec, fun, rule), exact)
        assert e3 < e1

    def test_field_of_values_guard(self):
        # circle strictly enclosing [lam_min, lam_max]: the projected
        # shifted block stays nonsingular at every node
        rng = np.random.default_rng(10)
        n = 100
        lam = np.linspace(0.5, 20.0, n)
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        A = (Q * lam) @ Q.T
        U = rng.standard_normal((n, 10)) + 1j * rng.standard_normal((n, 10))
        C = A @ U
        center = (lam[0] + lam[-1]) / 2
        rule = trapezoid_contour(CircleContour(center, (lam[-1] - lam[0]) / 2 + 1.0), 64)
        UU = U.conj().T @ U
        UC = U.conj().T @ C
        smin = min(svd_values(z * UU - UC)[-1] for z in rule.nodes)
        assert smin > 0

    def test_augmented_arnoldi_relation(self):
        aug = augmented_quantities(self.dec, self.rec)
        rng = np.random.default_rng(11)
        nA = np.linalg.norm(self.A)
        for sigma in rng.standard_normal(5) * 30 + 1j * rng.standard_normal(5):
            lhs = (sigma * np.eye(80) - self.A) @ aug.Vhat
            rhs = aug.What @ (sigma * np.eye(aug.k + aug.j) - aug.G) + aug.R(sigma)
            res = np.linalg.norm(lhs - rhs, "fro")
            assert res <= 1e-10 * (abs(sigma) + nA) * np.linalg.norm(aug.Vhat)

    def test_subspace_invariants(self):
        assert np.linalg.norm(self.A @ self.rec.U - self.rec.C, "fro") \
            <= 1e-10 * np.linalg.norm(self.rec.C, "fro")
        sv = svd_values(self.rec.U)
        assert sv[-1] > 1e-12 * sv[0]
        assert self.rec.k == 8
