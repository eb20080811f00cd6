"""Batch experiment driver.

Reads a flat key = value config, runs a problem sequence through the
selected engines, tracks errors and subspace angles, and writes a CSV
report. Engine failures become failure rows instead of aborting the
sequence, so events like an eigenvalue drifting onto a function's
singularity remain observable in the output.
"""

import argparse
import csv
import os
import sys
import time
from dataclasses import dataclass, field, fields

import numpy as np
import scipy.sparse

from .arnoldi import arnoldi, as_operator
from .core import RFOMError
from .engines import RecycleSubspace, arnoldi_direct, arnoldi_quad, choose_D, \
    rfom_v1, rfom_v2, rfom_v3
from .problems import (
    ProblemSequence,
    function_catalog,
    gen_convection_diffusion_2d,
    gen_graded_hermitian,
    gen_laplacian_2d,
    gen_perturbation_sequence,
    load_matrix_market,
    oracle_funm,
)
from .quadrature import CircleContour, guarded_contour, stieltjes_invsqrt, \
    trapezoid_contour
from .recycling import harmonic_ritz_update, subspace_angle

DATA_DIR_ENV = "RFOM2_DATA_DIR"
CSV_COLUMNS = ["problem_index", "engine", "j", "k", "n_quad", "rel_error",
               "imag_residue", "subspace_angle", "wall_ms", "status"]
ENGINES = {
    "arnoldi": lambda dec, rec, fun, rule: arnoldi_direct(dec, fun),
    "arnoldi_q": lambda dec, rec, fun, rule: arnoldi_quad(dec, fun, rule),
    "v1": rfom_v1,
    "v2": rfom_v2,
    "v3": rfom_v3,
}


@dataclass
class ExperimentConfig:
    problem: str = "laplacian2d"     # laplacian2d | convdiff2d | graded_hermitian | matrix_market
    m: int = 20
    convection: float = 0.0
    n: int = 400                     # graded_hermitian size
    small_count: int = 20
    small_min: float = 1.5
    small_max: float = 5.0
    bulk_min: float = 20.0
    bulk_max: float = 100.0
    matrix_file: str = ""
    function: str = "inverse"
    j: int = 30
    k: int = 0
    n_quad: int = 200
    quad_kind: str = "contour"       # contour | stieltjes
    contour_center: str = "auto"
    contour_radius: str = "auto"
    contour_margin: float = 0.1
    engines: str = "arnoldi,arnoldi_q"
    n_problems: int = 1
    eps: float = 0.0
    seed: int = 0
    rhs_policy: str = "random_each"
    d_policy: str = "identity"
    hermitian: bool = False
    track_angle: bool = False
    oracle: bool = True
    oracle_max_n: int = 3200
    output: str = "report.csv"

    def engine_list(self):
        names = [e.strip() for e in self.engines.split(",") if e.strip()]
        if not names:
            raise ValueError("engines must be nonempty")
        for e in names:
            if e not in ENGINES:
                raise ValueError(f"unknown engine {e!r}")
        return names


def parse_config(path, overrides=()):
    """Flat 'key = value' file; '#' and ';' start comments; later keys win."""
    cfg = ExperimentConfig()
    valid = {f.name: f.type for f in fields(ExperimentConfig)}
    pairs = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].split(";", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (p.strip() for p in line.split("=", 1))
            pairs.append((key, value))
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} must be key=value")
        key, value = (p.strip() for p in item.split("=", 1))
        pairs.append((key, value))
    for key, value in pairs:
        if key not in valid:
            raise ValueError(f"unknown config key {key!r}")
        current = getattr(cfg, key)
        if isinstance(current, bool):
            setattr(cfg, key, value.lower() in ("1", "true", "yes", "on"))
        elif isinstance(current, int):
            setattr(cfg, key, int(value))
        elif isinstance(current, float):
            setattr(cfg, key, float(value))
        else:
            setattr(cfg, key, value)
    return cfg


@dataclass
class RunReport:
    rows: list = field(default_factory=list)
    path: str = ""

    @property
    def has_failures(self):
        return any(r["status"] != "ok" for r in self.rows)

    def add(self, **kw):
        row = {c: kw.get(c, "") for c in CSV_COLUMNS}
        self.rows.append(row)

    def write_csv(self, path=None):
        path = path or self.path
        if not path:
            return
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({c: _fmt(row[c]) for c in CSV_COLUMNS})

    def select(self, engine=None, problem_index=None):
        out = self.rows
        if engine is not None:
            out = [r for r in out if r["engine"] == engine]
        if problem_index is not None:
            out = [r for r in out if r["problem_index"] == problem_index]
        return out


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _base_matrix(cfg):
    if cfg.problem == "laplacian2d":
        return gen_laplacian_2d(cfg.m), True
    if cfg.problem == "convdiff2d":
        A = gen_convection_diffusion_2d(cfg.m, cfg.convection)
        return A, cfg.convection == 0.0
    if cfg.problem == "graded_hermitian":
        A = gen_graded_hermitian(cfg.n, cfg.small_count,
                                 (cfg.small_min, cfg.small_max),
                                 (cfg.bulk_min, cfg.bulk_max), seed=cfg.seed)
        return A, True
    if cfg.problem == "matrix_market":
        path = cfg.matrix_file
        if not os.path.isabs(path):
            path = os.path.join(os.environ.get(DATA_DIR_ENV, "."), path)
        A = load_matrix_market(path)
        herm = (A != A.conj().T).nnz == 0
        return A, herm
    raise ValueError(f"unknown problem kind {cfg.problem!r}")


def _make_rule(cfg, dec, rec, fun):
    if cfg.quad_kind == "stieltjes":
        if cfg.function != "invsqrt":
            raise ValueError("stieltjes quadrature is only available for invsqrt")
        return stieltjes_invsqrt(cfg.n_quad)
    if cfg.quad_kind != "contour":
        raise ValueError(f"unknown quadrature kind {cfg.quad_kind!r}")
    if cfg.contour_center != "auto" and cfg.contour_radius != "auto":
        contour = CircleContour(complex(cfg.contour_center),
                                float(cfg.contour_radius))
    else:
        # Ritz values of H_j only: the per-node augmented system equals the
        # projected resolvent, so its poles track the spectrum of A, not D
        estimates = np.linalg.eigvals(dec.H)
        contour = guarded_contour(estimates, cfg.contour_margin,
                                  singularity=fun.singularity)
    return trapezoid_contour(contour, cfg.n_quad)


class _OracleCache:
    """Per-operator eigendecomposition cache for one sequence run."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.key = None
        self.eig = None

    def eig_for(self, A):
        if id(A) == self.key:
            return self.eig
        dense = A.toarray() if scipy.sparse.issparse(A) else np.asarray(A)
        w, Q = np.linalg.eigh(dense)
        self.key = id(A)
        self.eig = (w, Q)
        return self.eig


def run_experiment(cfg):
    """Run a sequence of f(A^(i)) b^(i) problems through selected engines."""
    engine_names = cfg.engine_list()
    fun = function_catalog(cfg.function)
    base, base_hermitian = _base_matrix(cfg)
    hermitian = cfg.hermitian or base_hermitian
    n = base.shape[0]
    seq = ProblemSequence(base=base, length=cfg.n_problems, eps=cfg.eps,
                          rhs_policy=cfg.rhs_policy, seed=cfg.seed,
                          hermitian=hermitian)
    report = RunReport(path=cfg.output)
    rec = RecycleSubspace.empty(n)
    oracle_ok_size = cfg.oracle and n <= cfg.oracle_max_n
    cache = _OracleCache(cfg)

    for i, (A, b) in enumerate(gen_perturbation_sequence(seq), start=1):
        op = as_operator(A)
        dec = arnoldi(op, b, cfg.j, reorth=True)
        rule = _make_rule(cfg, dec, rec, fun)
        used_k = rec.k

        reference = None
        eig = None
        if oracle_ok_size and hermitian:
            eig = cache.eig_for(A)
        if oracle_ok_size and (hermitian or n <= 1500):
            try:
                if hermitian:
                    w, Q = eig
                    vals = np.array([fun.scalar_f(lam) for lam in w])
                    reference = Q @ (vals * (Q.conj().T @ b.astype(np.complex128)))
                else:
                    reference = oracle_funm(A, fun, b, hermitian=False)
            except RFOMError as exc:
                diag = float(eig[0][0]) if eig is not None else ""
                report.add(problem_index=i, engine="oracle", j=cfg.j, k=used_k,
                           n_quad=cfg.n_quad, imag_residue=diag,
                           status=f"error:{type(exc).__name__}")
                reference = None

        outputs = {}
        for name in engine_names:
            start = time.perf_counter()
            try:
                x = ENGINES[name](dec, rec, fun, rule)
            except RFOMError as exc:
                wall = 1000.0 * (time.perf_counter() - start)
                report.add(problem_index=i, engine=name, j=cfg.j, k=used_k,
                           n_quad=rule.n_quad, wall_ms=wall,
                           status=f"error:{type(exc).__name__}")
                continue
            wall = 1000.0 * (time.perf_counter() - start)
            outputs[name] = (x, wall)

        if reference is None and outputs:
            # oracle unavailable: report gaps against the first engine
            reference = outputs[engine_names[0] if engine_names[0] in outputs
                                else next(iter(outputs))][0]
        refnorm = float(np.linalg.norm(reference)) if reference is not None else 0.0

        angle = ""
        if cfg.k > 0:
            rec = harmonic_ritz_update(dec, rec, op, cfg.k)
            if cfg.track_angle and hermitian and eig is not None and rec.k:
                Z = eig[1][:, : rec.k]
                angle = subspace_angle(rec.U, Z)

        for name in engine_names:
            if name not in outputs:
                continue
            x, wall = outputs[name]
            rel = float(np.linalg.norm(x - reference) / refnorm) \
                if reference is not None and refnorm > 0 else ""
            xnorm = float(np.linalg.norm(x))
            imag = float(np.linalg.norm(x.imag) / xnorm) if xnorm > 0 else 0.0
            report.add(problem_index=i, engine=name, j=cfg.j, k=used_k,
                       n_quad=rule.n_quad, rel_error=rel, imag_residue=imag,
                       subspace_angle=angle, wall_ms=wall, status="ok")

    report.write_csv()
    return report


def sweep_quadrature(cfg, n_list):
    """Fixed first problem, one row per (n_quad, engine).

    With k > 0 the augmentation subspace is the k smallest oracle
    eigenvectors of the matrix (the single-problem augmentation setup);
    the sweep exposes where each engine's error stagnates.
    """
    engine_names = cfg.engine_list()
    fun = function_catalog(cfg.function)
    base, base_hermitian = _base_matrix(cfg)
    hermitian = cfg.hermitian or base_hermitian
    n = base.shape[0]
    seq = ProblemSequence(base=base, length=1, eps=0.0,
                          rhs_policy=cfg.rhs_policy, seed=cfg.seed,
                          hermitian=hermitian)
    A, b = next(gen_perturbation_sequence(seq))
    op = as_operator(A)
    dec = arnoldi(op, b, cfg.j, reorth=True)

    reference = None
    rec = RecycleSubspace.empty(n)
    if cfg.oracle and n <= cfg.oracle_max_n and hermitian:
        dense = A.toarray() if scipy.sparse.issparse(A) else np.asarray(A)
        w, Q = np.linalg.eigh(dense)
        vals = np.array([fun.scalar_f(lam) for lam in w])
        reference = Q @ (vals * (Q.conj().T @ b.astype(np.complex128)))
        if cfg.k > 0:
            U = Q[:, : cfg.k].astype(np.complex128)
            rec = RecycleSubspace(U=U, C=np.asarray(A @ U),
                                  D=choose_D(U, cfg.d_policy))
    elif cfg.oracle and n <= min(cfg.oracle_max_n, 1500):
        reference = oracle_funm(A, fun, b, hermitian=False)
    refnorm = float(np.linalg.norm(reference)) if reference is not None else 0.0

    report = RunReport(path=cfg.output)
    for nq in n_list:
        sub = ExperimentConfig(**{f.name: getattr(cfg, f.name)
                                  for f in fields(ExperimentConfig)})
        sub.n_quad = int(nq)
        rule = _make_rule(sub, dec, rec, fun)
        outputs = {}
        for name in engine_names:
            start = time.perf_counter()
            try:
                x = ENGINES[name](dec, rec, fun, rule)
            except RFOMError as exc:
                wall = 1000.0 * (time.perf_counter() - start)
                report.add(problem_index=1, engine=name, j=cfg.j, k=rec.k,
                           n_quad=int(nq), wall_ms=wall,
                           status=f"error:{type(exc).__name__}")
                continue
            wall = 1000.0 * (time.perf_counter() - start)
            outputs[name] = (x, wall)
        ref = reference
        if ref is None and outputs:
            ref = outputs[next(iter(outputs))][0]
            refnorm = float(np.linalg.norm(ref))
        for name, (x, wall) in outputs.items():
            rel = float(np.linalg.norm(x - ref) / refnorm) if refnorm > 0 else ""
            xnorm = float(np.linalg.norm(x))
            imag = float(np.linalg.norm(x.imag) / xnorm) if xnorm > 0 else 0.0
            report.add(problem_index=1, engine=name, j=cfg.j, k=rec.k,
                       n_quad=int(nq), rel_error=rel, imag_residue=imag,
                       wall_ms=wall, status="ok")
    report.write_csv()
    return report


def main(argv=None):
    parser = argparse.ArgumentParser(prog="rfom2",
                                     description="recycled Krylov f(A)b experiment driver")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a problem sequence from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
    p_sweep = sub.add_parser("sweep", help="sweep n_quad on a fixed problem")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--nquad", required=True,
                         help="comma-separated list of node counts")
    p_sweep.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = parser.parse_args(argv)

    cfg = parse_config(args.config, overrides=args.set)
    if args.command == "run":
        report = run_experiment(cfg)
    else:
        n_list = [int(s) for s in args.nquad.split(",") if s.strip()]
        report = sweep_quadrature(cfg, n_list)
    failures = sum(1 for r in report.rows if r["status"] != "ok")
    print(f"wrote {cfg.output}: {len(report.rows)} rows, {failures} failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
