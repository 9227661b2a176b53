"""Experiment harness: parameter sweeps over gallery matrices to CSV.

One CSV row per (matrix, method, seed). Rows are emitted in a deterministic
order and reruns of the same spec are byte-identical except for the wall_ms
column. Failures (non-convergence) are recorded in place, never dropped.

The bound column reports n*u + sqrt(m*n) * u * kappa2D, with the scaled
condition number taken from the extended-precision product for the
preconditioned methods and from the input matrix for the plain baselines;
both are computed with the extended-precision reference so the column stays
meaningful for ill-conditioned inputs.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from .driver import PrecisionConfig, get_config, mp3_svd, plain_jacobi_svd
from .errors import MpJacobiError, RankDeficientError
from .gallery import GalleryMatrix, kahan, lauchli_gram, randsvd
from .jacobi import JacobiOptions
from .metrics import accuracy_bound, forward_errors, kappa2_scaled, reference_svd
from .precond import BIDIAG_METHOD, ORTH_METHOD

__all__ = ["ExperimentSpec", "SpecError", "run_experiment", "CSV_COLUMNS",
           "METHODS"]

CSV_COLUMNS = [
    "kind", "m", "n", "kappa_target", "mode", "seed", "method", "config",
    "max_ferr", "bound", "bound_ok", "sweeps", "rotations",
    "off_before", "off_after", "obliq_after",
    "kappa2d_before", "kappa2d_after", "used_qr", "converged", "wall_ms",
]

METHODS = ("mp3-orth", "mp3-bidiag", "plain-jacobi", "plain-jacobi-qr-first")


class SpecError(MpJacobiError, ValueError):
    pass


@dataclass(frozen=True)
class MatrixCase:
    kind: str
    m: int
    n: int
    kappa: Optional[float] = None
    mode: Optional[int] = None
    theta: Optional[float] = None
    mu: Optional[float] = None


@dataclass
class ExperimentSpec:
    """Validated experiment description.

    JSON shape::

        {
          "config": "sdq",
          "methods": ["mp3-orth", "plain-jacobi"],
          "seeds": [1, 2, 3],
          "matrices": {"kind": "randsvd", "shapes": [[200, 150]],
                       "kappas": [1e3, 1e6], "modes": [1, 3]},
          "max_sweeps": 30,
          "out": "results.csv"
        }

    ``matrices`` may instead be a list of explicit cases, e.g.
    ``[{"kind": "kahan", "n": 50, "theta": 1e-2}]``.
    """

    config: PrecisionConfig
    methods: List[str]
    seeds: List[int]
    cases: List[MatrixCase]
    max_sweeps: int = 30
    tol: Optional[float] = None
    qr_threshold: Optional[float] = None
    out: Optional[str] = None

    @staticmethod
    def from_json(payload: Dict) -> "ExperimentSpec":
        methods = payload.get("methods")
        if not methods:
            raise SpecError("methods must be a non-empty list")
        for meth in methods:
            if meth not in METHODS:
                raise SpecError(f"unknown method {meth!r}; choose from {METHODS}")
        seeds = payload.get("seeds", [1])
        if not seeds:
            raise SpecError("seeds must be non-empty")
        cfg = get_config(payload.get("config", "sdq"))

        matrices = payload.get("matrices")
        cases: List[MatrixCase] = []
        if isinstance(matrices, dict):
            if matrices.get("kind") != "randsvd":
                raise SpecError("grid form is only defined for randsvd")
            shapes = matrices.get("shapes") or []
            kappas = matrices.get("kappas") or []
            modes = matrices.get("modes") or []
            if not (shapes and kappas and modes):
                raise SpecError("randsvd grid needs shapes, kappas and modes")
            for kappa in kappas:
                if kappa < 1.0:
                    raise SpecError("kappa values must be >= 1")
            for m, n in shapes:
                for kappa in kappas:
                    for mode in modes:
                        cases.append(MatrixCase("randsvd", int(m), int(n),
                                                float(kappa), int(mode)))
        elif isinstance(matrices, list) and matrices:
            for entry in matrices:
                kind = entry.get("kind")
                if kind == "randsvd":
                    cases.append(MatrixCase("randsvd", int(entry["m"]),
                                            int(entry["n"]),
                                            float(entry["kappa"]),
                                            int(entry["mode"])))
                elif kind == "kahan":
                    n = int(entry["n"])
                    cases.append(MatrixCase("kahan", n, n,
                                            theta=float(entry["theta"])))
                elif kind == "lauchli-gram":
                    n = int(entry["n"])
                    cases.append(MatrixCase("lauchli-gram", n, n,
                                            mu=float(entry["mu"])))
                else:
                    raise SpecError(f"unknown matrix kind {kind!r}")
        else:
            raise SpecError("matrices must be a grid object or non-empty list")

        return ExperimentSpec(
            config=cfg,
            methods=list(methods),
            seeds=[int(s) for s in seeds],
            cases=cases,
            max_sweeps=int(payload.get("max_sweeps", 30)),
            tol=payload.get("tol"),
            qr_threshold=payload.get("qr_threshold"),
            out=payload.get("out"),
        )

    @staticmethod
    def load(path) -> "ExperimentSpec":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SpecError(f"{path}: invalid JSON: {exc}") from None
        return ExperimentSpec.from_json(payload)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return format(x, ".17g")
    return str(x)


def _build_case(case: MatrixCase, seed: int) -> GalleryMatrix:
    if case.kind == "randsvd":
        return randsvd(case.m, case.n, case.kappa, case.mode, seed)
    if case.kind == "kahan":
        return kahan(case.n, case.theta)
    if case.kind == "lauchli-gram":
        return lauchli_gram(case.n, case.mu)
    raise SpecError(f"unknown matrix kind {case.kind!r}")


def _kappa2d_safe(mat) -> float:
    try:
        return kappa2_scaled(mat)
    except RankDeficientError:
        return math.inf


def _off_gram(a: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    g = a.T @ a
    od = g - np.diag(np.diag(g))
    return float(np.sqrt(np.sum(od**2)))


def _rows_for_case(case: MatrixCase, spec: ExperimentSpec) -> List[Dict]:
    rows: List[Dict] = []
    seeds = spec.seeds if case.kind == "randsvd" else spec.seeds[:1]
    opts = JacobiOptions(tol=spec.tol, max_sweeps=spec.max_sweeps)
    u_w = spec.config.u_working
    for seed in seeds:
        gal = _build_case(case, seed)
        a = gal.a.astype(spec.config.working)
        m, n = gal.a.shape
        kappa_target = case.kappa if case.kind == "randsvd" else (
            (case.n + case.mu**2) / case.mu**2 if case.kind == "lauchli-gram"
            else None)
        if np.dtype(spec.config.working) == np.float64:
            sigma_truth = gal.sigma_true
            k2d_input = _kappa2d_safe(gal.a)
        else:
            # the pipeline consumes the demoted matrix, so ground truth and
            # the bound's condition number must describe that matrix
            a_in = a.astype(np.float64)
            sigma_truth = reference_svd(a_in)
            k2d_input = _kappa2d_safe(a_in)
        qr_kw = {} if spec.qr_threshold is None else {
            "qr_threshold": spec.qr_threshold}
        for method in spec.methods:
            t0 = time.perf_counter()
            row: Dict = {
                "kind": case.kind, "m": m, "n": n,
                "kappa_target": kappa_target,
                "mode": case.mode, "seed": seed if case.kind == "randsvd" else None,
                "method": method, "config": spec.config.name,
            }
            if method in ("mp3-orth", "mp3-bidiag"):
                pmethod = ORTH_METHOD if method == "mp3-orth" else BIDIAG_METHOD
                res, diag = mp3_svd(a, spec.config, method=pmethod, opts=opts,
                                    diagnostics="light", **qr_kw)
                k2d_after = _kappa2d_safe(diag.a_tilde_high)
                bound = accuracy_bound(m, n, u_w, k2d_after)
                rep = forward_errors(res.sigma, sigma_truth,
                                     bound_value=bound)
                row.update(
                    max_ferr=rep.max_forward_error, bound=bound,
                    bound_ok=rep.bound_satisfied, sweeps=res.sweeps,
                    rotations=res.rotations, off_before=diag.off_before,
                    off_after=diag.off_after, obliq_after=diag.obliq_after,
                    kappa2d_before=k2d_input, kappa2d_after=k2d_after,
                    used_qr=diag.used_qr, converged=res.converged,
                )
            else:
                use_qr = method == "plain-jacobi-qr-first"
                res = plain_jacobi_svd(a, opts=opts, use_qr=use_qr, **qr_kw)
                bound = accuracy_bound(m, n, u_w, k2d_input)
                rep = forward_errors(res.sigma, sigma_truth,
                                     bound_value=bound)
                row.update(
                    max_ferr=rep.max_forward_error, bound=bound,
                    bound_ok=rep.bound_satisfied, sweeps=res.sweeps,
                    rotations=res.rotations,
                    off_before=_off_gram(gal.a), off_after=None,
                    obliq_after=None, kappa2d_before=k2d_input,
                    kappa2d_after=None, used_qr=use_qr,
                    converged=res.converged,
                )
            row["wall_ms"] = (time.perf_counter() - t0) * 1e3
            rows.append(row)
    return rows


def run_experiment(spec: ExperimentSpec, out_path=None) -> List[Dict]:
    """Run every (matrix, method, seed) cell; optionally write the CSV."""
    workers = int(os.environ.get("MPJACOBI_THREADS", "1") or "1")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda c: _rows_for_case(c, spec),
                                   spec.cases))
    else:
        chunks = [_rows_for_case(c, spec) for c in spec.cases]
    rows = [row for chunk in chunks for row in chunk]

    target = out_path or spec.out
    if target:
        with open(target, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow([_fmt(row.get(col)) for col in CSV_COLUMNS])
    return rows
