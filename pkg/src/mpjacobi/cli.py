"""Command-line interface.

Subcommands: ``svd`` (factor one matrix), ``experiment`` (sweep to CSV),
``gallery`` (export test matrices), ``check`` (quick property battery).
stdout carries data, stderr carries diagnostics. Exit codes: 0 success,
1 usage error, 2 data error, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .driver import QR_ROW_FACTOR, get_config, mp3_svd, plain_jacobi_svd
from .errors import MpJacobiError
from .experiment import ExperimentSpec, SpecError, run_experiment
from .gallery import kahan, lauchli_gram, randsvd
from .jacobi import JacobiOptions
from .matrixio import (
    MatrixFormatError,
    read_matrix,
    sigma_sidecar_path,
    write_matrix,
    write_sigma,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NOCONV = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class GallerySpecError(ValueError):
    pass


def _parse_gallery_spec(text: str):
    """Parse 'kind:key=val,key=val' into a GalleryMatrix."""
    kind, _, rest = text.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise GallerySpecError(f"bad parameter {item!r}")
            params[key.strip()] = val.strip()

    def need(key, cast):
        try:
            return cast(params[key])
        except KeyError:
            raise GallerySpecError(f"{kind}: missing parameter {key!r}") from None
        except ValueError as exc:
            raise GallerySpecError(f"{kind}: {exc}") from None

    kind = kind.strip().lower()
    if kind == "randsvd":
        seed = int(params.get("seed", 1))
        return randsvd(need("m", int), need("n", int), need("kappa", float),
                       need("mode", int), seed)
    if kind == "kahan":
        return kahan(need("n", int), need("theta", float))
    if kind == "lauchli-gram":
        return lauchli_gram(need("n", int), need("mu", float))
    raise GallerySpecError(f"unknown gallery kind {kind!r}")


def _load_input(args):
    if args.identity:
        return np.eye(args.identity), None
    if args.gallery:
        gal = _parse_gallery_spec(args.gallery)
        return gal.a, gal
    return read_matrix(args.input), None


def _cmd_svd(args) -> int:
    cfg = get_config(args.config)
    a, _ = _load_input(args)
    opts = JacobiOptions(tol=args.tol, max_sweeps=args.max_sweeps)
    threshold = args.qr_threshold_override
    threshold = QR_ROW_FACTOR if threshold is None else threshold

    if args.method == "plain":
        res = plain_jacobi_svd(a.astype(cfg.working), opts=opts,
                               qr_threshold=threshold)
        diag = None
    else:
        res, diag = mp3_svd(a, cfg, method=args.method, opts=opts,
                            qr_threshold=threshold)

    for s in res.sigma:
        print(format(float(s), ".17g"))

    err = sys.stderr
    print(f"# converged: {res.converged} ({res.stop_reason})", file=err)
    print(f"# sweeps: {res.sweeps}  rotations: {res.rotations}", file=err)
    if diag is not None:
        print(f"# orth_residual: {diag.orth_residual:.3e}", file=err)
        print(f"# off_before: {diag.off_before:.6e}  off_after: "
              f"{diag.off_after:.6e}", file=err)
        print(f"# obliq_after: {diag.obliq_after:.3e}  kappa2d_after: "
              f"{diag.kappa2d_after:.6e}", file=err)
        if not math.isnan(diag.kappa2d_before):
            print(f"# kappa2d_before: {diag.kappa2d_before:.6e}", file=err)
        print(f"# used_qr: {diag.used_qr}", file=err)
        flags = diag.assumption_flags
        print(f"# assumptions: A1={flags[0]} A2={flags[1]} A3={flags[2]}",
              file=err)

    if args.out:
        prefix = Path(args.out)
        write_matrix(f"{prefix}.U", res.u)
        write_sigma(f"{prefix}.sigma", res.sigma)
        if res.v is not None:
            write_matrix(f"{prefix}.V", res.v)
        print(f"# wrote {prefix}.U, {prefix}.sigma"
              + (f", {prefix}.V" if res.v is not None else ""), file=err)

    return EXIT_OK if res.converged else EXIT_NOCONV


def _cmd_experiment(args) -> int:
    spec = ExperimentSpec.load(args.spec)
    out = args.out or spec.out
    if not out:
        print("experiment: no output path (use --out or spec 'out')",
              file=sys.stderr)
        return EXIT_USAGE
    rows = run_experiment(spec, out_path=out)
    bad = sum(1 for r in rows if not r.get("converged"))
    print(f"# wrote {len(rows)} rows to {out}"
          + (f" ({bad} unconverged)" if bad else ""), file=sys.stderr)
    return EXIT_OK if bad == 0 else EXIT_NOCONV


def _cmd_gallery(args) -> int:
    gal = _parse_gallery_spec(args.spec)
    write_matrix(args.out, gal.a)
    msg = f"# wrote {args.out}"
    if gal.sigma_true is not None:
        sidecar = sigma_sidecar_path(args.out)
        write_sigma(sidecar, gal.sigma_true)
        msg += f" and {sidecar}"
    print(msg, file=sys.stderr)
    return EXIT_OK


def _cmd_check(args) -> int:
    from .selfcheck import run_selfcheck

    ok = run_selfcheck(verbose=True)
    return EXIT_OK if ok else 1


def build_parser() -> _Parser:
    parser = _Parser(prog="mpjacobi",
                     description="Mixed-precision preconditioned one-sided "
                                 "Jacobi SVD")
    sub = parser.add_subparsers(dest="command", required=True)

    p_svd = sub.add_parser("svd", help="factor one matrix")
    src = p_svd.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="matrix file (rows cols header)")
    src.add_argument("--gallery", help="gallery spec, e.g. "
                                       "'lauchli-gram:n=10,mu=1e-3'")
    src.add_argument("--identity", type=int, metavar="N",
                     help="N-by-N identity")
    p_svd.add_argument("--config", default="sdq", choices=["sdq", "ssd"])
    p_svd.add_argument("--method", default="orth",
                       choices=["orth", "bidiag", "plain"])
    p_svd.add_argument("--tol", type=float, default=None)
    p_svd.add_argument("--max-sweeps", type=int, default=30)
    p_svd.add_argument("--qr-threshold-override", type=float, default=None,
                       help="replace the default 11/6 row/column trigger")
    p_svd.add_argument("--seed", type=int, default=1)
    p_svd.add_argument("--out", help="prefix for .U/.sigma/.V output files")
    p_svd.set_defaults(func=_cmd_svd)

    p_exp = sub.add_parser("experiment", help="run a sweep to CSV")
    p_exp.add_argument("--spec", required=True, help="JSON experiment spec")
    p_exp.add_argument("--out", help="override the spec output path")
    p_exp.set_defaults(func=_cmd_experiment)

    p_gal = sub.add_parser("gallery", help="export a test matrix")
    p_gal.add_argument("spec", help="e.g. 'randsvd:m=40,n=30,kappa=1e6,"
                                    "mode=3,seed=1'")
    p_gal.add_argument("--out", required=True)
    p_gal.set_defaults(func=_cmd_gallery)

    p_chk = sub.add_parser("check", help="run the quick property battery")
    p_chk.set_defaults(func=_cmd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GallerySpecError as exc:
        print(f"mpjacobi: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MatrixFormatError, SpecError, FileNotFoundError,
            IsADirectoryError) as exc:
        print(f"mpjacobi: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MpJacobiError as exc:
        print(f"mpjacobi: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"mpjacobi: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
