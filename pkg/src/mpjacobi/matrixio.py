"""Plain-text matrix exchange format.

Line 1 holds ``rows cols``; each following line holds one row with 17
significant digits per entry, which round-trips binary64 exactly. Singular
value sidecars carry one value per line at 33 significant digits so
extended-precision ground truth survives the trip; they are read back into
hi/lo pairs exactly.
"""

from __future__ import annotations

from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

import numpy as np

from .precision import DDArray

__all__ = ["write_matrix", "read_matrix", "write_sigma", "read_sigma",
           "sigma_sidecar_path", "MatrixFormatError"]


class MatrixFormatError(ValueError):
    pass


def write_matrix(path, a: np.ndarray) -> None:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise MatrixFormatError("expected a 2-d matrix")
    m, n = a.shape
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{m} {n}\n")
        for i in range(m):
            fh.write(" ".join(format(x, ".17g") for x in a[i]) + "\n")


def read_matrix(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise MatrixFormatError(f"{path}: bad header {header!r}")
        try:
            m, n = int(header[0]), int(header[1])
        except ValueError as exc:
            raise MatrixFormatError(f"{path}: bad header: {exc}") from None
        if m < 1 or n < 1:
            raise MatrixFormatError(f"{path}: non-positive dimensions")
        rows = []
        for i in range(m):
            parts = fh.readline().split()
            if len(parts) != n:
                raise MatrixFormatError(
                    f"{path}: row {i + 1} has {len(parts)} entries, expected {n}"
                )
            try:
                rows.append([float(x) for x in parts])
            except ValueError as exc:
                raise MatrixFormatError(f"{path}: row {i + 1}: {exc}") from None
    a = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise MatrixFormatError(f"{path}: non-finite entries")
    return a


def sigma_sidecar_path(matrix_path) -> Path:
    return Path(str(matrix_path) + ".sigma")


def _dd_to_decimal_str(hi: float, lo: float, digits: int = 33) -> str:
    frac = Fraction(hi) + Fraction(lo)
    if frac == 0:
        return "0"
    with localcontext() as ctx:
        ctx.prec = digits
        d = Decimal(frac.numerator) / Decimal(frac.denominator)
        return format(d, "E")


def write_sigma(path, sigma) -> None:
    if isinstance(sigma, DDArray):
        hi, lo = sigma.hi, sigma.lo
    else:
        hi = np.asarray(sigma, dtype=np.float64)
        lo = np.zeros_like(hi)
    with open(path, "w", encoding="ascii") as fh:
        for h, l in zip(hi, lo):
            fh.write(_dd_to_decimal_str(float(h), float(l)) + "\n")


def read_sigma(path) -> DDArray:
    his = []
    los = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                frac = Fraction(Decimal(line))
            except (ValueError, ArithmeticError) as exc:
                raise MatrixFormatError(f"{path}: {exc}") from None
            hi = float(frac)
            lo = float(frac - Fraction(hi))
            his.append(hi)
            los.append(lo)
    if not his:
        raise MatrixFormatError(f"{path}: empty sigma file")
    return DDArray(np.array(his), np.array(los))
