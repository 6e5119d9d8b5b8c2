"""Fitting linear laws: correlation matrix, Jacobi eigensolver, and the
smallest-eigenpair selection that defines a law.

The law of a class is the unit vector w minimizing the mean squared
residual of w against the class's embedded windows; by the Lagrange
condition this is the eigenvector of C = Y^T Y / K with the smallest
eigenvalue, and that eigenvalue equals the training residual variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddedMatrix, embed_class
from .types import Beat, Corpus, Label, LinearLaw

# Tolerances for double precision at widths <= 32.
JACOBI_OFFDIAG_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
VARIANCE_IDENTITY_RTOL = 1e-10
DEGENERACY_RTOL = 1e-9


class ConvergenceError(RuntimeError):
    pass


class DegenerateLawError(ValueError):
    pass


@dataclass
class CorrelationMatrix:
    C: np.ndarray
    K: int

    def __post_init__(self):
        self.C = np.asarray(self.C, dtype=float)
        if self.C.ndim != 2 or self.C.shape[0] != self.C.shape[1]:
            raise ValueError("correlation matrix must be square")


@dataclass
class ScanEntry:
    width: int
    lambda_train: float
    variance_validation: float
    gap: float
    feature_count: int


@dataclass
class LawScanReport:
    entries: list[ScanEntry]

    def to_csv(self) -> str:
        lines = ["l,lambda_train,var_val,gap,feature_count"]
        for e in self.entries:
            lines.append(
                f"{e.width},{e.lambda_train:.17g},{e.variance_validation:.17g},"
                f"{e.gap:.17g},{e.feature_count}"
            )
        return "\n".join(lines) + "\n"


def correlation(Y: EmbeddedMatrix) -> CorrelationMatrix:
    """C = Y^T Y / K. Upper triangle is mirrored so symmetry is exact."""
    if Y.rows < 1:
        raise ValueError("embedding has no rows")
    K = Y.rows
    M = Y.data.T @ Y.data / K
    upper = np.triu(M)
    C = upper + upper.T - np.diag(np.diag(M))
    return CorrelationMatrix(C=C, K=K)


def jacobi_eigensystem(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full eigensystem of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues ascending, eigenvectors as columns). Sweeps
    until the off-diagonal Frobenius norm drops below
    JACOBI_OFFDIAG_TOL times the Frobenius norm of the input.
    """
    A = np.array(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    n = A.shape[0]
    V = np.eye(n)
    fro = np.linalg.norm(A)
    if fro == 0.0:
        return np.zeros(n), V

    def offnorm(M):
        # norm of the strictly off-diagonal part, computed directly to
        # avoid cancellation against the (dominant) diagonal
        return np.linalg.norm(M - np.diag(np.diag(M)))

    for _ in range(JACOBI_MAX_SWEEPS):
        if offnorm(A) <= JACOBI_OFFDIAG_TOL * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:  # theta**2 would overflow
                    t = 1.0 / (2.0 * theta)
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/cols p and q
                rp = A[:, p].copy()
                rq = A[:, q].copy()
                A[:, p] = c * rp - s * rq
                A[:, q] = s * rp + c * rq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise ConvergenceError(
            f"Jacobi failed to converge in {JACOBI_MAX_SWEEPS} sweeps, "
            f"off-diagonal residual {offnorm(A):.3e}"
        )
    evals = np.diag(A).copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], V[:, order]


def _fix_sign(w: np.ndarray) -> np.ndarray:
    """First nonzero component made positive (reproducible orientation)."""
    for v in w:
        if v != 0.0:
            return -w if v < 0.0 else w
    return w


def smallest_eigenpair(cm: CorrelationMatrix) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue and its unit eigenvector of the correlation
    matrix, with a verified residual."""
    evals, evecs = jacobi_eigensystem(cm.C)
    w = _fix_sign(evecs[:, 0].copy())
    w = w / np.linalg.norm(w)
    # Rayleigh quotient refinement: the Jacobi diagonal carries an
    # absolute error ~eps*||C||, far above a near-zero eigenvalue
    lam = max(float(w @ cm.C @ w), 0.0)
    resid = np.linalg.norm(cm.C @ w - lam * w)
    if resid > 1e-9 * max(1.0, np.linalg.norm(cm.C)):
        raise ConvergenceError(f"eigenpair residual {resid:.3e} too large")
    return lam, w


def full_spectrum(cm: CorrelationMatrix) -> np.ndarray:
    evals, _ = jacobi_eigensystem(cm.C)
    return evals


def fit_law(
    beats: list[Beat],
    width: int,
    class_tag: str,
    allow_degenerate: bool = False,
) -> LinearLaw:
    """Fit the linear law of a class: embed, correlate, take the
    smallest eigenpair, and verify the variance identity."""
    Y = embed_class(beats, width)
    cm = correlation(Y)
    evals, evecs = jacobi_eigensystem(cm.C)
    lam = float(evals[0])
    scale = max(float(np.trace(cm.C)), np.finfo(float).tiny)
    multiplicity = int(np.sum(evals - lam <= DEGENERACY_RTOL * scale))
    if multiplicity > 1 and not allow_degenerate:
        raise DegenerateLawError(
            f"rank-deficient: law ambiguous (smallest eigenvalue has "
            f"multiplicity {multiplicity})"
        )
    w = _fix_sign(evecs[:, 0].copy())
    w = w / np.linalg.norm(w)
    # The residual path mean((Yw)^2) is the accurate eigenvalue estimate:
    # forming w C w loses a near-zero eigenvalue to cancellation at
    # eps*||C||, while the per-row dot products cancel before squaring.
    var = float(np.mean((Y.data @ w) ** 2))
    tol = VARIANCE_IDENTITY_RTOL * max(var, lam) + 1e-12 * scale
    if abs(var - lam) > tol:
        raise ConvergenceError(
            f"variance identity violated: mean residual power {var:.17g} "
            f"vs solver eigenvalue {lam:.17g}"
        )
    return LinearLaw(w=w, lam=var, class_tag=class_tag, train_row_count=Y.rows)


def law_variance(beats: list[Beat], law: LinearLaw) -> float:
    """Mean squared residual of the law over all embedded rows.

    On the fitting set this equals the law's eigenvalue.
    """
    Y = embed_class(beats, law.width)
    return float(np.mean((Y.data @ law.w) ** 2))


def scan_law_length(
    train: Corpus,
    validation: Corpus,
    widths: list[int] | range,
    class_tag: Label = Label.NORMAL,
) -> LawScanReport:
    """Fit a law per width on the training reference class and compare
    its residual variance on the validation reference class. A small
    train/validation gap indicates the law generalizes at that width."""
    train_beats = [b for b in train.with_label(class_tag) if not b.artifact]
    val_beats = [b for b in validation.with_label(class_tag) if not b.artifact]
    entries = []
    for width in widths:
        if not 2 <= width <= train.window_len:
            raise ValueError(f"law length {width} outside [2, {train.window_len}]")
        law = fit_law(train_beats, width, class_tag.name.title())
        var_val = law_variance(val_beats, law) if val_beats else float("nan")
        denom = law.lam if law.lam > 0 else np.finfo(float).tiny
        gap = abs(var_val - law.lam) / denom
        entries.append(
            ScanEntry(
                width=width,
                lambda_train=law.lam,
                variance_validation=var_val,
                gap=gap,
                feature_count=train.window_len - width + 1,
            )
        )
    return LawScanReport(entries=entries)
