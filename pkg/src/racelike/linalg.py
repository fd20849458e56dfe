"""Centering, covariance and a cyclic Jacobi eigensolver for small symmetric matrices."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AsymmetricMatrix, ComponentCountError, InputError, LengthMismatch, TooFewRows

SYMMETRY_TOL = 1e-9
OFFDIAG_TOL = 1e-12
MAX_SWEEPS = 100
# entries this close to the largest magnitude count as tied for the sign rule
SIGN_TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PrincipalComponent:
    eigenvalue: float
    vector: np.ndarray

    def __post_init__(self):
        v = np.array(self.vector, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    def as_dict(self) -> dict:
        return {"eigenvalue": float(self.eigenvalue), "vector": [float(x) for x in self.vector]}


def as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim != 2:
        raise InputError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise InputError("matrix entries must be finite")
    return a


def column_center(m, weights=None) -> tuple[np.ndarray, np.ndarray]:
    """Subtract the column means. Returns ``(centered, mean)``.

    With ``weights`` the mean is the weighted column mean.
    """
    a = as_matrix(m)
    if a.shape[0] < 2:
        raise TooFewRows(f"centering needs at least 2 rows, got {a.shape[0]}")
    if weights is None:
        mean = a.mean(axis=0)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (a.shape[0],) or (w < 0).any() or w.sum() <= 0:
            raise InputError("weights must be one non-negative value per row with positive total")
        mean = w @ a / w.sum()
    return a - mean, mean


def covariance(centered, weights=None) -> np.ndarray:
    """``(1/n) Mᵀ M`` for column-centered ``M`` (weighted: ``Mᵀ W M / ΣW``)."""
    a = as_matrix(centered)
    if weights is None:
        c = a.T @ a / a.shape[0]
    else:
        w = np.asarray(weights, dtype=float)
        c = (a * w[:, None]).T @ a / w.sum()
    # exact symmetry; the product is symmetric up to rounding only
    return (c + c.T) / 2


def _offdiag_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off * off)))


def jacobi_eigh(c, tol: float = OFFDIAG_TOL, max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray, int]:
    """Eigen-decompose a symmetric matrix by cyclic Jacobi rotations.

    Sweeps visit pairs ``(p, q)`` with ``p < q`` in row-major order and stop
    when the off-diagonal Frobenius norm is at most ``tol`` or after
    ``max_sweeps`` sweeps. Returns ``(eigenvalues, eigenvectors, sweeps)``
    with eigenvectors in the columns, unsorted.
    """
    a = as_matrix(c).copy()
    n = a.shape[0]
    if a.shape != (n, n):
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    v = np.eye(n)
    sweeps = 0
    while sweeps < max_sweeps and _offdiag_norm(a) > tol:
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                cs = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * cs
                # A <- Jᵀ A J, with J the rotation in the (p, q) plane
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = cs * ap - sn * aq
                a[:, q] = sn * ap + cs * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = cs * rp - sn * rq
                a[q, :] = sn * rp + cs * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = cs * vp - sn * vq
                v[:, q] = sn * vp + cs * vq
    return np.diag(a).copy(), v, sweeps


def orient(vector) -> np.ndarray:
    """Flip ``vector`` so its largest-magnitude entry is positive.

    Entries within ``SIGN_TIE_TOL`` of the maximum magnitude are tied and the
    lowest index among them decides.
    """
    v = np.asarray(vector, dtype=float)
    mags = np.abs(v)
    lead = int(np.flatnonzero(mags >= mags.max() - SIGN_TIE_TOL)[0])
    return -v if v[lead] < 0 else v.copy()


def principal_components(c, m: int) -> list[PrincipalComponent]:
    """Top ``m`` eigenpairs of symmetric ``c``, eigenvalue descending."""
    a = as_matrix(c)
    k = a.shape[0]
    if a.shape != (k, k):
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=SYMMETRY_TOL):
        raise AsymmetricMatrix("matrix is not symmetric within 1e-9")
    if not 1 <= m <= k:
        raise ComponentCountError(f"component count must be in [1, {k}], got {m}")
    a = (a + a.T) / 2
    values, vectors, _ = jacobi_eigh(a)
    # stable sort keeps Jacobi's index order among equal eigenvalues
    order = np.argsort(-values, kind="stable")[:m]
    out = []
    for i in order:
        lam = float(values[i])
        if -OFFDIAG_TOL < lam < 0.0:
            lam = 0.0
        out.append(PrincipalComponent(lam, orient(vectors[:, i])))
    return out


def project(x, mean, pc: PrincipalComponent) -> float:
    """Score of ``x`` along ``pc`` relative to ``mean``: ``(x - mean) · v``."""
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    if x.shape != mean.shape or x.shape != pc.vector.shape:
        raise LengthMismatch(
            f"lengths differ: x={x.shape}, mean={mean.shape}, component={pc.vector.shape}"
        )
    return float((x - mean) @ pc.vector)


def project_rows(rows, mean, pc: PrincipalComponent) -> np.ndarray:
    """Vectorised :func:`project` over the rows of a matrix."""
    rows = np.asarray(rows, dtype=float)
    if rows.shape[1:] != pc.vector.shape:
        raise LengthMismatch("row length does not match component length")
    return (rows - np.asarray(mean, dtype=float)) @ pc.vector
