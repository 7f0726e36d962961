"""Small dense Hermitian linear algebra used throughout the package.

Everything here targets the 2x2 and 4x4 complex matrices of two-photon
polarization work, so the eigensolver favours determinism and simplicity
over asymptotic performance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonHermitianError, NotPSDError


@dataclass(frozen=True)
class Tolerances:
    """Shared numerical tolerances.

    hermiticity: largest allowed entry of ``m - m.conj().T``.
    psd_clamp: eigenvalues above ``-psd_clamp`` are treated as zero.
    reconstruction: accuracy target for eigendecomposition round trips.
    """

    hermiticity: float = 1e-8
    psd_clamp: float = 1e-9
    reconstruction: float = 1e-10


DEFAULT_TOL = Tolerances()

_PHASE_EPS = 1e-12


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with complex dtype."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def check_square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonHermitianError(f"expected a square matrix, got shape {m.shape}")
    return m


def check_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL.hermiticity) -> np.ndarray:
    """Return ``m`` as a complex array, raising if it is not Hermitian."""
    m = check_square(m)
    dev = float(np.abs(m - m.conj().T).max())
    if dev > tol:
        raise NonHermitianError(f"matrix deviates from Hermiticity by {dev:.3e}")
    return m


def herm_eig(m: np.ndarray, tol: float = DEFAULT_TOL.hermiticity):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ``w`` sorted in descending order and
    orthonormal eigenvectors in the columns of ``v``.  Each eigenvector is
    phase-fixed so its first component of non-negligible magnitude is real
    and positive, which makes repeated runs bit-identical.  For degenerate
    eigenvalues any orthonormal basis of the eigenspace may be returned.
    """
    a = check_hermitian(m, tol).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    if n == 1:
        return a.real.diagonal().copy(), v

    scale = max(1.0, float(np.abs(a).max()))
    off_target = 1e-14 * scale
    for _ in range(60):
        off = float(np.sqrt(np.sum(np.abs(np.triu(a, 1)) ** 2)))
        if off <= off_target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                z = a[p, q]
                mag = abs(z)
                if mag <= 1e-300:
                    continue
                beta = np.angle(z)
                theta = 0.5 * np.arctan2(2.0 * mag, a[p, p].real - a[q, q].real)
                c = np.cos(theta)
                s = np.sin(theta)
                phase = np.exp(1j * beta)
                # Rotation on the (p, q) plane zeroing a[p, q].
                block = np.array([[c * phase, -s * phase], [s, c]], dtype=complex)
                idx = [p, q]
                a[idx, :] = block.conj().T @ a[idx, :]
                a[:, idx] = a[:, idx] @ block
                v[:, idx] = v[:, idx] @ block

    w = a.diagonal().real.copy()
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    for j in range(n):
        col = v[:, j]
        nz = np.flatnonzero(np.abs(col) > _PHASE_EPS)
        if nz.size:
            ref = col[nz[0]]
            v[:, j] = col * (ref.conjugate() / abs(ref))
    return w, v


def psd_sqrt(
    m: np.ndarray,
    clamp: float = DEFAULT_TOL.psd_clamp,
    tol: float = DEFAULT_TOL.hermiticity,
) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix.

    Eigenvalues in ``[-clamp, 0)`` are treated as exact zeros; anything more
    negative raises :class:`NotPSDError`.
    """
    w, v = herm_eig(m, tol)
    if w.min() < -clamp:
        raise NotPSDError(f"matrix has eigenvalue {w.min():.3e} below -{clamp:.1e}")
    root = v @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    return 0.5 * (root + root.conj().T)


def min_eigenvalue(m: np.ndarray, tol: float = DEFAULT_TOL.hermiticity) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    w, _ = herm_eig(m, tol)
    return float(w[-1])
