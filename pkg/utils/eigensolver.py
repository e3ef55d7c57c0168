import logging
import math

import numpy as np
import scipy.linalg

from config.settings import HERMITIAN_TOLERANCE, JACOBI_MAX_SWEEPS, JACOBI_TOLERANCE
from utils.errors import ConvergenceError, NonHermitianError
from utils.opalg import LinearOp

logger = logging.getLogger(__name__)


def _check_hermitian(matrix: np.ndarray):
    defect = float(np.abs(matrix - matrix.conj().T).max()) if matrix.size else 0.0
    if defect >= HERMITIAN_TOLERANCE:
        raise NonHermitianError(f"Operator is not Hermitian (max |A - A^H| = {defect:.3e})")


def _rotate(a: np.ndarray, p: int, q: int):
    """Annihilate a[p, q] with a complex Givens-Jacobi rotation, in place"""
    apq = a[p, q]
    r = abs(apq)
    phase = apq / r
    app = a[p, p].real
    aqq = a[q, q].real
    angle = 0.5 * math.atan2(2.0 * r, aqq - app)
    c = math.cos(angle)
    s = math.sin(angle)
    # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
    g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)
    cols = [p, q]
    a[:, cols] = a[:, cols] @ g
    a[cols, :] = g.conj().T @ a[cols, :]
    a[p, q] = 0.0
    a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real


def jacobi_eigenvalues(matrix: np.ndarray, tolerance: float = JACOBI_TOLERANCE,
                       max_sweeps: int = JACOBI_MAX_SWEEPS) -> np.ndarray:
    """Threshold cyclic Jacobi for Hermitian matrices; sweeps only touch pairs above threshold"""
    a = np.array(matrix, dtype=complex, copy=True)
    dim = a.shape[0]
    if dim == 0:
        return np.zeros(0)
    scale = float(np.linalg.norm(a)) or 1.0
    threshold = tolerance * scale / dim

    for sweep in range(max_sweeps):
        off = np.abs(np.triu(a, 1))
        off_norm = float(np.sqrt(2.0 * np.sum(off ** 2)))
        if off_norm <= tolerance * scale:
            logger.debug(f"Jacobi converged after {sweep} sweeps (dim={dim})")
            return np.sort(np.real(np.diag(a)))
        for p, q in np.argwhere(off > threshold):
            if abs(a[p, q]) > threshold:
                _rotate(a, int(p), int(q))

    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps (dim={dim})")


def eigensolver_oracle(op: LinearOp, method: str = "jacobi") -> np.ndarray:
    """All eigenvalues of a Hermitian operator, ascending"""
    _check_hermitian(op.entries)
    if method == "jacobi":
        return jacobi_eigenvalues(op.entries)
    if method == "lapack":
        return np.sort(scipy.linalg.eigvalsh(op.entries))
    raise ValueError(f"Unknown eigensolver method '{method}'")
