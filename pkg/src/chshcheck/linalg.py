"""Dense complex linear algebra for one- and two-qubit operators.

Operators are plain ``numpy`` arrays of shape (2, 2) or (4, 4).  Two-qubit
operators use the index convention ``(A kron B)[2i+k, 2j+l] = A[i,j] B[k,l]``,
so basis state ``|ab>`` sits at index ``2a + b`` and ``|0>`` is the ``+1``
eigenstate of ``Z``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# structural validation, numerical identities, unitarity
TOL_STRUCT = 1e-10
TOL_NUM = 1e-9
TOL_UNITARY = 1e-12

JACOBI_OFFDIAG_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class OperatorError(ValueError):
    """Raised for operators of the wrong shape or with non-finite entries."""


class NotHermitianError(OperatorError):
    pass


def as_operator(m, dims=(2, 4)) -> np.ndarray:
    """Return ``m`` as a complex square array, checking its size and entries."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] not in dims:
        raise OperatorError(f"expected a square operator of dimension {dims}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise OperatorError("operator has non-finite entries")
    return arr


def hermiticity_defect(m) -> float:
    arr = np.asarray(m, dtype=complex)
    return float(np.max(np.abs(arr - arr.conj().T)))


def is_hermitian(m, tol: float = TOL_STRUCT) -> bool:
    return hermiticity_defect(m) <= tol


def kron(a, b) -> np.ndarray:
    """Tensor product of two single-qubit operators."""
    a = as_operator(a, dims=(2,))
    b = as_operator(b, dims=(2,))
    return np.kron(a, b)


def hermitian_eig(h, tol: float = TOL_STRUCT) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian operator by cyclic complex Jacobi rotations.

    Returns ``(w, v)`` with ascending real eigenvalues ``w`` and the matching
    orthonormal eigenvectors as the columns of ``v``.
    """
    h = as_operator(h)
    if not is_hermitian(h, tol):
        raise NotHermitianError(f"operator is not Hermitian (defect {hermiticity_defect(h):.3e})")
    n = h.shape[0]
    a = 0.5 * (h + h.conj().T)
    v = np.eye(n, dtype=complex)
    threshold = JACOBI_OFFDIAG_TOL * max(1.0, float(np.linalg.norm(a)))
    offdiag = ~np.eye(n, dtype=bool)

    for _ in range(JACOBI_MAX_SWEEPS):
        if np.linalg.norm(a[offdiag]) < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                phase = apq / r
                tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if abs(tau) > 1e100:
                    t = 0.5 / tau
                else:
                    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]] on the (p, q) plane;
                # the phase factor makes the pivot real before the plane rotation
                pc = phase.conjugate()
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * pc * col_q
                a[:, q] = s * col_p + c * pc * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * phase * row_q
                a[q, :] = s * row_p + c * phase * row_q
                a[p, q] = a[q, p] = 0.0
                vec_p, vec_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vec_p - s * pc * vec_q
                v[:, q] = s * vec_p + c * pc * vec_q
    else:
        raise ArithmeticError("Jacobi eigensolver did not converge")

    w = np.real(np.diag(a)).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def hermitian_eigenvalues(h) -> np.ndarray:
    return hermitian_eig(h)[0]


def singular_values(m) -> np.ndarray:
    m = as_operator(m)
    gram = m.conj().T @ m
    w = hermitian_eigenvalues(0.5 * (gram + gram.conj().T))
    return np.sqrt(np.clip(w, 0.0, None))


def trace_norm(m) -> float:
    """Sum of singular values; for Hermitian input, the sum of |eigenvalues|."""
    m = as_operator(m)
    if is_hermitian(m, TOL_STRUCT):
        return float(np.sum(np.abs(hermitian_eigenvalues(0.5 * (m + m.conj().T)))))
    return float(np.sum(singular_values(m)))


def operator_norm(m) -> float:
    """Largest singular value."""
    m = as_operator(m)
    if is_hermitian(m, TOL_STRUCT):
        return float(np.max(np.abs(hermitian_eigenvalues(0.5 * (m + m.conj().T)))))
    return float(np.max(singular_values(m)))


def expectation(rho, obs) -> float:
    """``Tr(rho @ obs)`` for a Hermitian observable; asserts the result is real."""
    obs = as_operator(obs, dims=(4,))
    if not is_hermitian(obs):
        raise NotHermitianError("observable is not Hermitian")
    value = np.trace(np.asarray(rho, dtype=complex) @ obs)
    assert abs(value.imag) <= TOL_NUM, f"expectation has imaginary part {value.imag:.3e}"
    return float(value.real)


def is_unitary(u, tol: float = TOL_UNITARY) -> bool:
    u = np.asarray(u, dtype=complex)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


@dataclass(frozen=True)
class Violation:
    name: str  # "shape", "finite", "hermiticity", "trace", "positivity"
    magnitude: float

    def __str__(self) -> str:
        return f"{self.name} (magnitude {self.magnitude:.3e})"


class DensityError(ValueError):
    """A candidate density matrix failed validation."""

    def __init__(self, violations: list[Violation], context: str = ""):
        self.violations = list(violations)
        detail = ", ".join(str(v) for v in self.violations)
        prefix = f"{context}: " if context else ""
        super().__init__(f"{prefix}invalid density matrix: {detail}")


def validate_density(m, tol: float = TOL_STRUCT) -> list[Violation]:
    """Check a candidate two-qubit state; an empty list means it is valid."""
    arr = np.asarray(m)
    if arr.shape != (4, 4):
        return [Violation("shape", float("nan"))]
    arr = arr.astype(complex)
    if not np.all(np.isfinite(arr)):
        return [Violation("finite", float("nan"))]

    violations = []
    herm = hermiticity_defect(arr)
    if herm > tol:
        violations.append(Violation("hermiticity", herm))
    tr_err = abs(np.trace(arr) - 1.0)
    if tr_err > tol:
        violations.append(Violation("trace", float(tr_err)))
    # positivity is judged on the Hermitian part, so a non-Hermitian input
    # still gets a meaningful eigenvalue report
    w_min = float(hermitian_eigenvalues(0.5 * (arr + arr.conj().T))[0])
    if w_min < -tol:
        violations.append(Violation("positivity", -w_min))
    return violations


def check_density(m, context: str = "") -> np.ndarray:
    violations = validate_density(m)
    if violations:
        raise DensityError(violations, context)
    return np.asarray(m, dtype=complex)


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())
