"""Identifications between complex and real linear algebra.

A complex vector in C^n is flattened to R^2n by stacking real over
imaginary parts; a complex n x n matrix becomes a real 2n x 2n block
matrix.  Every quadratic-form computation in this package reduces to
plain real linear algebra through these maps.  All functions broadcast
over leading batch axes.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "vectorize",
    "devectorize",
    "realify",
    "sym_antisym_split",
    "sym_part",
    "antisym_part",
    "kron_identity",
    "rotation_form",
    "interleave",
    "conj_block",
]


def vectorize(xi: np.ndarray) -> np.ndarray:
    """Map a complex n-vector to the real 2n-vector (Re xi, Im xi)."""
    xi = np.asarray(xi, dtype=complex)
    return np.concatenate([xi.real, xi.imag], axis=-1)


def devectorize(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    if m % 2:
        raise ValueError("real vector length must be even")
    n = m // 2
    return x[..., :n] + 1j * x[..., n:]


def realify(A: np.ndarray) -> np.ndarray:
    """Real 2n x 2n block form [[Re A, -Im A], [Im A, Re A]] of a complex matrix.

    Satisfies vectorize(A @ xi) == realify(A) @ vectorize(xi), and is
    multiplicative: realify(A @ B) == realify(A) @ realify(B).
    """
    A = np.asarray(A, dtype=complex)
    top = np.concatenate([A.real, -A.imag], axis=-1)
    bot = np.concatenate([A.imag, A.real], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def sym_antisym_split(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a square matrix into (M + M^T)/2 and (M - M^T)/2.

    Plain transpose, no conjugation, so the split is meaningful for
    complex matrices as well.
    """
    M = np.asarray(M)
    if M.shape[-1] != M.shape[-2]:
        raise ValueError("matrix must be square")
    T = np.swapaxes(M, -1, -2)
    return (M + T) / 2, (M - T) / 2


def sym_part(M: np.ndarray) -> np.ndarray:
    return sym_antisym_split(M)[0]


def antisym_part(M: np.ndarray) -> np.ndarray:
    return sym_antisym_split(M)[1]


def kron_identity(D: np.ndarray, n: int) -> np.ndarray:
    """Kronecker product D (x) I_n, block (i, j) equal to d_ij * I_n."""
    return np.kron(np.asarray(D, dtype=float), np.eye(n))


def rotation_form(psi):
    """The symmetric reflection-like 2x2 matrix [[cos, sin], [sin, -cos]](psi).

    Appears as the angular part of the real Hessian of |zeta|^r; squares
    to the identity for every angle.
    """
    c, s = np.cos(psi), np.sin(psi)
    return np.stack(
        [np.stack([c, s], axis=-1), np.stack([s, -c], axis=-1)], axis=-2
    )


def interleave(n: int) -> np.ndarray:
    """Permutation W_n turning (Re w1, Re w2, Im w1, Im w2) block order
    into (Re w1, Im w1, Re w2, Im w2); an involution."""
    P = np.zeros((4, 4))
    P[0, 0] = P[1, 2] = P[2, 1] = P[3, 3] = 1.0
    return kron_identity(P, n)


def conj_block(n: int) -> np.ndarray:
    """U_n = diag(I_n, -I_n); sends vectorize(xi) to vectorize(conj(xi))."""
    return kron_identity(np.diag([1.0, -1.0]), n)
