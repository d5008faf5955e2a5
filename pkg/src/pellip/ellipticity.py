"""Scalar functionals attached to a complex accretive matrix.

Computes the accretivity bounds (lambda, Lambda, nu), the p-ellipticity
constant delta_p, the angle-like quantity mu, the normalized matrix W_p
and the closed-form special cases, together with independent sampling
oracles for cross-checking the exact eigenvalue reductions.

Every public function accepts either a single complex (n, n) array, a
stack of matrices with shape (..., n, n) interpreted as a piecewise
constant coefficient field (reduction = min / max over cells), or any
object exposing a ``mats`` attribute holding such a stack (e.g.
``pellip.field.MatrixField``).
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.linalg
import scipy.optimize

from .realform import antisym_part, realify, sym_part

__all__ = [
    "MatrixSpec",
    "EllipticityReport",
    "rotation_matrix",
    "skew_matrix",
    "rotated_matrix",
    "accretivity_bounds",
    "delta_p",
    "delta_r_extended",
    "delta_p_oracle",
    "mu",
    "mu_oracle",
    "p_ellipticity_range",
    "script_w_p",
    "closed_form_delta",
    "sector_test_symmetric",
    "ellipticity_report",
]

# 2x2 rotation generator, the building block of the skew family.
ROT_GEN = np.array([[0.0, -1.0], [1.0, 0.0]])


def _cells(A) -> np.ndarray:
    """Normalize input to a stack of matrices with shape (m, n, n)."""
    if hasattr(A, "mats"):
        A = A.mats
    A = np.asarray(A, dtype=complex)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError("expected a square matrix or a stack of square matrices")
    return A.reshape((-1,) + A.shape[-2:])


def rotation_matrix(phi: float, n: int = 2) -> np.ndarray:
    """e^{i phi} I_n; accretive iff |phi| < pi/2."""
    return np.exp(1j * phi) * np.eye(n)


def skew_matrix(w: float) -> np.ndarray:
    """I_2 + i w R with R the rotation generator; accretive iff |w| < 1...
    in the sense that lambda = 1 > 0 always, while p-ellipticity degrades
    with |w|."""
    return np.eye(2) + 1j * w * ROT_GEN


def rotated_matrix(B: np.ndarray, phi: float) -> np.ndarray:
    """e^{i phi} B for a real matrix B with positive definite symmetric part."""
    return np.exp(1j * phi) * np.asarray(B, dtype=complex)


@dataclasses.dataclass(frozen=True)
class MatrixSpec:
    """Declarative description of a coefficient matrix.

    kind is one of 'constant', 'rotation', 'skew', 'rotated', 'field';
    the payload fields used depend on the kind.  Validation happens on
    construction: constant/field payloads must be accretive, rotation
    requires |phi| < pi/2, skew requires |w| < 1.
    """

    kind: str
    matrix: np.ndarray | None = None
    phi: float = 0.0
    w: float = 0.0
    n: int = 2
    field: object | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "rotation", "skew", "rotated", "field"):
            raise ValueError(f"unknown matrix kind {self.kind!r}")
        if self.kind == "rotation" and not abs(self.phi) < math.pi / 2:
            raise ValueError("rotation angle must satisfy |phi| < pi/2")
        if self.kind == "skew" and not abs(self.w) < 1:
            raise ValueError("skew parameter must satisfy |w| < 1")
        if self.kind in ("constant", "rotated", "field"):
            lam, _, _ = accretivity_bounds(self.realize())
            if not lam > 0:
                raise ValueError("matrix is not accretive (lambda <= 0)")

    def realize(self):
        if self.kind == "constant":
            return np.asarray(self.matrix, dtype=complex)
        if self.kind == "rotation":
            return rotation_matrix(self.phi, self.n)
        if self.kind == "skew":
            return skew_matrix(self.w)
        if self.kind == "rotated":
            return rotated_matrix(self.matrix, self.phi)
        return self.field


@dataclasses.dataclass(frozen=True)
class EllipticityReport:
    lam: float
    Lam: float
    nu: float
    p: float
    delta_p: float
    mu: float
    w_p_norm: float
    p_range: tuple[float, float]


# ---------------------------------------------------------------------------
# exact eigenvalue reductions


def _delta_cells(mats: np.ndarray, r: float) -> np.ndarray:
    """Per-cell p-ellipticity constant, exact.

    Equals twice the smallest eigenvalue of sym(D_r M(A)) where D_r
    scales the real part rows by 1/r and the imaginary part rows by
    1 - 1/r; for r > 1 this is the conjugate-exponent weight 1/r*.
    """
    n = mats.shape[-1]
    M = realify(mats)
    scale = np.concatenate([np.full(n, 1.0 / r), np.full(n, 1.0 - 1.0 / r)])
    S = sym_part(scale[:, None] * M)
    return 2.0 * np.linalg.eigvalsh(S)[..., 0]


def delta_r_extended(A, r: float) -> float:
    """delta_r for any r > 0, using the extended weight (1/r, 1 - 1/r).

    Needed with r in (0, 1) by the tensor-Hessian lower bound; for
    r > 1 it coincides with :func:`delta_p`.
    """
    if not r > 0:
        raise ValueError("exponent must be positive")
    return float(_delta_cells(_cells(A), r).min())


def delta_p(A, p: float) -> float:
    """The p-ellipticity constant; exact, via a 2n x 2n symmetric eigenproblem."""
    if not p > 1:
        raise ValueError("exponent p must satisfy p > 1")
    return float(_delta_cells(_cells(A), p).min())


def accretivity_bounds(A) -> tuple[float, float, float]:
    """(lambda, Lambda, nu): ellipticity lower bound, operator-norm upper
    bound and numerical-range angle, reduced over cells for fields."""
    mats = _cells(A)
    n = mats.shape[-1]
    M = realify(mats)
    lam = float(np.linalg.eigvalsh(sym_part(M))[..., 0].min())
    Lam = float(np.linalg.svd(mats, compute_uv=False)[..., 0].max())
    if lam <= 0:
        # numerical range meets the closed left half plane; no sector angle
        return lam, Lam, math.pi / 2
    nu = max(_nu_cell(mats[k]) for k in range(mats.shape[0]))
    return lam, Lam, nu


def _nu_cell(Amat: np.ndarray) -> float:
    """Numerical-range half-angle of one accretive matrix.

    Re<A xi, xi> and Im<A xi, xi> are both real quadratic forms on R^2n;
    the extreme tangent is the largest-magnitude eigenvalue of the
    pencil (Im form, Re form), followed by a local polish of |arg|.
    """
    n = Amat.shape[-1]
    M = realify(Amat)
    P = sym_part(M)
    J = np.block([[np.zeros((n, n)), -np.eye(n)], [np.eye(n), np.zeros((n, n))]])
    S = sym_part(J.T @ M)
    vals, vecs = scipy.linalg.eigh(S, P)
    k = int(np.argmax(np.abs(vals)))
    nu = math.atan(abs(vals[k]))

    def neg_arg(x):
        xi = x[:n] + 1j * x[n:]
        if np.linalg.norm(xi) < 1e-14:
            return 0.0
        z = np.vdot(xi, Amat @ xi).conjugate()  # <A xi, xi>
        return -abs(np.angle(z))

    res = scipy.optimize.minimize(
        neg_arg, vecs[:, k], method="Nelder-Mead",
        options={"maxiter": 400, "xatol": 1e-10, "fatol": 1e-12},
    )
    return max(nu, -float(res.fun))


def mu(A, *, tol: float = 1e-12, maxiter: int = 80) -> float:
    """Infimum of Re<A xi, xi> / |<A xi, conj xi>|.

    Primary method: bisection on s = |1 - 2/p| in [0, 1) for the sign
    change of delta_p, which is Lipschitz and nonincreasing in s.
    Returns 1 when delta stays positive up to s = 1 - 1e-9.
    """
    mats = _cells(A)

    def delta_of_s(s: float) -> float:
        # p >= 2 with |1 - 2/p| = s
        return float(_delta_cells(mats, 2.0 / (1.0 - s)).min())

    hi = 1.0 - 1e-9
    if delta_of_s(hi) > 0:
        return 1.0
    lo = 0.0
    if delta_of_s(lo) <= 0:
        raise ValueError("matrix is not accretive (delta_2 <= 0)")
    for _ in range(maxiter):
        mid = (lo + hi) / 2
        if delta_of_s(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return (lo + hi) / 2


def mu_oracle(A, *, samples: int = 4096, refine: int = 8, rng=None,
              guard: float = 1e-12) -> float:
    """Direct sphere minimization of the mu quotient.

    Points with |<A xi, conj xi>| below ``guard`` are excluded; the
    bisection path is authoritative, this is a cross-check.
    """
    mats = _cells(A)
    rng = np.random.default_rng(rng)
    best = math.inf
    for Amat in mats:
        n = Amat.shape[-1]

        def quotient(x):
            xi = x[:n] + 1j * x[n:]
            nrm = np.linalg.norm(xi)
            if nrm < 1e-14:
                return math.inf
            xi = xi / nrm
            den = abs(np.sum((Amat @ xi) * xi))
            if den < guard:
                return math.inf
            return float(np.real(np.vdot(xi, Amat @ xi).conjugate())) / den

        X = rng.standard_normal((samples, 2 * n))
        vals = np.array([quotient(x) for x in X])
        order = np.argsort(vals)
        cand = min(vals[order[0]], best)
        for idx in order[:refine]:
            res = scipy.optimize.minimize(
                quotient, X[idx], method="Nelder-Mead",
                options={"maxiter": 600, "xatol": 1e-10, "fatol": 1e-12},
            )
            cand = min(cand, float(res.fun))
        best = min(best, cand)
    return min(best, 1.0)


def p_ellipticity_range(A) -> tuple[float, float]:
    """Open interval of exponents p with |1 - 2/p| < mu(A); endpoints conjugate."""
    m = mu(A)
    if m >= 1.0:
        return 1.0, math.inf
    return 2.0 / (1.0 + m), 2.0 / (1.0 - m)


def delta_p_oracle(A, p: float, *, samples: int = 4096, refine: int = 8,
                   rng=None) -> float:
    """Sampled + locally refined minimum of
    Re<A xi, xi> - |1 - 2/p| |<A xi, conj xi>| over the unit sphere."""
    if not p > 1:
        raise ValueError("exponent p must satisfy p > 1")
    mats = _cells(A)
    s = abs(1.0 - 2.0 / p)
    rng = np.random.default_rng(rng)
    best = math.inf
    for Amat in mats:
        n = Amat.shape[-1]

        def objective(x):
            xi = x[:n] + 1j * x[n:]
            nrm = np.linalg.norm(xi)
            if nrm < 1e-14:
                return math.inf
            xi = xi / nrm
            Axi = Amat @ xi
            return float(
                np.real(np.sum(Axi * xi.conjugate()))
                - s * abs(np.sum(Axi * xi))
            )

        X = rng.standard_normal((samples, 2 * n))
        Xi = X[:, :n] + 1j * X[:, n:]
        Xi = Xi / np.linalg.norm(Xi, axis=1, keepdims=True)
        AXi = Xi @ Amat.T
        vals = (
            np.real(np.sum(AXi * Xi.conjugate(), axis=1))
            - s * np.abs(np.sum(AXi * Xi, axis=1))
        )
        order = np.argsort(vals)
        cand = float(vals[order[0]])
        for idx in order[:refine]:
            res = scipy.optimize.minimize(
                objective, X[idx], method="Nelder-Mead",
                options={"maxiter": 800, "xatol": 1e-10, "fatol": 1e-13},
            )
            cand = min(cand, float(res.fun))
        best = min(best, cand)
    return best


# ---------------------------------------------------------------------------
# W_p and closed forms


def _script_v_p(V: np.ndarray, p: float) -> np.ndarray:
    return ((p - 2) * sym_part(V) + p * antisym_part(V)) / (2 * math.sqrt(p - 1))


def script_w_p(A, p: float):
    """(W_p(A), ||W_p(A)||); for stacks returns (stack of W_p, sup of norms).

    W_p = S^-1 V_p S^-1 with S the positive square root of (Re A)_s and
    V_p = ((p-2) V_s + p V_a) / (2 sqrt(p-1)); the operator norm of W_p
    is <= 1 exactly when delta_p(A) >= 0.
    """
    if not p > 1:
        raise ValueError("exponent p must satisfy p > 1")
    mats = _cells(A)
    Ws, norms = [], []
    for Amat in mats:
        Us = sym_part(Amat.real)
        evals, evecs = np.linalg.eigh(Us)
        if evals[0] <= 0:
            raise ValueError("(Re A)_s must be positive definite")
        S_inv = (evecs / np.sqrt(evals)) @ evecs.T
        W = S_inv @ _script_v_p(Amat.imag, p) @ S_inv
        Ws.append(W)
        norms.append(np.linalg.norm(W, 2))
    if len(Ws) == 1 and np.asarray(A if not hasattr(A, "mats") else A.mats).ndim == 2:
        return Ws[0], float(norms[0])
    return np.stack(Ws), float(max(norms))


def closed_form_delta(kind: str, params: dict, p: float) -> float:
    """Closed-form special cases.

    'rotation' (phi): cos(phi) - |1 - 2/p|.
    'skew' (w), p >= 2: 1 - sqrt(phat^2 + w^2) with phat = 1 - 2/p.
    'rotated_wp_norm' (B, phi): squared W_p norm of e^{i phi} B,
    tan^2(phi) (||Bs^{-1/2} Ba Bs^{-1/2}||^2 + phat^2) / (1 - phat^2).
    """
    if not p > 1:
        raise ValueError("exponent p must satisfy p > 1")
    ph = 1.0 - 2.0 / p
    if kind == "rotation":
        return math.cos(params["phi"]) - abs(ph)
    if kind == "skew":
        if p < 2:
            raise ValueError("skew closed form requires p >= 2")
        return 1.0 - math.sqrt(ph * ph + params["w"] ** 2)
    if kind == "rotated_wp_norm":
        B = np.asarray(params["B"], dtype=float)
        phi = params["phi"]
        Bs = sym_part(B)
        evals, evecs = np.linalg.eigh(Bs)
        if evals[0] <= 0:
            raise ValueError("B must have positive definite symmetric part")
        S_inv = (evecs / np.sqrt(evals)) @ evecs.T
        core = np.linalg.norm(S_inv @ antisym_part(B) @ S_inv, 2)
        return math.tan(phi) ** 2 * (core**2 + ph * ph) / (1.0 - ph * ph)
    raise ValueError(f"unknown closed form kind {kind!r}")


def sector_test_symmetric(A, p: float, *, tol: float = 1e-12) -> bool:
    """True iff delta_p(A_s) >= 0.

    Checked without going through delta_p: the condition is
    |p - 2| |<V alpha, alpha>| <= 2 sqrt(p-1) <U alpha, alpha> for all
    real alpha, i.e. the largest-magnitude eigenvalue of the pencil
    (V_s, U_s) stays below tan of the critical sector angle.
    """
    if not p > 1:
        raise ValueError("exponent p must satisfy p > 1")
    if abs(p - 2) < 1e-15:
        return True
    thresh = 2.0 * math.sqrt(p - 1) / abs(p - 2)
    for Amat in _cells(A):
        Us = sym_part(Amat.real)
        Vs = sym_part(Amat.imag)
        if np.linalg.eigvalsh(Us)[0] <= 0:
            return False
        g = float(np.abs(scipy.linalg.eigh(Vs, Us, eigvals_only=True)).max())
        if g > thresh + tol:
            return False
    return True


def ellipticity_report(A, p: float) -> EllipticityReport:
    lam, Lam, nu = accretivity_bounds(A)
    _, wnorm = script_w_p(A, p)
    return EllipticityReport(
        lam=lam,
        Lam=Lam,
        nu=nu,
        p=p,
        delta_p=delta_p(A, p),
        mu=mu(A),
        w_p_norm=wnorm,
        p_range=p_ellipticity_range(A),
    )
