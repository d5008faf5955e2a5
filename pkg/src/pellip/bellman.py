"""Power functions, generalized Hessian forms and the two-variable
Bellman function Q_{p,delta}.

The central object is the quadratic pairing of a real 4x4 Hessian
(in the coordinates (Re zeta, Im zeta, Re eta, Im eta)) against the
block real forms of two coefficient matrices A and B.  Convexity of
Q in this generalized sense is what drives the heat-flow estimates;
``convexity_verify`` searches for the minimal normalized value of the
form and compares it with the proven lower bound.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.optimize

from .ellipticity import accretivity_bounds, delta_p, delta_r_extended
from .realform import realify, rotation_form, sym_part, vectorize

__all__ = [
    "BellmanParams",
    "hess_power",
    "hess_form_power",
    "delta_from_hessian",
    "bellman_value",
    "bellman_gradient",
    "hessian_q",
    "hessian_fd",
    "bellman_hessian_form",
    "tensor_hessian_form",
    "tensor_hessian_direct",
    "delta_choice",
    "inf_hyperbola",
    "convexity_verify",
    "violation_search",
]

_BRANCH_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class BellmanParams:
    """Exponent pair and perturbation size defining Q_{p,delta}."""

    p: float
    delta: float

    def __post_init__(self):
        if not self.p >= 2:
            raise ValueError("exponent p must satisfy p >= 2")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1)

    @property
    def phat(self) -> float:
        return 1.0 - 2.0 / self.p


# ---------------------------------------------------------------------------
# power functions |zeta|^r


def hess_power(r: float, zeta) -> np.ndarray:
    """Real 2x2 Hessian of |zeta|^r at zeta != 0:
    (r^2/2) |zeta|^{r-2} (I + (1 - 2/r) K(2 arg zeta)).

    Broadcasts over arrays of zeta.
    """
    zeta = np.asarray(zeta, dtype=complex)
    if np.any(np.abs(zeta) == 0):
        raise ValueError("Hessian of a power function is singular at 0")
    rhat = 1.0 - 2.0 / r
    amp = (r * r / 2.0) * np.abs(zeta) ** (r - 2.0)
    K = rotation_form(2.0 * np.angle(zeta))
    return amp[..., None, None] * (np.eye(2) + rhat * K)


def hess_form_power(A: np.ndarray, r: float, zeta: complex, xi: np.ndarray,
                    method: str = "closed") -> float:
    """Generalized Hessian form of |zeta|^r against A at direction xi.

    'closed': (r^2/2)|zeta|^{r-2} Re(<A xi, xi> + (1-2/r) e^{-2i arg zeta}
    <A xi, conj xi>).  'assembly': pair the Kronecker-expanded 2x2 real
    Hessian with the real form of A.  The two must agree.
    """
    if zeta == 0:
        raise ValueError("zeta must be nonzero")
    A = np.asarray(A, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    if method == "closed":
        rhat = 1.0 - 2.0 / r
        Axi = A @ xi
        inner = np.sum(Axi * xi.conjugate())
        skew = np.sum(Axi * xi)
        phase = np.exp(-2j * np.angle(zeta))
        return float(
            (r * r / 2.0) * abs(zeta) ** (r - 2.0)
            * (inner + rhat * phase * skew).real
        )
    if method == "assembly":
        n = xi.shape[-1]
        H = np.kron(hess_power(r, zeta), np.eye(n))
        x = vectorize(xi)
        return float((realify(A) @ x) @ (H @ x))
    raise ValueError(f"unknown method {method!r}")


def delta_from_hessian(A: np.ndarray, p: float) -> float:
    """p-ellipticity constant recovered from the power-function Hessian.

    Writes A = U + iV and minimizes the quadratic form of the real block
    matrix [[U/q, -V/q], [V/p, U/p]] over the unit sphere (times 2); by
    exponent duality this equals :func:`pellip.ellipticity.delta_p`.
    """
    if not p > 1:
        raise ValueError("exponent p must satisfy p > 1")
    q = p / (p - 1)
    A = np.asarray(A, dtype=complex)
    U, V = A.real, A.imag
    blk = np.block([[U / q, -V / q], [V / p, U / p]])
    return 2.0 * float(np.linalg.eigvalsh(sym_part(blk))[0])


# ---------------------------------------------------------------------------
# the Bellman function Q_{p, delta}


def _branch_mask(params: BellmanParams, zeta, eta):
    """True where |zeta|^p >= |eta|^q (outer branch)."""
    return np.abs(zeta) ** params.p >= np.abs(eta) ** params.q


def on_singular_set(params: BellmanParams, zeta, eta,
                    tol: float = _BRANCH_TOL) -> bool:
    """True within ``tol`` of the set where Q is not twice differentiable:
    eta = 0 or |zeta|^p = |eta|^q."""
    az, ae = abs(zeta), abs(eta)
    if ae < tol:
        return True
    return abs(az ** params.p - ae ** params.q) < tol * max(1.0, az ** params.p)


def bellman_value(params: BellmanParams, zeta, eta):
    """Q_{p,delta}(zeta, eta); broadcasts over arrays."""
    p, q, d = params.p, params.q, params.delta
    zeta = np.asarray(zeta, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    zp = np.abs(zeta) ** p
    eq = np.abs(eta) ** q
    outer = (1.0 + (2.0 / p) * d) * zp + (1.0 + params.phat * d) * eq
    # inner branch: avoid 0^(2-q) warnings at eta = 0 (the branch is not
    # selected there, since |zeta|^p >= 0 = |eta|^q)
    ae = np.where(np.abs(eta) == 0, 1.0, np.abs(eta))
    inner = zp + eq + d * np.abs(zeta) ** 2 * ae ** (2.0 - q)
    out = np.where(_branch_mask(params, zeta, eta), outer, inner)
    return out if out.ndim else float(out)


def bellman_gradient(params: BellmanParams, zeta, eta):
    """Wirtinger derivatives (d/d conj zeta, d/d conj eta) of Q.

    Q is C^1, so the piecewise formulas agree across the interface; the
    gradient with respect to the real coordinates is twice these numbers
    (real and imaginary parts).  Broadcasts over arrays.
    """
    p, q, d = params.p, params.q, params.delta
    zeta = np.asarray(zeta, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    scalar = zeta.ndim == 0 and eta.ndim == 0
    zeta, eta = np.broadcast_arrays(np.atleast_1d(zeta), np.atleast_1d(eta))
    az, ae = np.abs(zeta), np.abs(eta)
    azs = np.where(az == 0, 1.0, az)  # safe base: the zeta factor kills it
    aes = np.where(ae == 0, 1.0, ae)
    outer = _branch_mask(params, zeta, eta)
    dz_out = (1.0 + (2.0 / p) * d) * (p / 2.0) * azs ** (p - 2.0) * zeta
    de_out = (1.0 + params.phat * d) * (q / 2.0) * aes ** (q - 2.0) * eta
    dz_in = (p / 2.0) * azs ** (p - 2.0) * zeta + d * zeta * aes ** (2.0 - q)
    de_in = (q / 2.0) * aes ** (q - 2.0) * eta \
        + d * az ** 2 * ((2.0 - q) / 2.0) * aes ** (-q) * eta
    dz = np.where(outer, dz_out, dz_in)
    de = np.where(outer, de_out, de_in)
    if scalar:
        return complex(dz[0]), complex(de[0])
    return dz, de


def hessian_q(params: BellmanParams, zeta, eta) -> np.ndarray:
    """Real 4x4 Hessian of Q in coordinates (Re z, Im z, Re e, Im e).

    Only defined off the singular set; broadcasts over arrays (the
    caller is responsible for keeping batched points off the set).
    """
    p, q, d = params.p, params.q, params.delta
    zeta = np.asarray(zeta, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    scalar = zeta.ndim == 0 and eta.ndim == 0
    zeta, eta = np.atleast_1d(zeta), np.atleast_1d(eta)
    zeta, eta = np.broadcast_arrays(zeta, eta)
    if scalar and on_singular_set(params, complex(zeta[0]), complex(eta[0])):
        raise ValueError("Hessian of Q undefined on the singular set")

    Hp = hess_power(p, zeta)
    Hq = hess_power(q, eta)
    H = np.zeros(zeta.shape + (4, 4))

    outer = _branch_mask(params, zeta, eta)
    co_z = np.where(outer, 1.0 + (2.0 / p) * d, 1.0)
    co_e = np.where(outer, 1.0 + params.phat * d, 1.0)
    H[..., :2, :2] = co_z[..., None, None] * Hp
    H[..., 2:, 2:] = co_e[..., None, None] * Hq

    inner = ~outer
    if np.any(inner):
        zi, ei = zeta[inner], eta[inner]
        ae = np.abs(ei)
        vz = np.stack([zi.real, zi.imag], axis=-1)
        ve = np.stack([ei.real, ei.imag], axis=-1)
        C = 2.0 * (2.0 - q) * ae[..., None, None] ** (-q) \
            * vz[..., :, None] * ve[..., None, :]
        H[..., :2, :2][inner] += d * 2.0 * ae[..., None, None] ** (2.0 - q) * np.eye(2)
        H[..., :2, 2:][inner] = d * C
        H[..., 2:, :2][inner] = d * np.swapaxes(C, -1, -2)
        if q != 2.0:  # at q = 2 the |eta|^{2-q} factor is constant
            H[..., 2:, 2:][inner] += d * np.abs(zi)[..., None, None] ** 2 \
                * hess_power(2.0 - q, ei)
    return H[0] if scalar else H


def hessian_fd(func, zeta: complex, eta: complex, step: float = 1e-5) -> np.ndarray:
    """Central finite-difference 4x4 Hessian of a scalar function of
    (zeta, eta) in the real coordinates (Re z, Im z, Re e, Im e)."""
    x0 = np.array([zeta.real, zeta.imag, eta.real, eta.imag])

    def f(x):
        return func(complex(x[0], x[1]), complex(x[2], x[3]))

    H = np.zeros((4, 4))
    for i in range(4):
        for j in range(i, 4):
            ei = np.eye(4)[i] * step
            ej = np.eye(4)[j] * step
            val = (f(x0 + ei + ej) - f(x0 + ei - ej)
                   - f(x0 - ei + ej) + f(x0 - ei - ej)) / (4 * step * step)
            H[i, j] = H[j, i] = val
    return H


# ---------------------------------------------------------------------------
# the generalized pairing against (A, B)


def _pair(H4: np.ndarray, MA: np.ndarray, MB: np.ndarray,
          w1: np.ndarray, w2: np.ndarray):
    """Pair a (batched) 4x4 Hessian with the real forms of (A, B).

    w1, w2 are (batched) real 2n-vectors; each 2x2 block H_ab of the
    Hessian expands to H_ab (x) I_n and is evaluated between the
    appropriate real-form images:
      sum over blocks <(H_ab (x) I) w_b, M_row w_a>.
    """
    n = MA.shape[-1] // 2
    u1, v1 = w1[..., :n], w1[..., n:]
    u2, v2 = w2[..., :n], w2[..., n:]
    # (H_ab (x) I_n) acting on a real 2n-vector (u, v):
    # rows are H[a0]*u + H[a1]*v componentwise in the 2x2 index.
    def kron_apply(Hblk, u, v):
        return np.concatenate(
            [Hblk[..., 0, 0, None] * u + Hblk[..., 0, 1, None] * v,
             Hblk[..., 1, 0, None] * u + Hblk[..., 1, 1, None] * v],
            axis=-1,
        )

    Aw1 = np.einsum("...ij,...j->...i", MA, w1)
    Bw2 = np.einsum("...ij,...j->...i", MB, w2)
    t11 = np.sum(kron_apply(H4[..., :2, :2], u1, v1) * Aw1, axis=-1)
    t12 = np.sum(kron_apply(H4[..., :2, 2:], u2, v2) * Aw1, axis=-1)
    t21 = np.sum(kron_apply(H4[..., 2:, :2], u1, v1) * Bw2, axis=-1)
    t22 = np.sum(kron_apply(H4[..., 2:, 2:], u2, v2) * Bw2, axis=-1)
    return t11 + t12 + t21 + t22


def bellman_hessian_form(params: BellmanParams, A: np.ndarray, B: np.ndarray,
                         v: tuple[complex, complex],
                         omega: tuple[np.ndarray, np.ndarray]) -> float:
    """Generalized Hessian form of Q at v = (zeta, eta) against (A, B)
    in the direction omega = (omega1, omega2).  Rejects points on the
    singular set."""
    zeta, eta = v
    if on_singular_set(params, zeta, eta):
        raise ValueError("point lies on the singular set of Q")
    H4 = hessian_q(params, zeta, eta)
    w1 = vectorize(np.atleast_1d(np.asarray(omega[0], dtype=complex)))
    w2 = vectorize(np.atleast_1d(np.asarray(omega[1], dtype=complex)))
    return float(_pair(H4, realify(A), realify(B), w1, w2))


# ---------------------------------------------------------------------------
# the tensor product |zeta|^2 |eta|^{2-q}


def _tensor_hessian_4x4(q: float, zeta, eta) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    ae = np.abs(eta)
    vz = np.stack([zeta.real, zeta.imag], axis=-1)
    ve = np.stack([eta.real, eta.imag], axis=-1)
    H = np.zeros(np.broadcast(zeta, eta).shape + (4, 4))
    H[..., :2, :2] = 2.0 * ae[..., None, None] ** (2.0 - q) * np.eye(2)
    C = 2.0 * (2.0 - q) * ae[..., None, None] ** (-q) \
        * vz[..., :, None] * ve[..., None, :]
    H[..., :2, 2:] = C
    H[..., 2:, :2] = np.swapaxes(C, -1, -2)
    H[..., 2:, 2:] = np.abs(zeta)[..., None, None] ** 2 * hess_power(2.0 - q, eta)
    return H


def tensor_hessian_form(A: np.ndarray, B: np.ndarray, q: float,
                        v: tuple[complex, complex],
                        omega: tuple[np.ndarray, np.ndarray]) -> float:
    """Closed three-term formula for the generalized Hessian form of the
    tensor product |zeta|^2 |eta|^{2-q} against (A, B).

    Requires 1 < q < 2, eta != 0 and |zeta| < |eta|^{q-1}.
    """
    if not 1 < q < 2:
        raise ValueError("q must lie in (1, 2)")
    zeta, eta = v
    if eta == 0 or not abs(zeta) < abs(eta) ** (q - 1.0):
        raise ValueError("requires eta != 0 and |zeta| < |eta|^(q-1)")
    o1 = np.atleast_1d(np.asarray(omega[0], dtype=complex))
    o2 = np.atleast_1d(np.asarray(omega[1], dtype=complex))
    ae = abs(eta)
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)

    term1 = ae ** (2.0 - q) * hess_form_power(A, 2.0, 1.0 if zeta == 0 else zeta, o1)
    term2 = abs(zeta) ** 2 * hess_form_power(B, 2.0 - q, eta, o2) if zeta != 0 else 0.0
    vz, ve = vectorize(np.atleast_1d(zeta)), vectorize(np.atleast_1d(eta))
    w1, w2 = vectorize(o1), vectorize(o2)
    MA, MB = realify(A), realify(B)
    n = o1.shape[-1]
    # <((V(z) V(e)^T) (x) I) V(o2), M(A) V(o1)> and its mirror
    cross1 = float((MA @ w1) @ np.kron(np.outer(vz, ve), np.eye(n)) @ w2)
    cross2 = float((MB @ w2) @ np.kron(np.outer(ve, vz), np.eye(n)) @ w1)
    term3 = 2.0 * (2.0 - q) * ae ** (-q) * (cross1 + cross2)
    return float(term1 + term2 + term3)


def tensor_hessian_direct(A, B, q, v, omega) -> float:
    """Same quantity via direct assembly of the 4x4 real Hessian of the
    tensor product; the independent cross-check for the closed formula."""
    zeta, eta = v
    if eta == 0:
        raise ValueError("eta must be nonzero")
    H4 = _tensor_hessian_4x4(q, zeta, eta)
    w1 = vectorize(np.atleast_1d(np.asarray(omega[0], dtype=complex)))
    w2 = vectorize(np.atleast_1d(np.asarray(omega[1], dtype=complex)))
    return float(_pair(H4, realify(np.asarray(A, dtype=complex)),
                       realify(np.asarray(B, dtype=complex)), w1, w2))


def tensor_lower_bound(A, B, q, v, omega) -> float:
    """Proven lower bound for the tensor Hessian form:
    2 lam_A |eta|^{2-q} |o1|^2 - 4(2-q) Lam |o1||o2|
    + ((2-q)^2/2) delta_{2-q}(B) |eta|^{q-2} |o2|^2."""
    zeta, eta = v
    lamA, LamA, _ = accretivity_bounds(np.asarray(A, dtype=complex))
    _, LamB, _ = accretivity_bounds(np.asarray(B, dtype=complex))
    Lam = max(LamA, LamB)
    d2q = delta_r_extended(np.asarray(B, dtype=complex), 2.0 - q)
    n1 = np.linalg.norm(omega[0])
    n2 = np.linalg.norm(omega[1])
    ae = abs(eta)
    return (2.0 * lamA * ae ** (2.0 - q) * n1 * n1
            - 4.0 * (2.0 - q) * Lam * n1 * n2
            + ((2.0 - q) ** 2 / 2.0) * d2q * ae ** (q - 2.0) * n2 * n2)


# ---------------------------------------------------------------------------
# the convexity verification machinery


def delta_choice(lam: float, Lam: float, delta_q_B: float) -> float:
    """Perturbation size delta = lam * delta_q(B) / (10 Lam^2)."""
    if lam <= 0 or Lam <= 0 or delta_q_B <= 0:
        raise ValueError("all inputs must be positive")
    return lam * delta_q_B / (10.0 * Lam * Lam)


def inf_hyperbola(a: float, b: float, c: float) -> float:
    """inf over X > 0 of aX - b + c/X; -inf when a < 0 or c < 0."""
    if a < 0 or c < 0:
        return -math.inf
    return 2.0 * math.sqrt(a * c) - b


def _sample_points(params: BellmanParams, rng, m: int):
    """Batched off-singular-set points and unit directions."""
    p, q = params.p, params.q
    # radii around the branch interface; log-uniform keeps both branches
    # and a range of scales represented
    log_r = rng.uniform(-1.5, 1.5, size=(2, m))
    zeta = 10.0 ** log_r[0] * np.exp(1j * rng.uniform(0, 2 * np.pi, m))
    eta = 10.0 ** log_r[1] * np.exp(1j * rng.uniform(0, 2 * np.pi, m))
    gap = np.abs(np.abs(zeta) ** p - np.abs(eta) ** q)
    keep = (gap > 1e-9 * np.maximum(1.0, np.abs(zeta) ** p)) & (np.abs(eta) > 1e-9)
    return zeta[keep], eta[keep]


def _unit_directions(rng, m: int, n: int) -> np.ndarray:
    w = rng.standard_normal((m, 2 * n))
    return w / np.linalg.norm(w, axis=-1, keepdims=True)


def convexity_verify(params: BellmanParams, A: np.ndarray, B: np.ndarray,
                     budget: int = 10_000, rng=None, refine: int = 6,
                     tol: float = 1e-8) -> dict:
    """Search for the minimum of H_Q^{(A,B)}[v; omega] / (|o1||o2|) over
    off-singular-set points v and unit directions, and compare with the
    proven lower bound (delta_p / 5)(lam / Lam).

    Refuses when the joint ellipticity constant min(delta_p(A),
    delta_p(B)) is not positive; use :func:`violation_search` there.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    dp = min(delta_p(A, params.p), delta_p(B, params.p))
    if not dp > 0:
        raise ValueError("joint p-ellipticity constant is not positive")
    lamA, LamA, _ = accretivity_bounds(A)
    lamB, LamB, _ = accretivity_bounds(B)
    lam, Lam = min(lamA, lamB), max(LamA, LamB)
    bound = dp / 5.0 * lam / Lam
    rng = np.random.default_rng(rng)
    n = A.shape[-1]
    MA, MB = realify(A), realify(B)

    zeta, eta = _sample_points(params, rng, budget)
    m = zeta.shape[0]
    w1 = _unit_directions(rng, m, n)
    w2 = _unit_directions(rng, m, n)
    H4 = hessian_q(params, zeta, eta)
    vals = _pair(H4, MA, MB, w1, w2)

    order = np.argsort(vals)
    best_val = float(vals[order[0]])
    best_x = None

    def objective(x):
        z = complex(x[0], x[1])
        e = complex(x[2], x[3])
        if on_singular_set(params, z, e, tol=1e-9):
            return math.inf
        u1 = x[4:4 + 2 * n]
        u2 = x[4 + 2 * n:]
        n1, n2 = np.linalg.norm(u1), np.linalg.norm(u2)
        if n1 < 1e-12 or n2 < 1e-12:
            return math.inf
        H4 = hessian_q(params, z, e)
        return float(_pair(H4, MA, MB, u1 / n1, u2 / n2))

    for idx in order[:refine]:
        x0 = np.concatenate([
            [zeta[idx].real, zeta[idx].imag, eta[idx].real, eta[idx].imag],
            w1[idx], w2[idx],
        ])
        res = scipy.optimize.minimize(
            objective, x0, method="Nelder-Mead",
            options={"maxiter": 400, "xatol": 1e-8, "fatol": 1e-10},
        )
        if res.fun < best_val:
            best_val = float(res.fun)
            best_x = res.x
    if best_x is None:
        idx = order[0]
        best_x = np.concatenate([
            [zeta[idx].real, zeta[idx].imag, eta[idx].real, eta[idx].imag],
            w1[idx], w2[idx],
        ])
    witness = {
        "zeta": complex(best_x[0], best_x[1]),
        "eta": complex(best_x[2], best_x[3]),
        "omega1": best_x[4:4 + 2 * n][:n] + 1j * best_x[4:4 + 2 * n][n:],
        "omega2": best_x[4 + 2 * n:][:n] + 1j * best_x[4 + 2 * n:][n:],
    }
    return {
        "min_ratio": best_val,
        "bound": bound,
        "witness": witness,
        "pass": best_val >= bound - tol,
    }


def violation_search(params: BellmanParams, A: np.ndarray, B: np.ndarray) -> dict:
    """Construct a point where the branch-restricted Hessian form of Q is
    negative, available whenever delta_p(A) < 0.

    Takes omega2 = 0 and zeta = 1 in the outer branch, so the form reduces
    to a positive multiple of the power-function Hessian form, whose
    sphere minimum is (p^2/2) delta_p(A).
    """
    A = np.asarray(A, dtype=complex)
    p, q = params.p, params.q
    if not delta_p(A, p) < 0:
        raise ValueError("no violation to construct: delta_p(A) >= 0")
    n = A.shape[-1]
    U, V = A.real, A.imag
    blk = np.block([[U / q, -V / q], [V / p, U / p]])
    vals, vecs = np.linalg.eigh(sym_part(blk))
    x = vecs[:, 0]
    xi = x[:n] + 1j * x[n:]
    v = (1.0 + 0.0j, 0.1 + 0.0j)  # outer branch: 1 >= 0.1^q
    value = bellman_hessian_form(params, A, B, v,
                                 (xi, np.zeros(n, dtype=complex)))
    return {"zeta": v[0], "eta": v[1], "omega1": xi,
            "omega2": np.zeros(n, dtype=complex), "value": float(value)}
