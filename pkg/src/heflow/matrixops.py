"""Pointwise algebra of Hermitian endomorphisms on lattice fields.

All functions are vectorized over leading axes: a "matrix field" is any
ndarray of shape (..., r, r) with r the bundle rank (1 to 4 supported).
Rank 2 gets closed-form Cayley-Hamilton paths for exp/log (the hot loop of
the heat flow); other ranks fall back to batched numpy eigensolvers.

Weighted inner product convention, fixed here once for the whole package:

    <A, B>_M = tr(A (M^-1 B^H M))        (B^H = conjugate transpose)

i.e. plain Frobenius in an M-orthonormal frame.  For M-self-adjoint A this
collapses to tr(A @ A) = sum of squared (real) eigenvalues, which is what
the fast norm helpers below exploit.  Norms of form-valued quantities carry
an extra metric factor handled by the callers (see bundle.py).

Everything here is pure and reentrant; fields may be processed per-node in
parallel with no shared mutable state.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "ConditioningError",
    "dagger",
    "hermitize",
    "mat_inv",
    "mat_det",
    "herm_eigvals",
    "herm_exp",
    "herm_log",
    "herm_funcm",
    "expm_general",
    "theta_transform",
    "sigma_distance",
    "traceless_part",
    "inner",
    "norm",
    "selfadjoint_norm_field",
]

MAX_RANK = 4

# Eigenvalue-gap threshold below which divided differences switch to series.
_THETA_SERIES_CUT = 1e-6


class ConditioningError(ValueError):
    """Raised when a positive-definite operation meets a near-singular input."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


def dagger(A):
    """Conjugate transpose on the trailing two axes."""
    return np.swapaxes(np.conjugate(A), -1, -2)


def hermitize(A):
    """Project onto the Hermitian part, (A + A^H)/2.

    Applied after eigendecomposition round trips to stop Hermiticity drift
    from accumulating over long flow runs.
    """
    return 0.5 * (A + dagger(A))


def _rank_of(A):
    r = A.shape[-1]
    if A.ndim < 2 or A.shape[-2] != r:
        raise ValueError(f"expected (..., r, r) matrix field, got shape {A.shape}")
    if r > MAX_RANK:
        raise ValueError(f"rank {r} not supported (cap is {MAX_RANK})")
    return r


def mat_inv(A):
    """Batched matrix inverse with a closed-form 2x2 path."""
    r = _rank_of(A)
    if r == 1:
        return 1.0 / A
    if r == 2:
        det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
        out = np.empty_like(A)
        out[..., 0, 0] = A[..., 1, 1]
        out[..., 1, 1] = A[..., 0, 0]
        out[..., 0, 1] = -A[..., 0, 1]
        out[..., 1, 0] = -A[..., 1, 0]
        return out / det[..., None, None]
    return np.linalg.inv(A)


def mat_det(A):
    """Batched determinant with a closed-form 2x2 path."""
    r = _rank_of(A)
    if r == 1:
        return A[..., 0, 0]
    if r == 2:
        return A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    return np.linalg.det(A)


def _eig2_herm(A):
    """Eigenvalues (lo, hi) of Hermitian 2x2 fields, closed form."""
    a = A[..., 0, 0].real
    d = A[..., 1, 1].real
    b = A[..., 0, 1]
    m = 0.5 * (a + d)
    s = np.sqrt(np.maximum(0.25 * (a - d) ** 2 + (b * b.conj()).real, 0.0))
    return m - s, m + s


def herm_eigvals(A):
    """Ascending eigenvalues of a Hermitian matrix field, shape (..., r)."""
    r = _rank_of(A)
    if r == 1:
        return A[..., 0, 0].real[..., None]
    if r == 2:
        lo, hi = _eig2_herm(A)
        return np.stack([lo, hi], axis=-1)
    return np.linalg.eigvalsh(A)


def _sinhc(s):
    # sinh(s)/s, stable through s = 0; s may be complex (Cayley-Hamilton path).
    small = np.abs(s) < 1e-5
    safe = np.where(small, 1.0, s)
    out = np.sinh(safe) / safe
    series = 1.0 + s * s / 6.0 + (s * s) ** 2 / 120.0
    return np.where(small, series, out)


def herm_exp(A):
    """Exponential of a Hermitian matrix field (result Hermitian positive)."""
    r = _rank_of(A)
    if r == 1:
        return np.exp(A)
    if r == 2:
        return hermitize(expm_general(A))
    w, V = np.linalg.eigh(A)
    return hermitize(V @ (np.exp(w)[..., None] * dagger(V)))


def expm_general(A):
    """Exponential of any 2x2 field via Cayley-Hamilton; eigh route otherwise.

    Only guaranteed for matrices with a convergent spectral calculus along
    the flow (H-self-adjoint operators, hence real spectrum); complex
    intermediate s keeps the formula valid unconditionally.
    """
    r = _rank_of(A)
    if r == 1:
        return np.exp(A)
    if r == 2:
        m = 0.5 * (A[..., 0, 0] + A[..., 1, 1])
        det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
        s = np.sqrt((m * m - det).astype(np.complex128))
        phi0 = np.exp(m) * np.cosh(s)
        phi1 = np.exp(m) * _sinhc(s)
        eye = np.eye(2, dtype=A.dtype)
        return phi0[..., None, None] * eye + phi1[..., None, None] * (
            A - m[..., None, None] * eye
        )
    # Dense fallback: scaling-and-squaring is overkill at rank <= 4 when the
    # callers only ever pass self-adjoint operators; diagonalize instead.
    w, V = np.linalg.eig(A)
    return V @ (np.exp(w)[..., None] * np.linalg.inv(V))


def herm_log(A, cond_tol=1e-14):
    """Hermitian logarithm of a positive-definite Hermitian matrix field.

    Rejects inputs whose smallest eigenvalue falls below cond_tol times the
    largest (per node), raising ConditioningError with the offending value.
    """
    r = _rank_of(A)
    if r == 1:
        vals = A[..., 0, 0].real
        _check_conditioning(vals[..., None], cond_tol)
        return np.log(vals)[..., None, None].astype(A.dtype)
    if r == 2:
        lo, hi = _eig2_herm(A)
        _check_conditioning(np.stack([lo, hi], axis=-1), cond_tol)
        m = 0.5 * (lo + hi)
        s = 0.5 * (hi - lo)
        phi0 = 0.5 * (np.log(hi) + np.log(lo))
        t = s / m
        small = t < 1e-7
        t_safe = np.where(small, 0.5, t)
        phi1 = np.where(
            small,
            (1.0 + t * t / 3.0) / m,
            np.arctanh(np.minimum(t_safe, 1.0 - 1e-16)) / (m * t_safe),
        )
        eye = np.eye(2, dtype=A.dtype)
        out = phi0[..., None, None] * eye + phi1[..., None, None] * (
            A - m[..., None, None] * eye
        )
        return hermitize(out)
    w, V = np.linalg.eigh(A)
    _check_conditioning(w, cond_tol)
    return hermitize(V @ (np.log(w)[..., None] * dagger(V)))


def _check_conditioning(w, cond_tol):
    w_min = w.min()
    if w_min <= cond_tol * max(w.max(), 0.0):
        raise ConditioningError(
            f"matrix field not safely positive definite: min eigenvalue "
            f"{w_min:.3e} against max {w.max():.3e}",
            min_eigenvalue=float(w_min),
        )


def herm_funcm(A, f):
    """Apply a scalar function to a Hermitian matrix field spectrally."""
    r = _rank_of(A)
    if r == 1:
        return f(A[..., 0, 0].real)[..., None, None].astype(np.complex128)
    w, V = np.linalg.eigh(A)
    return hermitize(V @ (f(w)[..., None] * dagger(V)))


def _theta_kernel(x, y):
    """Theta(x, y) = (e^{y-x} - 1)/(y - x), entire along the diagonal."""
    t = y - x
    small = np.abs(t) < _THETA_SERIES_CUT
    t_safe = np.where(small, 1.0, t)
    out = np.expm1(t_safe) / t_safe
    series = 1.0 + t / 2.0 + t * t / 6.0 + t * t * t / 24.0
    return np.where(small, series, out)


def theta_transform(logh, A):
    """Scale A in the eigenbasis of logh by the kernel Theta.

    With logh = V diag(w) V^H, entry (a, b) of V^H A V is multiplied by
    Theta(w_a, w_b) -- row eigenvalue first -- and the result transformed
    back.  Theta(x, x) = 1, so logh = 0 acts as the identity on A.
    """
    r = _rank_of(A)
    if logh.shape[-2:] != (r, r):
        raise ValueError("logh and A must share the trailing matrix shape")
    if r == 1:
        return np.array(A, copy=True)
    w, V = np.linalg.eigh(logh)
    kernel = _theta_kernel(w[..., :, None], w[..., None, :])
    A_eig = dagger(V) @ A @ V
    return V @ (kernel * A_eig) @ dagger(V)


def sigma_distance(H, Ht):
    """Donaldson sigma-distance field tr(h~ + h~^-1) - 2r, h~ = H^-1 Ht.

    Nonnegative up to roundoff, zero exactly where the two metrics agree.
    Symmetric in its arguments.
    """
    r = _rank_of(H)
    if H.shape != Ht.shape:
        raise ValueError("metric fields must share shape")
    ht = mat_inv(H) @ Ht
    ht_inv = mat_inv(Ht) @ H
    tr = np.trace(ht, axis1=-2, axis2=-1) + np.trace(ht_inv, axis1=-2, axis2=-1)
    return tr.real - 2.0 * r


def traceless_part(A):
    """A minus its trace part, tr(A)/r * Id; idempotent."""
    r = _rank_of(A)
    tr = np.trace(A, axis1=-2, axis2=-1) / r
    return A - tr[..., None, None] * np.eye(r, dtype=A.dtype)


def inner(A, B, H=None):
    """Weighted Frobenius pairing <A, B>_H = tr(A H^-1 B^H H).

    H = None means the identity weight (plain Frobenius tr(A B^H)).  On
    H-self-adjoint arguments this equals tr(A @ B) and the norm is the
    l2 norm of the (real) eigenvalue vector.
    """
    if H is None:
        Bs = dagger(B)
    else:
        Bs = mat_inv(H) @ dagger(B) @ H
    return np.trace(A @ Bs, axis1=-2, axis2=-1)


def norm(A, H=None):
    """sqrt(<A, A>_H) >= 0, pointwise over leading axes."""
    val = inner(A, A, H).real
    return np.sqrt(np.maximum(val, 0.0))


def selfadjoint_norm_field(A):
    """|A| = sqrt(tr(A @ A)) for fields known to be self-adjoint w.r.t.
    whatever metric made them so; avoids forming adjoints in hot loops."""
    val = np.einsum("...ij,...ji->...", A, A).real
    return np.sqrt(np.maximum(val, 0.0))
