"""Complex and composite-real linear algebra kernels.

Widely linear processing of real-valued (PAM) data only ever looks at the
real part of ``h u``.  Writing complex quantities in composite-real form turns
``Re{H' U}`` into an ordinary real matrix product::

    t1_stack(U)  = [Re U; Im U]          (2M x K)
    t2_widen(H') = [Re H', -Im H']       (K x 2M)
    t2_widen(H') @ t1_stack(U) == Re{H' U}

and ``Re{h_k h_j^H}`` into a real inner product of composite rows
``[Re h, Im h]``.  All precoders and the user selection algorithms are built
on these maps.
"""

import numpy as np
import scipy.linalg

from .errors import NotPositiveDefinite, ZeroVector

__all__ = ['t1_stack', 't1_unstack', 't2_widen', 'composite_row',
           'spd_solve', 'rank1_gev_max', 'rayleigh_quotient']

#: Relative pivot / symmetry tolerance for the SPD solver.
SPD_RTOL = 1e-10


def t1_stack(U):
    """Stack real and imaginary parts vertically, ``[Re U; Im U]``.

    Works on matrices (``M x K`` -> ``2M x K``) and on 1-D vectors
    (``M`` -> ``2M``).
    """
    U = np.asarray(U)
    return np.concatenate([U.real, U.imag], axis=0).astype(float)


def t1_unstack(Ubar):
    """Inverse of :func:`t1_stack`."""
    Ubar = np.asarray(Ubar, dtype=float)
    n = Ubar.shape[0]
    if n % 2:
        raise ValueError("composite-real array must have an even leading "
                         "dimension, got {0}".format(n))
    m = n // 2
    return Ubar[:m] + 1j * Ubar[m:]


def t2_widen(Hp):
    """Concatenate ``[Re Hp, -Im Hp]`` horizontally.

    ``t2_widen(Hp) @ t1_stack(U)`` equals ``Re{Hp @ U}``.
    """
    Hp = np.asarray(Hp)
    return np.concatenate([Hp.real, -Hp.imag], axis=-1).astype(float)


def composite_row(h):
    """Map a channel row to ``[Re h, Im h]``.

    The real inner product of two composite rows equals ``Re{h_k h_j^H}``,
    which is the notion of orthogonality relevant to one-dimensional
    signalling.  Accepts a single row or a ``K x M`` stack of rows.
    """
    h = np.asarray(h)
    return np.concatenate([h.real, h.imag], axis=-1).astype(float)


def _cholesky_checked(A):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix, got shape {0}".format(A.shape))
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    scale = np.max(np.abs(A))
    if scale == 0.0:
        raise NotPositiveDefinite("zero matrix is not positive definite")
    if np.max(np.abs(A - A.conj().T)) > SPD_RTOL * scale:
        raise ValueError("matrix is not symmetric/Hermitian within tolerance")
    try:
        c, lower = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    # cholesky can "succeed" on numerically singular Gram matrices with a
    # pivot at round-off level; treat those as rank deficient.
    pivots = np.abs(np.diag(c)) ** 2
    if pivots.min() <= SPD_RTOL * np.abs(np.diag(A)).max():
        raise NotPositiveDefinite(
            "smallest Cholesky pivot {0:.3e} below relative tolerance; "
            "matrix is numerically rank deficient".format(pivots.min()))
    return c, lower


def spd_solve(A, B):
    """Solve ``A X = B`` for symmetric (Hermitian) positive definite ``A``.

    Parameters
    ----------
    A : 2D numpy array
        Real symmetric or complex Hermitian positive definite matrix.
    B : 1D or 2D numpy array
        Right hand side(s).

    Returns
    -------
    X : numpy array
        Solution with the same shape as `B`.

    Raises
    ------
    NotPositiveDefinite
        If the Cholesky factorization fails or a pivot falls below
        ``SPD_RTOL`` times the largest diagonal entry of `A`.
    """
    factor = _cholesky_checked(A)
    return scipy.linalg.cho_solve(factor, np.asarray(B), check_finite=False)


def rayleigh_quotient(a, Q, v):
    """Generalized Rayleigh quotient ``|a v|^2 / (v^H Q v)``."""
    a = np.asarray(a).ravel()
    v = np.asarray(v).ravel()
    num = np.abs(a @ v) ** 2
    den = np.real(np.conj(v) @ (Q @ v))
    return num / den


def rank1_gev_max(a, Q):
    """Principal generalized eigenvector of the pencil ``(a^H a, Q)``.

    The numerator matrix has rank one, so the maximizer of
    ``|a v|^2 / (v^H Q v)`` is ``v ~ Q^{-1} a^H`` and no iterative
    eigensolver is needed.

    Parameters
    ----------
    a : 1D numpy array (length n)
        Row vector defining the rank-one numerator. May be complex.
    Q : 2D numpy array (n x n)
        Symmetric/Hermitian positive definite denominator matrix.

    Returns
    -------
    v : 1D numpy array
        Unit-norm maximizer, with phase chosen so that ``a @ v`` is real
        and nonnegative.
    """
    a = np.asarray(a).ravel()
    if not np.any(a):
        raise ZeroVector("rank1_gev_max needs a nonzero numerator vector")
    v = spd_solve(Q, np.conj(a))
    v = v / np.linalg.norm(v)
    # a Q^{-1} a^H > 0, so only round-off can leave a phase here.
    proj = a @ v
    if np.iscomplexobj(v):
        v = v * (np.conj(proj) / np.abs(proj))
    elif proj < 0:
        v = -v
    return v
