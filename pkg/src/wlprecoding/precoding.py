"""Widely linear (WL) and linear multiuser transmit precoders.

All precoders return a complex ``M x K`` matrix ``U`` whose column ``k``
carries user k's symbol, ``x = U s``.  WL designs only constrain
``Re{H' U}``: the receivers of real-valued (PAM) data discard the imaginary
part of their filtered sample, which frees up to ``2M`` real degrees of
freedom.  Solutions computed in composite-real form are always mapped back
to complex ``U`` through :func:`~wlprecoding.numerics.t1_unstack`.

Linear baselines are the complex-domain analogues (same formulas without
the real-part operator).
"""

from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np

from .errors import NotPositiveDefinite, ZeroChannel, ZeroPrecoder
from .numerics import t1_unstack, t2_widen, spd_solve, rank1_gev_max, SPD_RTOL

__all__ = ['Precoder', 'PowerBudget', 'allocate_power', 'transmit_power',
           'mrt', 'wl_zf', 'zf', 'normalize_power', 'wl_mmse_regularized',
           'mmse', 'wl_mmse_dual_ascent', 'mmse_dual_ascent', 'wl_mslnr',
           'mslnr', 'linear_baseline', 'slnr', 'METHODS', 'build_precoder',
           'is_widely_linear']

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Precoder:
    """Precoding matrix with the symbol powers it was designed for.

    Attributes
    ----------
    U : 2D numpy array (M x K), complex
    symbol_powers : 1D numpy array (K,)
        Diagonal of the symbol covariance ``R_s``.
    method : str
        Name of the design, e.g. ``'wl_zf'``.
    diagnostics : dict
        Solver information (only filled by iterative designs).
    """
    U: np.ndarray
    symbol_powers: np.ndarray
    method: str
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def M(self):
        return self.U.shape[0]

    @property
    def K(self):
        return self.U.shape[1]

    @property
    def tx_power(self):
        """``Tr(U R_s U^H)``."""
        return transmit_power(self.U, self.symbol_powers)


@dataclass(frozen=True)
class PowerBudget:
    total: float
    per_user: np.ndarray

    @property
    def K(self):
        return len(self.per_user)


def allocate_power(tau, K, scheme='equal'):
    """Split the total transmit power ``tau`` among ``K`` users."""
    if scheme != 'equal':
        raise ValueError("only equal power allocation is supported")
    if not tau > 0 or K < 1:
        raise ValueError("need tau > 0 and K >= 1")
    return PowerBudget(float(tau), np.full(K, tau / K))


def transmit_power(U, symbol_powers):
    return float(np.sum(np.asarray(symbol_powers) * np.sum(np.abs(U) ** 2, axis=0)))


def _powers(powers, K):
    if powers is None:
        return np.ones(K)
    powers = np.broadcast_to(np.asarray(powers, dtype=float), (K,)).copy()
    if np.any(~(powers > 0)):
        raise ValueError("symbol powers must be positive")
    return powers


def _budget(pb, K):
    if isinstance(pb, PowerBudget):
        if pb.K != K:
            raise ValueError("power budget is for {0} users, channel has {1}".format(pb.K, K))
        return pb
    return allocate_power(pb, K)


def normalize_power(p, tau):
    """Scale ``U`` by ``sqrt(tau / Tr(U R_s U^H))``.

    After scaling the diagonal of ``Re{H' U}`` is in general no longer the
    design target; only the total power is fixed.
    """
    power = p.tx_power
    if not power > 0:
        raise ZeroPrecoder("cannot normalize a precoder with zero power")
    gamma = np.sqrt(tau / power)
    diag = dict(p.diagnostics)
    diag['scaling'] = diag.get('scaling', 1.0) * gamma
    return replace(p, U=gamma * p.U, diagnostics=diag)


# --- MRT --------------------------------------------------------------------

def mrt(cs, pb, powers=None):
    """Maximum ratio transmission, ``u_k = sqrt(tau_k)/sigma_k h'_k^H/|h'_k|``.

    MRT is the same for linear and widely linear receivers, so there is a
    single implementation.
    """
    Hp = cs.effective
    K = cs.K
    pb = _budget(pb, K)
    powers = _powers(powers, K)
    norms = np.linalg.norm(Hp, axis=1)
    if np.any(norms == 0):
        raise ZeroChannel("MRT undefined for an all-zero channel row")
    scale = np.sqrt(pb.per_user / powers) / norms
    return Precoder(Hp.conj().T * scale[None, :], powers, 'mrt')


# --- zero forcing -----------------------------------------------------------

def _targets(targets, K):
    if targets is None:
        return np.ones(K)
    targets = np.broadcast_to(np.asarray(targets, dtype=float), (K,))
    if np.any(targets < 0):
        raise ValueError("ZF targets sqrt(lambda_k) must be nonnegative")
    return targets


def wl_zf(cs, targets=None, powers=None):
    """WL zero forcing, ``U = H'^H [Re{H' H'^H}]^{-1} Lambda``.

    Forces ``Re{H' U} = Lambda`` exactly, which is possible for up to
    ``K = 2M`` users. The result is *not* power normalized; see
    :func:`normalize_power`.

    Raises
    ------
    NotPositiveDefinite
        If ``Re{H' H'^H}`` is singular (``K > 2M`` or degenerate channels).
    """
    Hp = cs.effective
    lam = np.diag(_targets(targets, cs.K))
    G = np.real(Hp @ Hp.conj().T)
    U = Hp.conj().T @ spd_solve(G, lam)
    return Precoder(U, _powers(powers, cs.K), 'wl_zf')


def zf(cs, targets=None, powers=None):
    """Linear zero forcing, ``U = H'^H (H' H'^H)^{-1} Lambda`` (needs K <= M)."""
    Hp = cs.effective
    lam = np.diag(_targets(targets, cs.K)).astype(complex)
    G = Hp @ Hp.conj().T
    U = Hp.conj().T @ spd_solve(G, lam)
    return Precoder(U, _powers(powers, cs.K), 'zf')


# --- MMSE -------------------------------------------------------------------

def _common_noise_var(cs):
    nv = cs.noise_vars
    if not np.allclose(nv, nv[0], rtol=1e-12, atol=0):
        raise ValueError("regularized MMSE assumes equal noise variances")
    return float(nv[0])


def wl_mmse_regularized(cs, tau, powers=None):
    """WL MMSE in regularized zero-forcing form.

    ``Ubar = Ht^T (Ht Ht^T + 1/(2 gamma) I)^{-1}`` with ``Ht = t2_widen(H')``
    and ``gamma = tau / (K sigma_z^2)``, rescaled to total power ``tau``.
    """
    Ht = t2_widen(cs.effective)
    K = cs.K
    reg = K * _common_noise_var(cs) / (2.0 * tau)
    Ubar = Ht.T @ spd_solve(Ht @ Ht.T + reg * np.eye(K), np.eye(K))
    p = Precoder(t1_unstack(Ubar), _powers(powers, K), 'wl_mmse',
                 {'regularization': reg})
    return normalize_power(p, tau)


def mmse(cs, tau, powers=None, regularization=None):
    """Linear regularized channel inversion ``H'^H (H' H'^H + a I)^{-1}``.

    By default ``a = K sigma_z^2 / (2 tau)``, the same loading as the WL
    version. QAM links use ``a = K sigma_z^2 / tau`` (pass it explicitly).
    The output is rescaled to total power ``tau``.
    """
    Hp = cs.effective
    K = cs.K
    if regularization is None:
        regularization = K * _common_noise_var(cs) / (2.0 * tau)
    G = Hp @ Hp.conj().T + regularization * np.eye(K)
    U = Hp.conj().T @ spd_solve(G, np.eye(K, dtype=complex))
    p = Precoder(U, _powers(powers, K), 'mmse', {'regularization': regularization})
    return normalize_power(p, tau)


def _dual_ascent(A, powers, tau, mu0, step0, max_iters, tol, best_of, kkt_tol=1e-7):
    """Dual ascent on the power multiplier for ``U(mu) = A^H (A A^H + mu I)^{-1}``.

    ``A`` is the widened real channel (WL) or the complex channel (linear).
    With ``A A^H = V diag(lam) V^H`` every quantity the iteration needs is a
    scalar function of ``mu``::

        power(mu)           = sum_i c_i lam_i / (lam_i + mu)^2
        |U(m1) - U(m2)|_F^2 = sum_i lam_i (1/(lam_i + m1) - 1/(lam_i + m2))^2

    with ``c_i = sum_k r_k |V_ki|^2``.  The matrix is only formed at the end.
    """
    K = A.shape[0]
    G = A @ A.conj().T
    lam, V = np.linalg.eigh(G)
    if lam[0] <= SPD_RTOL * lam[-1]:
        raise NotPositiveDefinite("channel Gram matrix is rank deficient; "
                                  "dual ascent needs linearly independent users")
    c = (np.abs(V) ** 2).T @ powers
    # the loop runs on K <= 2M scalars; plain floats beat numpy here
    pairs = list(zip(lam.tolist(), c.tolist()))

    def power(mu):
        return sum(ci * li / ((li + mu) * (li + mu)) for li, ci in pairs)

    def kkt_residual(mu, p):
        return max(p - tau, 0.0) + abs(mu * (p - tau))

    mu = float(mu0)
    p_mu = power(mu)
    best = (kkt_residual(mu, p_mu), mu)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        step = step0 / (1.0 + (it - 1) / 100.0)
        mu_next = max(mu + step * (p_mu - tau), 0.0)
        diff = math.sqrt(sum(li * (1.0 / (li + mu_next) - 1.0 / (li + mu)) ** 2
                             for li, _ in pairs))
        mu = mu_next
        p_mu = power(mu)
        res = kkt_residual(mu, p_mu)
        if res < best[0]:
            best = (res, mu)
        # a small step alone can stall short of the KKT point; require both
        if diff < tol and res < kkt_tol:
            converged = True
            break
    if not converged and best_of:
        mu = best[1]
        p_mu = power(mu)
        logger.debug("dual ascent did not converge in %d iterations", max_iters)
    U = A.conj().T @ (V @ ((1.0 / (lam + mu))[:, None] * V.conj().T))
    diag = {'mu': mu, 'iterations': it, 'converged': converged,
            'power': p_mu, 'slackness': mu * (p_mu - tau)}
    return U, diag


def wl_mmse_dual_ascent(cs, tau, powers=None, mu0=None, step0=None,
                        max_iters=5000, tol=1e-8):
    """WL MMSE precoder by dual ascent on the transmit power multiplier.

    Alternates ``Ubar = Ht^T (Ht Ht^T + mu I)^{-1}`` with the projected
    gradient step ``mu <- [mu + delta_l (Tr(Ubar R_s Ubar^T) - tau)]^+`` and
    the diminishing step ``delta_l = step0 / (1 + l/100)``.

    Parameters
    ----------
    cs : ChannelSet
    tau : float
        Transmit power constraint (an inequality; it may be inactive).
    powers : array, optional
        Symbol powers, default ones.
    mu0 : float, optional
        Initial multiplier, default ``K sigma_z^2 / (2 tau)``.
    step0 : float, optional
        Initial step, default ``0.1 / tau``.
    max_iters : int
    tol : float
        Stop when successive iterates differ by less than `tol` (Frobenius)
        and the KKT residual ``max(P - tau, 0) + |mu (P - tau)|`` is below
        ``1e-7``.

    Returns
    -------
    Precoder
        ``diagnostics`` holds ``mu``, ``iterations``, ``converged``,
        ``power`` and ``slackness`` (``mu * (power - tau)``).  Without
        convergence the iterate with the smallest KKT residual is returned
        and ``converged`` is False.
    """
    K = cs.K
    powers = _powers(powers, K)
    if mu0 is None:
        mu0 = K * float(np.mean(cs.processed_noise_vars)) / (2.0 * tau)
    if step0 is None:
        step0 = 0.1 / tau
    Ht = t2_widen(cs.effective)
    Ubar, diag = _dual_ascent(Ht, powers, tau, mu0, step0, max_iters, tol, True)
    return Precoder(t1_unstack(Ubar), powers, 'wl_mmse_iter', diag)


def mmse_dual_ascent(cs, tau, powers=None, mu0=None, step0=None,
                     max_iters=5000, tol=1e-8):
    """Complex-domain counterpart of :func:`wl_mmse_dual_ascent` (K <= M)."""
    K = cs.K
    powers = _powers(powers, K)
    if mu0 is None:
        mu0 = K * float(np.mean(cs.processed_noise_vars)) / (2.0 * tau)
    if step0 is None:
        step0 = 0.1 / tau
    U, diag = _dual_ascent(cs.effective, powers, tau, mu0, step0, max_iters, tol, True)
    return Precoder(U, powers, 'mmse_iter', diag)


# --- SLNR -------------------------------------------------------------------

def slnr(cs, U, k, symbol_power=1.0, widely_linear=True):
    """Signal to leakage and noise ratio of user ``k`` for precoder column ``U[:, k]``.

    The WL version counts only real parts of the desired and leaked
    amplitudes and half the noise variance.
    """
    Hp = cs.effective
    u = U[:, k] if np.ndim(U) == 2 else np.asarray(U)
    amp = Hp @ u
    others = np.arange(cs.K) != k
    nz = cs.processed_noise_vars[k]
    if widely_linear:
        return (symbol_power * amp[k].real ** 2
                / (symbol_power * np.sum(amp[others].real ** 2) + nz / 2.0))
    return (symbol_power * abs(amp[k]) ** 2
            / (symbol_power * np.sum(np.abs(amp[others]) ** 2) + nz))


def wl_mslnr(cs, pb, powers=None):
    """WL maximum SLNR precoder.

    For each user the composite-real direction maximizes
    ``(h_k u)^2 / (u^T Q_k u)`` with
    ``Q_k = Ht_{-k}^T Ht_{-k} + sigma_{z'_k}^2 / (2 tau_k) I_{2M}``; the
    vector is scaled to per-user power ``tau_k``.
    """
    K, M = cs.K, cs.M
    pb = _budget(pb, K)
    powers = _powers(powers, K)
    Ht = t2_widen(cs.effective)
    nz = cs.processed_noise_vars
    Ubar = np.empty((2 * M, K))
    eye = np.eye(2 * M)
    for k in range(K):
        rest = np.delete(Ht, k, axis=0)
        Q = rest.T @ rest + nz[k] / (2.0 * pb.per_user[k]) * eye
        Ubar[:, k] = np.sqrt(pb.per_user[k] / powers[k]) * rank1_gev_max(Ht[k], Q)
    return Precoder(t1_unstack(Ubar), powers, 'wl_mslnr')


def mslnr(cs, pb, powers=None):
    """Linear maximum SLNR precoder (complex Rayleigh quotient)."""
    K, M = cs.K, cs.M
    pb = _budget(pb, K)
    powers = _powers(powers, K)
    Hp = cs.effective
    nz = cs.processed_noise_vars
    U = np.empty((M, K), dtype=complex)
    eye = np.eye(M)
    for k in range(K):
        rest = np.delete(Hp, k, axis=0)
        Q = rest.conj().T @ rest + nz[k] / pb.per_user[k] * eye
        U[:, k] = np.sqrt(pb.per_user[k] / powers[k]) * rank1_gev_max(Hp[k], Q)
    return Precoder(U, powers, 'mslnr')


# --- dispatch ---------------------------------------------------------------

def linear_baseline(method, cs, tau, powers=None, **kwargs):
    """Linear counterpart of a WL design: ``'ZF'``, ``'MMSE'``, ``'MMSE_iter'``
    or ``'MSLNR'``.  ZF is returned power normalized to ``tau``."""
    key = method.lower()
    if key == 'zf':
        return normalize_power(zf(cs, kwargs.get('targets'), powers), tau)
    if key == 'mmse':
        return mmse(cs, tau, powers, kwargs.get('regularization'))
    if key == 'mmse_iter':
        return mmse_dual_ascent(cs, tau, powers, **kwargs)
    if key == 'mslnr':
        return mslnr(cs, tau, powers)
    raise ValueError("unknown linear baseline {0!r}".format(method))


def _wl_zf_normalized(cs, tau, powers):
    return normalize_power(wl_zf(cs, None, powers), tau)


def _zf_normalized(cs, tau, powers):
    return normalize_power(zf(cs, None, powers), tau)


# name -> (builder(cs, tau, powers), widely linear?, max users per antenna)
METHODS = {
    'mrt': (lambda cs, tau, powers: mrt(cs, tau, powers), False, None),
    'zf': (_zf_normalized, False, 1),
    'mmse': (lambda cs, tau, powers: mmse(cs, tau, powers), False, 1),
    'mmse_iter': (lambda cs, tau, powers: mmse_dual_ascent(cs, tau, powers), False, 1),
    'mslnr': (lambda cs, tau, powers: mslnr(cs, tau, powers), False, None),
    'wl_mrt': (lambda cs, tau, powers: mrt(cs, tau, powers), True, None),
    'wl_zf': (_wl_zf_normalized, True, 2),
    'wl_mmse': (lambda cs, tau, powers: wl_mmse_regularized(cs, tau, powers), True, 2),
    'wl_mmse_iter': (lambda cs, tau, powers: wl_mmse_dual_ascent(cs, tau, powers), True, 2),
    'wl_mslnr': (lambda cs, tau, powers: wl_mslnr(cs, tau, powers), True, None),
}


def is_widely_linear(method):
    return METHODS[method][1]


def build_precoder(method, cs, tau, powers=None):
    """Construct the precoder registered under ``method`` at total power ``tau``."""
    try:
        builder = METHODS[method][0]
    except KeyError:
        raise ValueError("unknown precoding method {0!r}; choose from {1}".format(
            method, sorted(METHODS))) from None
    return builder(cs, tau, powers)
