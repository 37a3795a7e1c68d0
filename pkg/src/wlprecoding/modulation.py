"""PAM / square-QAM constellations, detection and AWGN mutual information.

Symbol indices are 1-based, ``l = 1..L``, with ``l = 1`` the most negative
amplitude.  A PAM point is ``(2l - 1 - L) d sqrt(Eg)``.  Square QAM of order
``L**2`` is the product of two ``L``-PAM axes; its index is
``(l_re - 1) * L + l_im``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import logsumexp, roots_hermite, erfc

from .errors import WrongKind, NonPositiveGain, ZeroGain

__all__ = ['Constellation', 'pam_points', 'qam_points', 'wl_pam_detect',
           'qam_detect', 'mi_pam_awgn', 'mi_qam_awgn', 'mutual_information',
           'ser_pam_awgn', 'gray_code']

PAM = 'pam'
QAM = 'qam'

_GH_NODES = 96


@dataclass(frozen=True)
class Constellation:
    """Immutable constellation description.

    Parameters
    ----------
    kind : {'pam', 'qam'}
    order : int
        Total number of points. For QAM this is ``L**2`` with ``L`` a power
        of two.
    d : float
        Half of the spacing between adjacent points, before the pulse
        energy factor.
    Eg : float
        Pulse energy.
    """
    kind: str
    order: int
    d: float = 1.0
    Eg: float = 1.0

    def __post_init__(self):
        if self.kind not in (PAM, QAM):
            raise ValueError("unknown constellation kind {0!r}".format(self.kind))
        if int(self.order) != self.order or self.order < 2:
            raise ValueError("order must be an integer >= 2")
        if self.kind == QAM:
            L = math.isqrt(self.order)
            if L * L != self.order or L < 2 or L & (L - 1):
                raise ValueError("square QAM order must be L**2 with L a "
                                 "power of two, got {0}".format(self.order))
        if not (self.d > 0 and self.Eg > 0):
            raise ValueError("d and Eg must be positive")

    @classmethod
    def pam(cls, L, unit_power=True):
        """L-PAM, by default scaled to unit average power."""
        d = math.sqrt(3.0 / (L * L - 1)) if unit_power and L >= 2 else 1.0
        return cls(PAM, L, d, 1.0)

    @classmethod
    def qam(cls, order, unit_power=True):
        """Square QAM, by default scaled to unit average power."""
        L = math.isqrt(order)
        d = math.sqrt(1.5 / (L * L - 1)) if unit_power and L >= 2 else 1.0
        return cls(QAM, order, d, 1.0)

    @property
    def axis_order(self):
        """Number of amplitude levels per real axis."""
        return self.order if self.kind == PAM else math.isqrt(self.order)

    @property
    def half_spacing(self):
        """``d sqrt(Eg)``: half the distance between adjacent amplitudes."""
        return self.d * math.sqrt(self.Eg)

    @property
    def average_power(self):
        L = self.axis_order
        per_axis = (L * L - 1) / 3.0 * self.d ** 2 * self.Eg
        return per_axis if self.kind == PAM else 2.0 * per_axis

    @property
    def bits_per_symbol(self):
        return math.log2(self.order)

    @property
    def is_real(self):
        return self.kind == PAM

    def axis(self):
        """The PAM constellation of one real axis."""
        if self.kind == PAM:
            return self
        return Constellation(PAM, self.axis_order, self.d, self.Eg)

    def points(self):
        return pam_points(self) if self.kind == PAM else qam_points(self)

    def symbols(self, indices):
        """Map 1-based indices to constellation points."""
        return self.points()[np.asarray(indices) - 1]

    def detect(self, y, gain):
        """Dispatch to :func:`wl_pam_detect` or :func:`qam_detect`."""
        if self.kind == PAM:
            return wl_pam_detect(np.real(y), np.real(gain), self)
        return qam_detect(y, gain, self)


def _levels(L, a):
    return (2.0 * np.arange(1, L + 1) - 1 - L) * a


def pam_points(c):
    """Sorted PAM amplitudes ``(2l - 1 - L) d sqrt(Eg)``, ``l = 1..L``."""
    if c.kind != PAM:
        raise WrongKind("pam_points needs a PAM constellation, got {0}".format(c.kind))
    return _levels(c.order, c.half_spacing)


def qam_points(c):
    """Square QAM points indexed as ``(l_re - 1) * L + l_im``."""
    if c.kind != QAM:
        raise WrongKind("qam_points needs a QAM constellation, got {0}".format(c.kind))
    lv = _levels(c.axis_order, c.half_spacing)
    return (lv[:, None] + 1j * lv[None, :]).ravel()


def gray_code(n_levels):
    """Binary reflected Gray labels for ``n_levels`` consecutive levels.

    QAM axes use these labels; PAM indices keep the natural labelling.  The
    simulator only counts symbol errors, so neither choice affects results.
    """
    i = np.arange(n_levels)
    return i ^ (i >> 1)


def _pam_region(z, L):
    # z is the received amplitude divided by gain and by d sqrt(Eg).
    # Decision boundaries sit at 2l - L, l = 1..L-1; a value on a boundary
    # is counted in the lower region (the "< y <=" bracketing).
    thresholds = 2.0 * np.arange(1, L) - L
    return np.searchsorted(thresholds, z, side='left') + 1


def wl_pam_detect(yR, gain, c):
    """Widely linear PAM decision on the real part of a received sample.

    Parameters
    ----------
    yR : float or numpy array
        Real part of the processed received signal.
    gain : float or numpy array
        Effective useful gain ``Re{w_k h_k u_k}``; broadcast against `yR`.
        Must be strictly positive.
    c : Constellation
        PAM constellation used by the transmitter.

    Returns
    -------
    int or numpy array of int
        1-based index of the detected amplitude.
    """
    if c.kind != PAM:
        raise WrongKind("wl_pam_detect needs a PAM constellation")
    gain = np.asarray(gain, dtype=float)
    if np.any(~(gain > 0)):
        raise NonPositiveGain("useful gain must be > 0, got {0}".format(gain))
    z = np.asarray(yR, dtype=float) / (gain * c.half_spacing)
    out = _pam_region(z, c.order)
    return int(out) if out.ndim == 0 else out


def qam_detect(y, gain, c):
    """Coherent square-QAM detection.

    The sample is de-rotated and scaled by ``1 / gain`` and each axis is
    sliced with the PAM thresholds of one axis.
    """
    if c.kind != QAM:
        raise WrongKind("qam_detect needs a QAM constellation")
    gain = np.asarray(gain, dtype=complex)
    if np.any(gain == 0):
        raise ZeroGain("QAM detection needs a nonzero complex gain")
    z = np.asarray(y, dtype=complex) / (gain * c.half_spacing)
    L = c.axis_order
    out = (_pam_region(z.real, L) - 1) * L + _pam_region(z.imag, L)
    return int(out) if out.ndim == 0 else out


def ser_pam_awgn(L, sinr):
    """Exact L-PAM symbol error rate on a real AWGN channel.

    ``sinr`` is average symbol energy over the variance of the real noise.
    """
    sinr = np.asarray(sinr, dtype=float)
    return (1.0 - 1.0 / L) * erfc(np.sqrt(1.5 * sinr / (L * L - 1)))


def _mi_real(levels, sinr, n_nodes):
    # Equiprobable inputs x_i over y = x + n, n ~ N(0, s2), E[x^2] = 1:
    #   I = log2 L - 1/L sum_i E_n log2 sum_j exp(-(D_ij^2 + 2 D_ij n) / (2 s2))
    sinr = np.atleast_1d(np.asarray(sinr, dtype=float)).ravel()
    if np.any(np.isnan(sinr)) or np.any(sinr < 0):
        raise ValueError("SINR must be nonnegative")
    L = len(levels)
    cap = math.log2(L)
    x = levels / np.sqrt(np.mean(levels ** 2))
    D = (x[:, None] - x[None, :])[:, :, None, None]
    t, w = roots_hermite(n_nodes)
    out = np.zeros(sinr.shape)
    out[np.isinf(sinr)] = cap
    live = (sinr > 0) & np.isfinite(sinr)
    if np.any(live):
        s2 = 1.0 / sinr[live]                        # (S,)
        n = np.sqrt(2.0 * s2)[None, :] * t[:, None]  # (nodes, S)
        expo = -(D ** 2 + 2.0 * D * n) / (2.0 * s2)  # (L, L, nodes, S)
        lse = logsumexp(expo, axis=1) / math.log(2.0)
        penalty = np.einsum('ins,n->s', lse, w) / (L * math.sqrt(math.pi))
        out[live] = np.clip(cap - penalty, 0.0, cap)
    return out


def mi_pam_awgn(c, sinr, n_nodes=_GH_NODES):
    """Mutual information of equiprobable PAM over real AWGN, in bits.

    Evaluated with Gauss-Hermite quadrature.  Interference is treated as
    additional Gaussian noise, so `sinr` is signal power over the total
    (interference plus noise) variance of the real part.
    """
    if c.kind != PAM:
        raise WrongKind("mi_pam_awgn needs a PAM constellation")
    out = _mi_real(pam_points(c), sinr, n_nodes)
    return float(out[0]) if np.ndim(sinr) == 0 else out.reshape(np.shape(sinr))


def mi_qam_awgn(c, sinr, n_nodes=_GH_NODES):
    """Square QAM over complex AWGN: two independent PAM axes at the same SINR."""
    if c.kind != QAM:
        raise WrongKind("mi_qam_awgn needs a QAM constellation")
    out = 2.0 * _mi_real(pam_points(c.axis()), sinr, n_nodes)
    return float(out[0]) if np.ndim(sinr) == 0 else out.reshape(np.shape(sinr))


def mutual_information(c, sinr):
    if c.kind == PAM:
        return mi_pam_awgn(c, sinr)
    return mi_qam_awgn(c, sinr)
