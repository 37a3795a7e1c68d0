"""Flat-fading MISO broadcast channel model with per-trial RNG substreams."""

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = ['ChannelSet', 'RngStream', 'draw_rayleigh_channel',
           'effective_channel', 'draw_noise', 'snr_db_to_noise_var']


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream identified by ``(seed, stream_id)``.

    Each Monte Carlo trial uses its own ``stream_id`` so that trials can be
    run in any order, or concurrently, with bit-identical results.
    """
    seed: int
    stream_id: int = 0

    def generator(self, *subkey):
        """A fresh Philox generator for this stream (and optional sub-key).

        Calling twice returns two generators producing the same draws.
        """
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,) + subkey)
        return np.random.Generator(np.random.Philox(ss))

    def child(self, stream_id):
        return RngStream(self.seed, stream_id)


def _as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class ChannelSet:
    """Channel rows, noise variances and receive filter coefficients.

    Attributes
    ----------
    H : 2D numpy array (K x M), complex
        Row ``k`` is the channel from the M transmit antennas to user k.
    noise_vars : 1D numpy array (K,)
        Variance of the circularly symmetric receiver noise of each user.
    rx_filters : 1D numpy array (K,), complex
        Scalar receive filters ``w_k`` (diagonal of ``W``).
    """
    H: np.ndarray
    noise_vars: np.ndarray = field(default=None)
    rx_filters: np.ndarray = field(default=None)

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=complex))
        K, M = H.shape
        if K < 1 or M < 1:
            raise ValueError("channel matrix must be at least 1 x 1")
        if not np.all(np.isfinite(H)):
            raise ValueError("channel matrix has non-finite entries")
        nv = np.ones(K) if self.noise_vars is None else self.noise_vars
        nv = np.broadcast_to(np.asarray(nv, dtype=float), (K,)).copy()
        w = np.ones(K) if self.rx_filters is None else self.rx_filters
        w = np.broadcast_to(np.asarray(w, dtype=complex), (K,)).copy()
        if np.any(~(nv > 0)):
            raise ValueError("noise variances must be strictly positive")
        if np.any(w == 0):
            raise ValueError("receive filter coefficients must be nonzero")
        for arr in (H, nv, w):
            arr.setflags(write=False)
        object.__setattr__(self, 'H', H)
        object.__setattr__(self, 'noise_vars', nv)
        object.__setattr__(self, 'rx_filters', w)

    @property
    def K(self):
        return self.H.shape[0]

    @property
    def M(self):
        return self.H.shape[1]

    @property
    def effective(self):
        """``H' = W H``."""
        return effective_channel(self)

    @property
    def processed_noise_vars(self):
        """Variance of ``w_k z_k``: ``sigma_z^2 |w_k|^2``."""
        return self.noise_vars * np.abs(self.rx_filters) ** 2

    def with_noise(self, noise_var):
        return replace(self, noise_vars=np.broadcast_to(noise_var, (self.K,)))

    def subset(self, users):
        users = np.asarray(users, dtype=int)
        return ChannelSet(self.H[users], self.noise_vars[users], self.rx_filters[users])


def snr_db_to_noise_var(snr_db, tau=1.0):
    """Noise variance for ``SNR_dB = 10 log10(tau / sigma_z^2)``."""
    return tau * 10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0)


def draw_rayleigh_channel(M, K, rng, noise_var=1.0, rx_filters=None):
    """I.i.d. CN(0, 1) channel entries.

    Parameters
    ----------
    M, K : int
        Transmit antennas and users.
    rng : RngStream, numpy Generator or seed
    noise_var : float or array, optional
        Noise variance(s) stored in the returned ChannelSet.
    rx_filters : array, optional
        Receive filter coefficients, default all ones.
    """
    if M < 1 or K < 1:
        raise ValueError("need M >= 1 and K >= 1")
    g = _as_generator(rng)
    H = (g.standard_normal((K, M)) + 1j * g.standard_normal((K, M))) / np.sqrt(2.0)
    return ChannelSet(H, noise_var, rx_filters)


def effective_channel(cs):
    """Scale row k of ``H`` by the receive filter ``w_k``."""
    return cs.rx_filters[:, None] * cs.H


def draw_noise(cs, n_symbols, rng):
    """Receiver noise samples, row k ~ CN(0, sigma_{z_k}^2), shape ``K x n``."""
    if n_symbols < 1:
        raise ValueError("n_symbols must be >= 1")
    g = _as_generator(rng)
    K = cs.K
    z = g.standard_normal((K, n_symbols)) + 1j * g.standard_normal((K, n_symbols))
    return z * np.sqrt(cs.noise_vars / 2.0)[:, None]
