"""Semi-orthogonal user selection.

``susom`` is the variant for one-dimensional modulation: orthogonality is
measured by ``Re{h_k h_j^H}`` only, so up to ``2M`` channels can be mutually
orthogonal and up to ``2M`` users are scheduled. ``sus`` is the classical
complex version, limited to ``M`` users.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ZeroVector

__all__ = ['SelectionResult', 'susom', 'sus', 'channel_dist', 'select_users']


@dataclass(frozen=True)
class SelectionResult:
    """Users picked by a semi-orthogonal selection round.

    Attributes
    ----------
    selected : tuple of int
        User indices in the order they were picked.
    basis : 2D numpy array (n_selected x M)
        Orthogonalized channels ``e`` of the selected users, same order.
    alpha : float
        Pruning threshold used.
    method : str
        ``'susom'`` or ``'sus'``.
    """
    selected: tuple
    basis: np.ndarray
    alpha: float
    method: str

    def __len__(self):
        return len(self.selected)


def _inner(a, b, real):
    # a: (n x M), b: (M,) -> a b^H, optionally real part only
    ip = a @ np.conj(b)
    return ip.real if real else ip


def channel_dist(hj, e, mode='real'):
    """Normalized (real or complex) inner product magnitude.

    ``|Re{h_j e^H}| / (|h_j| |e|)`` in ``'real'`` mode and
    ``|h_j e^H| / (|h_j| |e|)`` in ``'complex'`` mode.  `hj` may be a stack
    of rows, in which case one value per row is returned.
    """
    if mode not in ('real', 'complex'):
        raise ValueError("mode must be 'real' or 'complex'")
    hj = np.asarray(hj, dtype=complex)
    e = np.asarray(e, dtype=complex).ravel()
    ne = np.linalg.norm(e)
    nh = np.linalg.norm(np.atleast_2d(hj), axis=1)
    if ne == 0 or np.any(nh == 0):
        raise ZeroVector("channel_dist is undefined for zero vectors")
    d = np.abs(_inner(np.atleast_2d(hj), e, mode == 'real')) / (nh * ne)
    # round-off may push a colinear pair just above 1
    d = np.minimum(d, 1.0)
    return float(d[0]) if hj.ndim == 1 else d


def _select(H, noise_std, alpha, max_users, real):
    K, M = H.shape
    available = np.arange(K)
    selected = []
    basis = []
    mode = 'real' if real else 'complex'
    while len(selected) < max_users and available.size:
        cand = H[available]
        # project the candidates off every stored basis vector
        for e in basis:
            cand = cand - np.outer(_inner(cand, e, real) / np.vdot(e, e).real, e)
        score = np.linalg.norm(cand, axis=1) / noise_std[available]
        best = int(np.argmax(score))  # first maximum -> lowest index on ties
        pick = available[best]
        e_new = cand[best]
        if not np.any(e_new):
            break
        selected.append(int(pick))
        basis.append(e_new)
        available = np.delete(available, best)
        if available.size:
            keep = channel_dist(H[available], e_new, mode) <= alpha
            available = available[np.atleast_1d(keep)]
    basis = np.array(basis) if basis else np.empty((0, M), dtype=complex)
    return tuple(selected), basis


def _check_alpha(alpha):
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1), got {0}".format(alpha))


def susom(cs, alpha=0.5):
    """Semi-orthogonal user selection for one-dimensional modulation.

    Parameters
    ----------
    cs : ChannelSet
        Channels of all ``K_T`` candidate users.
    alpha : float
        Candidates whose real correlation with the latest orthogonalized
        channel exceeds `alpha` are dropped.

    Returns
    -------
    SelectionResult
        At most ``2M`` users.
    """
    _check_alpha(alpha)
    sel, basis = _select(cs.H, np.sqrt(cs.noise_vars), alpha, 2 * cs.M, True)
    return SelectionResult(sel, basis, float(alpha), 'susom')


def sus(cs, alpha=0.5):
    """Classical semi-orthogonal user selection (complex orthogonality, at most M users)."""
    _check_alpha(alpha)
    sel, basis = _select(cs.H, np.sqrt(cs.noise_vars), alpha, cs.M, False)
    return SelectionResult(sel, basis, float(alpha), 'sus')


def select_users(method, cs, alpha):
    if method == 'susom':
        return susom(cs, alpha)
    if method == 'sus':
        return sus(cs, alpha)
    raise ValueError("unknown selection method {0!r}".format(method))
