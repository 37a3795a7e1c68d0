"""Monte Carlo link-level engine for downlink precoding experiments.

Every channel realization ``c`` owns the random substream
``RngStream(seed, c)``; the channel, the symbols and a unit-variance noise
block are drawn from it once and reused across the whole SNR grid (common
random numbers), with the noise rescaled to each SNR point.  Results are
therefore independent of evaluation order and bit-identical per seed.

SNR is ``10 log10(tau / sigma_z^2)`` with unit average symbol power.
"""

from dataclasses import dataclass, field, asdict, fields
import logging
import math

import numpy as np

from .channel import (RngStream, draw_rayleigh_channel, draw_noise,
                      snr_db_to_noise_var)
from .errors import DimensionMismatch, NotPositiveDefinite
from .modulation import Constellation, ser_pam_awgn, mutual_information
from .precoding import METHODS, build_precoder, mmse, zf, normalize_power
from .selection import select_users

__all__ = ['ScenarioConfig', 'PointResult', 'SweepResult', 'transmit_block',
           'measure_sinr', 'run_sweep', 'run_ser_sweep', 'run_rate_sweep',
           'run_selection_census', 'DEFAULT_SNR_GRID']

logger = logging.getLogger(__name__)

DEFAULT_SNR_GRID = tuple(float(x) for x in range(0, 32, 2))

# sub-keys of a realization's stream
_CHANNEL, _SYMBOLS, _NOISE = 0, 1, 2


@dataclass
class ScenarioConfig:
    """One curve of an experiment.

    ``K`` is the number of served users, or the number of candidates
    ``K_T`` when ``selection`` is set.
    """
    M: int = 4
    K: int = 4
    modulation: str = 'pam'
    order: int = 4
    method: str = 'wl_mmse'
    selection: str = None
    alpha: float = 0.5
    snr_grid_db: tuple = DEFAULT_SNR_GRID
    n_channels: int = 1000
    n_symbols: int = 200
    tau: float = 1.0
    seed: int = 0
    label: str = None

    def __post_init__(self):
        self.snr_grid_db = tuple(float(x) for x in self.snr_grid_db)

    @property
    def name(self):
        if self.label:
            return self.label
        name = self.method
        if self.selection:
            name = '{0}+{1}'.format(self.selection, name)
        if self.modulation == 'qam':
            name = '{0}-qam'.format(name)
        return name

    def constellation(self):
        if self.modulation == 'pam':
            return Constellation.pam(self.order)
        if self.modulation == 'qam':
            return Constellation.qam(self.order)
        raise ValueError("modulation must be 'pam' or 'qam'")

    def to_dict(self):
        d = asdict(self)
        d['snr_grid_db'] = list(self.snr_grid_db)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise KeyError("unknown scenario field(s): {0}".format(sorted(unknown)))
        return cls(**d)


@dataclass
class PointResult:
    x_value: float
    avg_ser: float = math.nan
    avg_sum_rate: float = math.nan
    avg_selected_users: float = math.nan
    n_trials: int = 0
    n_failed: int = 0
    n_errors: int = 0
    n_detected: int = 0
    #: mean over realizations of the exact PAM SER at the measured SINR
    #: (exact when interference is nulled, e.g. WL ZF)
    ser_at_sinr: float = math.nan
    ser_at_sinr_std: float = math.nan
    user_errors: np.ndarray = field(default=None, repr=False)
    user_expected_errors: np.ndarray = field(default=None, repr=False)
    user_error_var: np.ndarray = field(default=None, repr=False)

    @property
    def ser_stderr(self):
        """Binomial standard error of ``avg_ser``."""
        if not self.n_detected:
            return math.nan
        p = self.avg_ser
        return math.sqrt(p * (1 - p) / self.n_detected)

    @property
    def failure_rate(self):
        total = self.n_trials + self.n_failed
        return self.n_failed / total if total else 0.0


@dataclass
class SweepResult:
    config: ScenarioConfig
    points: list

    @property
    def x_values(self):
        return np.array([p.x_value for p in self.points])

    @property
    def avg_ser(self):
        return np.array([p.avg_ser for p in self.points])

    @property
    def avg_sum_rate(self):
        return np.array([p.avg_sum_rate for p in self.points])

    @property
    def avg_selected_users(self):
        return np.array([p.avg_selected_users for p in self.points])

    @property
    def failure_rate(self):
        failed = sum(p.n_failed for p in self.points)
        total = sum(p.n_failed + p.n_trials for p in self.points)
        return failed / total if total else 0.0


def transmit_block(cs, p, symbols, noise, real_part=True):
    """Processed received samples ``y = W (H U s + z)``.

    Parameters
    ----------
    cs : ChannelSet
    p : Precoder
    symbols : numpy array (K x n)
        Transmitted symbols (real for PAM).
    noise : numpy array (K x n)
        Receiver noise ``z`` before the receive filter.
    real_part : bool
        Return ``Re{y}`` (what a WL PAM receiver uses) instead of ``y``.
    """
    symbols = np.atleast_2d(symbols)
    noise = np.atleast_2d(noise)
    K, M = cs.K, cs.M
    if p.U.shape != (M, K):
        raise DimensionMismatch("precoder is {0}, channel needs {1}".format(p.U.shape, (M, K)))
    if symbols.shape[0] != K or noise.shape != (K, symbols.shape[1]):
        raise DimensionMismatch("symbols {0} / noise {1} do not match K={2}".format(
            symbols.shape, noise.shape, K))
    y = cs.rx_filters[:, None] * (cs.H @ (p.U @ symbols) + noise)
    return y.real if real_part else y


def measure_sinr(cs, p, mode='real'):
    """Per-user SINR of the effective channel ``H' U``.

    In ``'real'`` mode (WL reception of PAM) only the real parts of the
    useful and interfering amplitudes count and the noise contributes
    ``sigma_{z'}^2 / 2``. In ``'complex'`` mode magnitudes and the full noise
    variance are used.
    """
    A = cs.effective @ p.U
    if mode == 'real':
        A = A.real
        noise = cs.processed_noise_vars / 2.0
    elif mode == 'complex':
        noise = cs.processed_noise_vars
    else:
        raise ValueError("mode must be 'real' or 'complex'")
    P = np.abs(A) ** 2 * p.symbol_powers[None, :]
    useful = np.diag(P).copy()
    interference = P.sum(axis=1) - useful
    return useful / (interference + noise)


def _precoder(cfg, cs):
    if cfg.modulation == 'qam':
        # complex symbols: only the linear designs apply
        if cfg.method == 'zf':
            return normalize_power(zf(cs), cfg.tau)
        if cfg.method == 'mmse':
            reg = cs.K * float(cs.noise_vars[0]) / cfg.tau
            p = mmse(cs, cfg.tau, regularization=reg)
            return p
        raise ValueError("QAM links support only 'zf' and 'mmse', got {0!r}".format(cfg.method))
    return build_precoder(cfg.method, cs, cfg.tau)


def _realization(cfg, c, const):
    stream = RngStream(cfg.seed, c)
    cs = draw_rayleigh_channel(cfg.M, cfg.K, stream.generator(_CHANNEL))
    if cfg.selection:
        sel = select_users(cfg.selection, cs, cfg.alpha)
        cs = cs.subset(sel.selected)
    K = cs.K
    idx = stream.generator(_SYMBOLS).integers(1, const.order + 1, size=(K, cfg.n_symbols))
    noise = draw_noise(cs.with_noise(1.0), cfg.n_symbols, stream.generator(_NOISE))
    return cs, idx, noise


def run_sweep(cfg, ser=True, rate=True):
    """Run one scenario over its SNR grid.

    Realizations for which the precoder cannot be built (singular Gram
    matrix) are skipped and counted in ``n_failed``.
    """
    if cfg.method not in METHODS:
        raise ValueError("unknown method {0!r}".format(cfg.method))
    const = cfg.constellation()
    pam = const.is_real
    mode = 'real' if pam else 'complex'
    L = const.axis_order
    grid = cfg.snr_grid_db
    noise_vars = snr_db_to_noise_var(grid, cfg.tau)
    n_pts = len(grid)

    errors = np.zeros(n_pts, dtype=np.int64)
    detected = np.zeros(n_pts, dtype=np.int64)
    trials = np.zeros(n_pts, dtype=np.int64)
    failed = np.zeros(n_pts, dtype=np.int64)
    rates = [[] for _ in range(n_pts)]
    users = [[] for _ in range(n_pts)]
    ser_exact = [[] for _ in range(n_pts)]
    per_user = cfg.selection is None and pam
    u_err = np.zeros((n_pts, cfg.K), dtype=np.int64)
    u_exp = np.zeros((n_pts, cfg.K))
    u_var = np.zeros((n_pts, cfg.K))

    for c in range(cfg.n_channels):
        cs_unit, idx, unit_noise = _realization(cfg, c, const)
        s = const.symbols(idx)
        for i, nv in enumerate(noise_vars):
            cs = cs_unit.with_noise(nv)
            try:
                p = _precoder(cfg, cs)
            except NotPositiveDefinite as exc:
                failed[i] += 1
                logger.info("realization %d at %.1f dB skipped: %s", c, grid[i], exc)
                continue
            trials[i] += 1
            users[i].append(cs.K)
            sinr = measure_sinr(cs, p, mode)
            if ser:
                y = transmit_block(cs, p, s, unit_noise * np.sqrt(nv), real_part=pam)
                gain = np.diag(cs.effective @ p.U)
                if pam:
                    # a precoder may leave a user with no useful real gain;
                    # such a user cannot be detected and every symbol counts
                    # as an error (only possible for poorly conditioned designs)
                    g = gain.real
                    ok = g > 0
                    det = np.zeros_like(idx)
                    if np.any(ok):
                        det[ok] = const.detect(y[ok], g[ok, None])
                else:
                    det = const.detect(y, gain[:, None])
                wrong = np.count_nonzero(det != idx, axis=1)
                errors[i] += wrong.sum()
                detected[i] += idx.size
                if pam:
                    pe = ser_pam_awgn(L, sinr)
                    ser_exact[i].append(float(np.mean(pe)))
                    if per_user:
                        u_err[i] += wrong
                        u_exp[i] += cfg.n_symbols * pe
                        u_var[i] += cfg.n_symbols * pe * (1 - pe)
            if rate:
                rates[i].append(math.fsum(mutual_information(const, sinr)))

    points = []
    for i in range(n_pts):
        pt = PointResult(grid[i], n_trials=int(trials[i]), n_failed=int(failed[i]),
                         n_errors=int(errors[i]), n_detected=int(detected[i]))
        if trials[i]:
            pt.avg_selected_users = float(np.mean(users[i]))
            if ser and detected[i]:
                pt.avg_ser = float(errors[i] / detected[i])
            if rate:
                pt.avg_sum_rate = math.fsum(rates[i]) / trials[i]
            if ser_exact[i]:
                pt.ser_at_sinr = float(np.mean(ser_exact[i]))
                pt.ser_at_sinr_std = float(np.std(ser_exact[i]))
            if per_user and ser:
                pt.user_errors = u_err[i]
                pt.user_expected_errors = u_exp[i]
                pt.user_error_var = u_var[i]
        points.append(pt)
    failure = failed.sum() / max(failed.sum() + trials.sum(), 1)
    if failure:
        logger.warning("%s: %.2f%% of realizations skipped (singular Gram matrix)",
                       cfg.name, 100 * failure)
    return SweepResult(cfg, points)


def run_ser_sweep(cfg):
    """Average symbol error rate per SNR point."""
    return run_sweep(cfg, ser=True, rate=False)


def run_rate_sweep(cfg):
    """Average sum rate (bits per channel use) per SNR point."""
    return run_sweep(cfg, ser=False, rate=True)


def run_selection_census(M, K_T_grid, alpha=0.5, n_trials=1000,
                         algorithms=('sus', 'susom'), seed=0):
    """Average number of selected users versus number of candidates.

    Returns
    -------
    dict
        ``{algorithm: numpy array of mean counts, one per K_T}``.
    """
    out = {a: np.zeros(len(K_T_grid)) for a in algorithms}
    for j, K_T in enumerate(K_T_grid):
        counts = {a: 0 for a in algorithms}
        for t in range(n_trials):
            cs = draw_rayleigh_channel(M, int(K_T), RngStream(seed, t).generator(int(K_T)))
            for a in algorithms:
                counts[a] += len(select_users(a, cs, alpha))
        for a in algorithms:
            out[a][j] = counts[a] / n_trials
    return out
