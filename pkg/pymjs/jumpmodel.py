"""
Switched auto-regressive (Markov jump) models: simulation, residual-based
mode-sequence estimation and the separability check under which the
estimate is exact.
"""
import logging
from collections import namedtuple

import numpy as np
from numba import njit

from .estimation import perturbation_stats
from .markov import sample_trajectory
from .settings import settings
from .utils import (NumericalError, _ArraySentry, as_float_matrix,
                    as_float_vector, readonly, make_rng, derive_seed)


_logger = logging.getLogger(__name__)

INPUT_KINDS = ('gaussian-unit', 'constant-one', 'zero')
NOISE_KINDS = ('uniform', 'gaussian')


class InstabilityError(NumericalError):
    def __init__(self, msg, step, value):
        super(InstabilityError, self).__init__(msg)
        self.step = step
        self.value = value


ModeEstimate = namedtuple('ModeEstimate',
                          ['modes', 'mistake_count', 'mistake_rate'])

SeparabilityReport = namedtuple('SeparabilityReport', ['steps', 'overall'])


class JumpModel(object):
    """Per-mode parameters ``w_k = [a_1..a_{n_a}, c_1..c_{n_c}]`` of
    ``y_t = w_{X_t}^T phi_t + n_t``.

    Parameters
    ----------
    w : array_like
        ``n x (n_a + n_c)`` matrix, one row per mode.
    n_a : int
        Output-lag order.
    n_c : int
        Input-lag order.
    """
    def __init__(self, w, n_a, n_c):
        if n_a < 0 or n_c < 0 or n_a + n_c < 1:
            raise ValueError('need n_a, n_c >= 0 and n_a + n_c >= 1')
        w = as_float_matrix(w, 'w')
        _ArraySentry(w, 'w').nonempty()
        if w.shape[1] != n_a + n_c:
            msg = 'w: expected {} columns (n_a + n_c), got {}'
            raise ValueError(msg.format(n_a + n_c, w.shape[1]))
        self._w = readonly(w)
        self.n_a = int(n_a)
        self.n_c = int(n_c)

    @property
    def w(self):
        return self._w

    @property
    def n(self):
        return self._w.shape[0]

    @property
    def order(self):
        """Longest lag, ``max(n_a, n_c)``."""
        return max(self.n_a, self.n_c)

    @property
    def ar_coeffs(self):
        return self._w[:, :self.n_a]

    @property
    def input_coeffs(self):
        return self._w[:, self.n_a:]

    def __repr__(self):
        return '<JumpModel n={} n_a={} n_c={}>'.format(self.n, self.n_a,
                                                       self.n_c)


def _prehistory_buffer(past, lags, values):
    """Prepend *lags* pre-history values to *values*; *past* lists them
    newest first (``x_{-1}, x_{-2}, ...``) and anything missing is zero.
    """
    head = np.zeros(lags)
    past = np.asarray(past, dtype=np.float64)[:lags]
    head[:past.size] = past
    return np.concatenate([head[::-1], values])


def _lagged(values, past, lags):
    """Columns ``values[t - 1], ..., values[t - lags]``."""
    full = _prehistory_buffer(past, lags, values)
    size = values.size
    cols = [full[lags - lag:lags - lag + size] for lag in range(1, lags + 1)]
    if not cols:
        return np.zeros((size, 0))
    return np.column_stack(cols)


class Trajectory(object):
    """Observed outputs and inputs ``{y_t, u_t}`` for ``t = 0..N`` with an
    optional ground-truth mode sequence.

    Parameters
    ----------
    y, u : array_like
        Outputs and inputs of equal length ``N + 1``.
    modes : array_like of int; optional
        Ground-truth ``X_0..X_N``.
    n_max : float
        Noise magnitude used when generating the data.
    y_past, u_past : array_like; optional
        Pre-history ``[x_{-1}, x_{-2}, ...]``; missing values are zero.
    """
    def __init__(self, y, u, modes=None, n_max=0.0, y_past=(), u_past=()):
        y = as_float_vector(y, 'y')
        u = as_float_vector(u, 'u')
        _ArraySentry(y, 'y').nonempty()
        if y.shape != u.shape:
            raise ValueError('y and u must have the same length')
        if modes is not None:
            modes = np.asarray(modes, dtype=np.int64)
            _ArraySentry(modes, 'modes').shape(y.shape)
            if modes.min() < 0:
                raise ValueError('modes: negative mode index')
            modes = readonly(modes)
        self._y = readonly(y)
        self._u = readonly(u)
        self._modes = modes
        self.n_max = float(n_max)
        self.y_past = readonly(as_float_vector(y_past, 'y_past'))
        self.u_past = readonly(as_float_vector(u_past, 'u_past'))

    @property
    def y(self):
        return self._y

    @property
    def u(self):
        return self._u

    @property
    def modes(self):
        return self._modes

    @property
    def N(self):
        return self._y.size - 1

    def __len__(self):
        return self._y.size

    def regressors(self, n_a, n_c):
        """The ``(N + 1) x (n_a + n_c)`` matrix whose row ``t`` is
        ``phi_t = [y_{t-1}, ..., y_{t-n_a}, u_{t-1}, ..., u_{t-n_c}]``.
        """
        return np.ascontiguousarray(
            np.hstack([_lagged(self._y, self.y_past, n_a),
                       _lagged(self._u, self.u_past, n_c)]))

    def __repr__(self):
        return '<Trajectory N={} modes={}>'.format(
            self.N, 'yes' if self._modes is not None else 'no')


@njit(nogil=True)
def _simulate_kernel(w, n_a, n_c, modes, ubuf, noise, ybuf, lags, limit):
    for t in range(modes.size):
        k = modes[t]
        acc = 0.0
        for i in range(n_a):
            acc += w[k, i] * ybuf[lags + t - 1 - i]
        for j in range(n_c):
            acc += w[k, n_a + j] * ubuf[lags + t - 1 - j]
        acc += noise[t]
        ybuf[lags + t] = acc
        if not abs(acc) <= limit:
            return t
    return -1


def simulate(model, P, pi0, N, noise_max, input_kind, rng_seed,
             noise_kind='uniform', prehistory=None):
    """Generate a trajectory of the switched ARX system.

    Parameters
    ----------
    model : JumpModel
    P : StochasticMatrix
        Mode transition matrix over ``model.n`` modes.
    pi0 : DistributionVector
        Distribution of ``X_0``.
    N : int
        Last time index; the trajectory has ``N + 1`` samples.
    noise_max : float
        Half-width of ``Unif(-noise_max, noise_max)`` noise, or the standard
        deviation when ``noise_kind='gaussian'``.
    input_kind : {'gaussian-unit', 'constant-one', 'zero'}
        Input sequence; ignored (all zero) when ``model.n_c == 0``.
    rng_seed : int
    noise_kind : {'uniform', 'gaussian'}
    prehistory : (y_past, u_past); optional
        Values at ``t = -1, -2, ...``; zeros by default.

    Raises
    ------
    InstabilityError
        When an output exceeds ``settings.simulation['divergence']``.
    """
    if P.n != model.n:
        raise ValueError('P has {} modes, model has {}'.format(P.n, model.n))
    if N < model.order:
        raise ValueError('N must be at least max(n_a, n_c)={}'
                         .format(model.order))
    if noise_max < 0:
        raise ValueError('noise_max must be nonnegative')
    if input_kind not in INPUT_KINDS:
        raise ValueError('unknown input_kind {!r}'.format(input_kind))
    if noise_kind not in NOISE_KINDS:
        raise ValueError('unknown noise_kind {!r}'.format(noise_kind))

    modes = sample_trajectory(P, pi0, N, derive_seed(rng_seed, 0))
    rng = make_rng(derive_seed(rng_seed, 1))
    size = N + 1
    if model.n_c == 0 or input_kind == 'zero':
        u = np.zeros(size)
    elif input_kind == 'constant-one':
        u = np.ones(size)
    else:
        u = rng.standard_normal(size)
    if noise_kind == 'uniform':
        noise = rng.uniform(-noise_max, noise_max, size)
    else:
        noise = rng.normal(0.0, noise_max, size)

    y_past, u_past = prehistory if prehistory is not None else ((), ())
    lags = model.order
    ybuf = _prehistory_buffer(y_past, lags, np.zeros(size))
    ubuf = _prehistory_buffer(u_past, lags, u)
    limit = settings.simulation['divergence']
    bad = _simulate_kernel(model.w, model.n_a, model.n_c, modes, ubuf,
                           noise, ybuf, lags, limit)
    if bad >= 0:
        value = ybuf[lags + bad]
        msg = 'output diverged at t={} (|y|={:.3g})'
        raise InstabilityError(msg.format(bad, abs(value)), bad, value)
    _logger.debug('simulated %d steps of %r', size, model)
    return Trajectory(ybuf[lags:], u, modes=modes, n_max=noise_max,
                      y_past=y_past, u_past=u_past)


@njit(nogil=True)
def _argmin_residual(y, phi, w):
    size = y.size
    n, dim = w.shape
    out = np.empty(size, dtype=np.int64)
    for t in range(size):
        best = np.inf
        arg = 0
        for k in range(n):
            pred = 0.0
            for i in range(dim):
                pred += w[k, i] * phi[t, i]
            res = abs(y[t] - pred)
            if res < best:
                best = res
                arg = k
        out[t] = arg
    return out


def estimate_modes(model, traj):
    """Pick ``argmin_k |y_t - w_k^T phi_t|`` at every step, ties going to
    the smallest mode index.

    Returns
    -------
    ModeEstimate
        Mistake statistics are ``None`` without ground truth.
    """
    phi = traj.regressors(model.n_a, model.n_c)
    modes = _argmin_residual(traj.y, phi, model.w)
    if traj.modes is None:
        return ModeEstimate(modes=modes, mistake_count=None,
                            mistake_rate=None)
    stats = perturbation_stats(traj.modes, modes)
    return ModeEstimate(modes=modes, mistake_count=stats.N_prime,
                        mistake_rate=stats.eta)


@njit(nogil=True)
def _separability_scan(phi, w, modes, threshold):
    size = modes.size
    n, dim = w.shape
    out = np.empty(size, dtype=np.bool_)
    for t in range(size):
        k = modes[t]
        ok = True
        for j in range(n):
            if j == k:
                continue
            gap = 0.0
            for i in range(dim):
                gap += phi[t, i] * (w[k, i] - w[j, i])
            if not abs(gap) > threshold:
                ok = False
                break
        out[t] = ok
    return out


def check_separability(model, traj, noise_max, start=0):
    """Test ``|phi_t^T (w_{X_t} - w_j)| > 2 noise_max`` for all ``j != X_t``.

    Steps before *start* are reported but left out of the overall verdict.
    If the verdict is true and every ``|n_t| < noise_max``, the residual
    estimate is exact from *start* on.
    """
    if traj.modes is None:
        raise ValueError('separability needs ground-truth modes')
    if traj.modes.max() >= model.n:
        raise ValueError('trajectory modes exceed model.n={}'
                         .format(model.n))
    phi = traj.regressors(model.n_a, model.n_c)
    steps = _separability_scan(phi, model.w, traj.modes, 2.0 * noise_max)
    return SeparabilityReport(steps=steps, overall=bool(steps[start:].all()))


def poles_to_ar_coeffs(poles):
    """AR coefficients ``a_i`` of ``y_t = sum_i a_i y_{t-i}`` whose
    characteristic polynomial is ``prod_i (1 - p_i z^-1)``.
    """
    poles = as_float_vector(poles, 'poles')
    if np.any(np.abs(poles) >= 1):
        raise ValueError('poles must lie strictly inside (-1, 1)')
    if poles.size == 0:
        return np.zeros(0)
    return -np.real(np.poly(poles))[1:]


def ar_coeffs_to_poles(coeffs):
    """Roots of the characteristic polynomial ``1 - sum_i a_i z^-i``."""
    coeffs = as_float_vector(coeffs, 'coeffs')
    return np.roots(np.concatenate([[1.0], -coeffs]))


def robot_model(n, positions, K):
    """Closed-loop patrol robot ``x_{t+1} = (1 - K) x_t + K p_{s_t} + n_t``.

    Mode ``k`` gets ``w_k = [1 - K, K p_k]``; simulate with
    ``input_kind='constant-one'`` so that the input term realizes the
    constant forcing.
    """
    if not 0 < K < 2:
        raise ValueError('K must lie in (0, 2) for a stable closed loop')
    positions = as_float_vector(positions, 'positions')
    if positions.size != n:
        raise ValueError('expected {} positions, got {}'
                         .format(n, positions.size))
    w = np.column_stack([np.full(n, 1.0 - K), K * positions])
    return JumpModel(w, n_a=1, n_c=1)


def sample_jump_model(n, n_a, n_c, rng_seed):
    """Random modes with poles drawn uniformly on (-1, 1) and input
    coefficients drawn uniformly on (-1, 1).
    """
    rng = make_rng(rng_seed)
    w = np.empty((n, n_a + n_c))
    for k in range(n):
        w[k, :n_a] = poles_to_ar_coeffs(rng.uniform(-1.0, 1.0, n_a))
        w[k, n_a:] = rng.uniform(-1.0, 1.0, n_c)
    return JumpModel(w, n_a, n_c)
