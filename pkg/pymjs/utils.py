import numpy as np

from numba import njit


class NumericalError(ArithmeticError):
    """Base class of numerical failures (non-convergence, divergence,
    degeneracy, decomposition failure).
    """


class ArraySentryError(ValueError):
    pass


class _ArraySentry(object):
    """Chained validation of an input array.

    >>> _ArraySentry(mat, 'P').ndim(2).square().finite()
    """
    def __init__(self, arr, name='array'):
        self._arr = arr
        self._name = name

    def _fail(self, what):
        raise ArraySentryError('{}: {}'.format(self._name, what))

    def ndim(self, ndim):
        if self._arr.ndim != ndim:
            self._fail('expected {}-d, got {}-d'.format(ndim, self._arr.ndim))
        return self

    def square(self):
        shape = self._arr.shape
        if len(shape) != 2 or shape[0] != shape[1]:
            self._fail('not square {}'.format(shape))
        return self

    def shape(self, shape):
        if self._arr.shape != tuple(shape):
            self._fail('shape mismatch {} != {}'.format(self._arr.shape,
                                                         tuple(shape)))
        return self

    def nonempty(self):
        if self._arr.size == 0:
            self._fail('empty')
        return self

    def finite(self):
        if not np.all(np.isfinite(self._arr)):
            self._fail('non-finite entries')
        return self

    def nonnegative(self):
        if np.any(self._arr < 0):
            self._fail('negative entries')
        return self


def as_float_matrix(mat, name='matrix'):
    arr = np.array(mat, dtype=np.float64)
    _ArraySentry(arr, name).ndim(2).finite()
    return arr


def as_float_vector(vec, name='vector'):
    arr = np.array(vec, dtype=np.float64)
    _ArraySentry(arr, name).ndim(1).finite()
    return arr


def readonly(arr):
    arr.flags.writeable = False
    return arr


def make_rng(seed):
    """Counter-based generator shared by every sampler.
    """
    return np.random.Generator(np.random.Philox(int(seed)))


def derive_seed(master, *keys):
    """Mix *keys* into *master* to obtain an independent child seed.
    """
    seq = np.random.SeedSequence([int(master)] + [int(k) for k in keys])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def spectral_norm(mat):
    mat = np.asarray(mat, dtype=np.float64)
    if mat.size == 0:
        return 0.0
    return float(np.linalg.norm(mat, 2))


def inf_norm(mat):
    """Induced infinity norm (largest absolute row sum).
    """
    mat = np.asarray(mat, dtype=np.float64)
    if mat.size == 0:
        return 0.0
    return float(np.abs(mat).sum(axis=1).max())


@njit(nogil=True)
def draw_categorical(cum, uniform):
    """Index drawn from the cumulative weights *cum* by inverse transform.
    """
    k = np.searchsorted(cum, uniform * cum[-1], side='right')
    return min(k, cum.size - 1)
