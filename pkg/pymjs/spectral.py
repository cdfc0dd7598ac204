"""
Truncated SVD and the subspace-perturbation quantities used to reason about
it: sin-theta distances, Weyl and Wedin-type bounds and Procrustes
alignment.
"""
from collections import namedtuple

import numpy as np
import scipy.linalg

from .settings import settings
from .utils import NumericalError, _ArraySentry, as_float_matrix, spectral_norm


TruncatedBasis = namedtuple('TruncatedBasis', ['left', 'sigma', 'right'])

WeylGap = namedtuple('WeylGap', ['max_sv_deviation', 'bound'])

WedinBound = namedtuple('WedinBound', ['lhs', 'rhs'])

Alignment = namedtuple('Alignment', ['Q', 'residual'])


def _svd(mat):
    try:
        return scipy.linalg.svd(mat, full_matrices=False)
    except scipy.linalg.LinAlgError as e:
        raise NumericalError('SVD failed: {}'.format(e))


def truncate_svd(M, r):
    """Leading *r* singular triplets of *M*.

    Every left singular vector is sign-fixed so that its largest-magnitude
    entry is positive; the matching right vector is flipped with it.

    Returns
    -------
    TruncatedBasis
        ``left`` (n x r), ``sigma`` (r, descending), ``right`` (n x r).
    """
    mat = as_float_matrix(M, 'M')
    if not 1 <= r <= min(mat.shape):
        raise ValueError('r must lie in [1, {}]'.format(min(mat.shape)))
    U, s, Vt = _svd(mat)
    left = U[:, :r].copy()
    right = Vt[:r].T.copy()
    peak = np.argmax(np.abs(left), axis=0)
    signs = np.sign(left[peak, np.arange(r)])
    signs[signs == 0] = 1.0
    left *= signs
    right *= signs
    return TruncatedBasis(left=left, sigma=s[:r].copy(), right=right)


def _check_orthonormal(U, name):
    _ArraySentry(U, name).ndim(2)
    tol = settings.tolerance['orthonormal']
    gram = U.T @ U
    if np.abs(gram - np.eye(U.shape[1])).max() > tol:
        raise ValueError('{}: columns are not orthonormal'.format(name))


def sin_theta_distance(U1, U2, norm_kind='spectral'):
    """Norm of the sines of the principal angles between the column spaces
    of two orthonormal ``n x r`` bases, computed from ``(I - U1 U1^T) U2``.

    Parameters
    ----------
    U1, U2 : array_like
    norm_kind : {'spectral', 'frobenius'}
    """
    U1 = as_float_matrix(U1, 'U1')
    U2 = as_float_matrix(U2, 'U2')
    if U1.shape != U2.shape:
        raise ValueError('U1 and U2 must have the same shape')
    _check_orthonormal(U1, 'U1')
    _check_orthonormal(U2, 'U2')
    resid = U2 - U1 @ (U1.T @ U2)
    if norm_kind == 'spectral':
        return min(spectral_norm(resid), 1.0)
    elif norm_kind == 'frobenius':
        return min(float(np.linalg.norm(resid, 'fro')),
                   float(np.sqrt(U1.shape[1])))
    else:
        raise ValueError('unknown norm_kind {!r}'.format(norm_kind))


def weyl_gap(A, A_hat):
    """Both sides of ``max_i |sigma_i(A) - sigma_i(A_hat)| <= |A - A_hat|``.
    """
    A = as_float_matrix(A, 'A')
    A_hat = as_float_matrix(A_hat, 'A_hat')
    _ArraySentry(A_hat, 'A_hat').shape(A.shape)
    s = _svd(A)[1]
    s_hat = _svd(A_hat)[1]
    return WeylGap(max_sv_deviation=float(np.abs(s - s_hat).max()),
                   bound=spectral_norm(A - A_hat))


def wedin_combined_bound(A, A_hat, r):
    """Both sides of the combined Wedin/Weyl inequality

    ``max(sin(U_r, U_hat_r), sin(V_r, V_hat_r))
    <= 2 |A - A_hat| / (sigma_r(A) - sigma_{r+1}(A))``

    with spectral-norm sin-theta distances.  The right-hand side is
    ``inf`` when the gap closes.
    """
    A = as_float_matrix(A, 'A')
    A_hat = as_float_matrix(A_hat, 'A_hat')
    _ArraySentry(A_hat, 'A_hat').shape(A.shape)
    if not 1 <= r < min(A.shape):
        raise ValueError('r must lie in [1, {})'.format(min(A.shape)))
    U, s, Vt = _svd(A)
    U_hat, _, Vt_hat = _svd(A_hat)
    lhs = max(sin_theta_distance(U[:, :r], U_hat[:, :r]),
              sin_theta_distance(Vt[:r].T, Vt_hat[:r].T))
    gap = s[r - 1] - s[r]
    rhs = np.inf if gap <= 0 else 2.0 * spectral_norm(A - A_hat) / gap
    return WedinBound(lhs=lhs, rhs=float(rhs))


def procrustes_align(U1, U2):
    """Orthogonal ``Q`` minimizing ``|U1 - U2 Q|_F`` and the attained
    residual.
    """
    U1 = as_float_matrix(U1, 'U1')
    U2 = as_float_matrix(U2, 'U2')
    if U1.shape != U2.shape:
        raise ValueError('U1 and U2 must have the same shape')
    _check_orthonormal(U1, 'U1')
    _check_orthonormal(U2, 'U2')
    Q, _ = scipy.linalg.orthogonal_procrustes(U2, U1)
    residual = float(np.linalg.norm(U1 - U2 @ Q, 'fro'))
    return Alignment(Q=Q, residual=residual)
