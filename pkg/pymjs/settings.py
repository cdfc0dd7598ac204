"""
This module provides context based configuration of numerical options.

Available groups and keys:

- power : power-method stationary solver
    - tol : l1 residual at which the iteration stops
    - max_iters : iteration limit
- mixing : mixing-time search
    - max_k : largest matrix power examined
- kmeans : Lloyd's iteration with D^2 seeding
    - restarts, max_iters, rel_tol
    - certificate_restarts : restarts used by the non-exact certificate
    - exact_enumeration_max_n : largest n enumerated exhaustively
- tolerance : validation tolerances
    - stochastic : row-sum tolerance of stochastic matrices
    - repair : largest row-sum deviation repaired when reading files
    - rank : singular-value floor for rank decisions
    - orthonormal : tolerance of orthonormality checks
- simulation : switched ARX simulation
    - divergence : magnitude at which an output is declared divergent
- experiment : experiment harness
    - timeout : per-replication wall-clock budget in seconds
    - max_partition_draws : rejection-sampling budget for random partitions

"""
from copy import deepcopy
import threading
from contextlib import contextmanager


_DEFAULTS = {
    'power': {'tol': 1e-10, 'max_iters': 10 ** 6},
    'mixing': {'max_k': 10 ** 4},
    'kmeans': {'restarts': 50, 'max_iters': 300, 'rel_tol': 1e-9,
               'certificate_restarts': 10 ** 4,
               'exact_enumeration_max_n': 12},
    'tolerance': {'stochastic': 1e-9, 'repair': 1e-6, 'rank': 1e-9,
                  'orthonormal': 1e-8},
    'simulation': {'divergence': 1e12},
    'experiment': {'timeout': 120.0, 'max_partition_draws': 10 ** 6},
}


class _settings(object):
    """Wraps and manages the thread-local stack of configurations.
    Inner context inherit the settings from the parent.

    Each thread starts from the defaults; options set in one thread are not
    seen by worker threads it spawns.
    """
    tls = threading.local()

    def _make_stack_item(self):
        return deepcopy(_DEFAULTS)

    @property
    def _stack(self):
        """Get TLS stack"""
        tls = self.tls
        try:
            stack = tls.stack
        except AttributeError:
            tls.stack = stack = [self._make_stack_item()]
        return stack

    @property
    def _tos(self):
        """Get the top of stack"""
        return self._stack[-1]

    def __getattr__(self, name):
        try:
            return self._tos[name]
        except KeyError:
            raise AttributeError('no option group {!r}'.format(name))

    def _push(self, **kwargs):
        dct = deepcopy(self._tos)
        for group, values in kwargs.items():
            if group not in dct:
                raise KeyError('no option group {!r}'.format(group))
            unknown = set(values) - set(dct[group])
            if unknown:
                msg = 'unknown options {} in group {!r}'
                raise KeyError(msg.format(sorted(unknown), group))
            dct[group].update(values)
        self._stack.append(dct)

    def _pop(self):
        self._stack.pop()

    @contextmanager
    def set_options(self, **kwargs):
        self._push(**kwargs)
        try:
            yield
        finally:
            self._pop()

    def resolve(self, group, key, value):
        """Return *value* unless it is ``None``, else the current option.
        """
        if value is None:
            return getattr(self, group)[key]
        return value


# The global singleton for global settings
settings = _settings()
set_options = settings.set_options
