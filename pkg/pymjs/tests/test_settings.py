import threading

import pytest

from pymjs.settings import settings, set_options


def test_set_options():
    def get_setting():
        return settings.power['tol']
    assert get_setting() == 1e-10
    with set_options(power={'tol': 1e-6}):
        assert get_setting() == 1e-6
        with set_options(kmeans={'restarts': 3}):
            assert get_setting() == 1e-6
            assert settings.kmeans['restarts'] == 3
        assert settings.kmeans['restarts'] == 50
    assert get_setting() == 1e-10


def test_set_options_rejects_unknown():
    with pytest.raises(KeyError):
        with set_options(power={'tolerance': 1.0}):
            pass
    with pytest.raises(KeyError):
        with set_options(nosuch={'tol': 1.0}):
            pass
    with pytest.raises(AttributeError):
        settings.nosuch


def test_resolve():
    assert settings.resolve('mixing', 'max_k', None) == 10 ** 4
    assert settings.resolve('mixing', 'max_k', 7) == 7


def test_worker_threads_start_from_defaults():
    seen = []

    def work():
        seen.append(settings.power['tol'])

    with set_options(power={'tol': 1e-3}):
        thread = threading.Thread(target=work)
        thread.start()
        thread.join()
    assert seen == [1e-10]
