"""Size caps, overridable from the environment.

``APPROXCONVEX_MAX_POINTS``, ``APPROXCONVEX_MAX_TRIPLES`` and
``APPROXCONVEX_MAX_OMEGA`` are read on every call so tests can monkeypatch.
"""
import os

DEFAULT_MAX_POINTS = 2_000_000
DEFAULT_MAX_TRIPLES = 100_000_000
DEFAULT_MAX_OMEGA = 200_000


def _env_int(name, default):
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    return int(float(raw))


def max_points():
    return _env_int("APPROXCONVEX_MAX_POINTS", DEFAULT_MAX_POINTS)


def max_triples():
    return _env_int("APPROXCONVEX_MAX_TRIPLES", DEFAULT_MAX_TRIPLES)


def max_omega():
    return _env_int("APPROXCONVEX_MAX_OMEGA", DEFAULT_MAX_OMEGA)
