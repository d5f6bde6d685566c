"""Serialization and on-disk caching of bubble solutions.

Files are JSON documents ``{"checksum": ..., "payload": {...}}``.  Floats are
written with Python's shortest round-trip representation, so reading a file
back reproduces every array bit for bit.  Writes go to a temporary file in
the cache directory followed by an atomic rename.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
import warnings
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bubble import BubbleSolution, RadialProfile, TailCoefficients, solve_ground_state
from .errors import DomainError
from .hyperbola import classify

FORMAT_VERSION = 1
CACHE_ENV = "CRITSYS_CACHE_DIR"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def solution_to_dict(sol: BubbleSolution) -> dict:
    pr = sol.profile
    return {
        "format": FORMAT_VERSION,
        "pair": {"N": sol.N, "p": sol.pair.p, "q": sol.pair.q},
        "beta_star": sol.beta_star,
        "profile": {k: getattr(pr, k).tolist() for k in ("r", "U", "V", "dU", "dV")},
        "tail": sol.tail.as_dict(),
        "ode_residual": sol.ode_residual,
        "solver_meta": _plain(sol.solver_meta),
    }


def solution_from_dict(d: dict) -> BubbleSolution:
    if d.get("format") != FORMAT_VERSION:
        raise DomainError(f"unsupported bubble file format {d.get('format')!r}")
    pr = d["pair"]
    pair = classify(pr["N"], pr["p"], pr["q"]).require_critical()
    profile = RadialProfile(**{k: np.array(v, dtype=float) for k, v in d["profile"].items()})
    tail = TailCoefficients.from_dict(d["tail"])
    return BubbleSolution(pair, d["beta_star"], profile, tail, d["ode_residual"], d.get("solver_meta"))


def _checksum(payload_text: str) -> str:
    return hashlib.sha256(payload_text.encode()).hexdigest()


def dumps(sol: BubbleSolution) -> str:
    payload = canonical_json(solution_to_dict(sol))
    return '{"checksum":"%s","payload":%s}\n' % (_checksum(payload), payload)


class CorruptFile(DomainError):
    pass


def loads(text: str) -> BubbleSolution:
    try:
        doc = json.loads(text)
        payload = doc["payload"]
        stored = doc["checksum"]
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptFile(f"unreadable bubble file: {exc}") from None
    if _checksum(canonical_json(payload)) != stored:
        raise CorruptFile("bubble file checksum mismatch")
    return solution_from_dict(payload)


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_solution(sol: BubbleSolution, path) -> None:
    write_atomic(path, dumps(sol))


def load_solution(path) -> BubbleSolution:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DomainError(f"cannot read bubble file {path}: {exc}") from None
    return loads(text)


def cache_key(N, p, q, tol, r_max, n_grid) -> str:
    pair = classify(N, p, q)
    text = f"{FORMAT_VERSION}|{__version__}|{pair.N}|{pair.p!r}|{pair.q!r}|{float(tol)!r}|{float(r_max)!r}|{int(n_grid)}"
    return hashlib.sha256(text.encode()).hexdigest()[:20]


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "critsys"


class BubbleCache:
    """Directory of solved ground states keyed by their inputs."""

    def __init__(self, directory=None):
        self.directory = Path(directory) if directory is not None else default_cache_dir()

    def path(self, key: str) -> Path:
        return self.directory / f"bubble-{key}.json"

    def load(self, key: str) -> Optional[BubbleSolution]:
        p = self.path(key)
        if not p.exists():
            return None
        try:
            return load_solution(p)
        except DomainError as exc:
            warnings.warn(f"ignoring cache entry {p.name}: {exc}", RuntimeWarning, stacklevel=2)
            return None

    def store(self, key: str, sol: BubbleSolution) -> Path:
        p = self.path(key)
        save_solution(sol, p)
        return p

    def get_or_solve(self, pair, tol: float, r_max: float, n_grid: int):
        """``(solution, status)`` with status ``"hit"`` or ``"miss"``."""
        key = cache_key(pair.N, pair.p, pair.q, tol, r_max, n_grid)
        sol = self.load(key)
        if sol is not None:
            return sol, "hit", self.path(key)
        sol = solve_ground_state(pair, tol=tol, r_max=r_max, n_grid=n_grid)
        return sol, "miss", self.store(key, sol)


def cache_roundtrip(sol: BubbleSolution, directory=None) -> BubbleSolution:
    """Write ``sol`` to the cache and read it back."""
    cache = BubbleCache(directory)
    m = sol.solver_meta
    key = cache_key(sol.N, sol.pair.p, sol.pair.q, m.get("tol", 0.0), sol.r_max, m.get("n_grid", sol.profile.r.size))
    cache.store(key, sol)
    out = cache.load(key)
    if out is None:
        raise DomainError("cache roundtrip failed")
    return out
