"""
Cache module for storing and retrieving demand matrices across processes.
"""

import functools
import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path

from .demand import DemandMatrix
from .utils import ParseError

logger = logging.getLogger(__name__)


class DemandCache:
    """
    File-based cache of generated demand matrices.

    Entries are JSON demand documents keyed by a hash of the generator
    config, so every worker process and every grid cell that needs the
    same matrix reads the same file.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key_for(cfg):
        """Stable key for a generator config"""
        payload = json.dumps(cfg.to_dict(), sort_keys=True)
        return hashlib.sha1(payload.encode()).hexdigest()

    def _path(self, key):
        return self.directory / f"{key}.json"

    def get(self, key):
        """Get a cached matrix, or None on a miss"""
        path = self._path(key)
        try:
            value = DemandMatrix.from_dict(json.loads(path.read_text()))
        except FileNotFoundError:
            logger.debug("[CACHE] MISS for key: %s", key)
            return None
        except (OSError, json.JSONDecodeError, ParseError) as error:
            logger.warning("[CACHE] unreadable entry %s: %s", key, error)
            return None
        logger.debug("[CACHE] HIT for key: %s", key)
        return value

    def set(self, key, value):
        """Store a matrix; the write is atomic so concurrent readers never see half a file"""
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as handle:
                json.dump(value.to_dict(), handle)
            os.replace(tmp, self._path(key))
        except OSError as error:
            logger.warning("[CACHE] could not store %s: %s", key, error)
            if os.path.exists(tmp):
                os.remove(tmp)
            return False
        logger.debug("[CACHE] STORED key: %s", key)
        return True

    def clear(self):
        """Delete every cache entry and return how many were removed"""
        deleted = 0
        for path in self.directory.glob("*.json"):
            path.unlink()
            deleted += 1
        return deleted


def cached_demand(cache):
    """
    Decorator that caches a generator's output in `cache`.

    The wrapped function takes a TrafficGenConfig. A None cache turns the
    decorator into a no-op.

    Usage:
        @cached_demand(DemandCache("results/cache"))
        def make(cfg):
            ...
    """

    def decorator(func):
        if cache is None:
            return func

        @functools.wraps(func)
        def wrapper(cfg):
            key = DemandCache.key_for(cfg)
            value = cache.get(key)
            if value is not None:
                return value
            value = func(cfg)
            cache.set(key, value)
            return value

        return wrapper

    return decorator
