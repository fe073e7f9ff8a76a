"""Retrying store operations: exponential backoff, bounded attempts.

Generator style so retries wait on the injected scheduler; the same code
path backs simulated and wall-clock deployments.
"""

from __future__ import annotations

from ..runtime import Environment
from .stores import StoreUnreachable

DEFAULT_MAX_ATTEMPTS = 5
DEFAULT_BACKOFF_S = 0.5


def put_with_retry(env: Environment, adapter, key: str, data: bytes,
                   max_attempts: int = DEFAULT_MAX_ATTEMPTS,
                   backoff_s: float = DEFAULT_BACKOFF_S):
    """Returns the attempt count on success; StoreUnreachable when exhausted."""
    for attempt in range(1, max_attempts + 1):
        ok, _ = yield adapter.put(key, data)
        if ok:
            return attempt
        if attempt < max_attempts:
            yield env.timeout(backoff_s * (2 ** (attempt - 1)))
    raise StoreUnreachable(f"PUT {key}: {max_attempts} attempts failed")


def get_with_retry(env: Environment, adapter, key: str,
                   max_attempts: int = DEFAULT_MAX_ATTEMPTS,
                   backoff_s: float = DEFAULT_BACKOFF_S):
    """Returns (data | None, attempts); StoreUnreachable when the store stays down."""
    for attempt in range(1, max_attempts + 1):
        ok, data = yield adapter.get(key)
        if ok:
            return data, attempt
        if attempt < max_attempts:
            yield env.timeout(backoff_s * (2 ** (attempt - 1)))
    raise StoreUnreachable(f"GET {key}: {max_attempts} attempts failed")
