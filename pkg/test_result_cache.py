import pytest
import redis

from models import DistanceMatrixDocument
from result_cache import ResultCache


class InMemoryRedis:
    def __init__(self):
        self.store = {}
        self.ttls = {}

    def ping(self):
        return True

    def get(self, key):
        return self.store.get(key)

    def set(self, key, value):
        self.store[key] = value
        return True

    def setex(self, key, ttl, value):
        self.ttls[key] = ttl
        return self.set(key, value)


def document(value="1/4"):
    return DistanceMatrixDocument(
        provenance="bd",
        quantale={"kind": "luk01"},
        order="reversed-numeric",
        states=["x", "y"],
        matrix=[["0", value], [value, "0"]],
        steps=2,
        residual="0",
    )


@pytest.fixture
def cache(monkeypatch):
    client = InMemoryRedis()
    monkeypatch.setattr(redis, "from_url", lambda *args, **kwargs: client)
    return ResultCache(enabled=True)


def test_disabled_cache_always_computes(monkeypatch):
    monkeypatch.delenv("QHM_CACHE_ENABLED", raising=False)
    cache = ResultCache()
    calls = []

    def compute():
        calls.append(1)
        return document()

    for _ in range(2):
        assert cache.cached_distance({"functor": "lts"}, {"backend": "lp"}, compute) == document()
    assert len(calls) == 2
    assert cache.get_cache_stats() == {"enabled": False, "hits": 0, "misses": 2}
    assert cache.set("k", 1) is False


def test_unreachable_redis_disables_the_cache(monkeypatch):
    def refuse(*args, **kwargs):
        raise redis.ConnectionError("refused")

    monkeypatch.setattr(redis, "from_url", refuse)
    cache = ResultCache(enabled=True)
    assert not cache.enabled
    assert cache.get("anything") is None


def test_second_lookup_is_a_hit(cache):
    calls = []

    def compute():
        calls.append(1)
        return document()

    first = cache.cached_distance({"functor": "lts"}, {"backend": "lp"}, compute)
    second = cache.cached_distance({"functor": "lts"}, {"backend": "lp"}, compute)
    assert first == second == document()
    assert len(calls) == 1
    assert cache.get_cache_stats() == {"enabled": True, "hits": 1, "misses": 1}
    assert list(cache.client.ttls.values()) == [86400]


def test_keys_depend_on_parameters(cache):
    a = cache.distance_key({"functor": "lts"}, {"backend": "lp"})
    b = cache.distance_key({"functor": "lts"}, {"backend": "enum"})
    assert a != b
    assert a.startswith("qhm:bd:")
    assert a == cache.distance_key({"functor": "lts"}, {"backend": "lp"})


def test_malformed_entries_are_ignored(cache):
    key = cache.distance_key({"functor": "lts"}, {})
    cache.client.store[key] = '{"unexpected": true}'
    assert cache.get_cached_distance({"functor": "lts"}, {}) is None
    cache.client.store[key] = "not json"
    assert cache.get(key) is None
