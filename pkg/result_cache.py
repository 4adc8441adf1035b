import hashlib
import json
import logging
import os
from typing import Any, Callable, Dict, Optional

import redis
from dotenv import load_dotenv

from models import DistanceMatrixDocument

load_dotenv()

logger = logging.getLogger(__name__)


class ResultCache:
    def __init__(self, enabled: Optional[bool] = None, redis_url: Optional[str] = None):
        self.redis_url = redis_url or os.getenv('REDIS_URL', 'redis://localhost:6379/0')
        if enabled is None:
            enabled = os.getenv('QHM_CACHE_ENABLED', 'false').lower() == 'true'
        self.enabled = enabled
        self.client = None
        self.hits = 0
        self.misses = 0

        if self.enabled:
            try:
                self.client = redis.from_url(
                    self.redis_url,
                    decode_responses=True,
                    socket_connect_timeout=5,
                    socket_timeout=5,
                    retry_on_timeout=True,
                )
                # Test connection
                self.client.ping()
                logger.info(f"Result cache connected to {self.redis_url}")
            except Exception as e:
                logger.warning(f"Redis connection failed: {e}. Result caching disabled.")
                self.enabled = False
                self.client = None
        else:
            logger.debug("Result cache disabled")

    def _generate_key(self, prefix: str, *args) -> str:
        """Generate a consistent cache key"""
        key_string = ":".join(str(arg) for arg in args)
        return f"qhm:{prefix}:{hashlib.md5(key_string.encode()).hexdigest()}"

    def _serialize_value(self, value: Any) -> str:
        return json.dumps(value, sort_keys=True, default=str)

    def _deserialize_value(self, value: Optional[str]) -> Any:
        if not value:
            return None
        try:
            return json.loads(value)
        except json.JSONDecodeError:
            return None

    def get(self, key: str) -> Optional[Any]:
        if not self.enabled or not self.client:
            return None
        try:
            return self._deserialize_value(self.client.get(key))
        except Exception as e:
            logger.error(f"Redis GET error for key {key}: {e}")
            return None

    def set(self, key: str, value: Any, ttl: Optional[int] = None) -> bool:
        """Set value in cache with optional TTL (seconds)"""
        if not self.enabled or not self.client:
            return False
        try:
            serialized_value = self._serialize_value(value)
            if ttl:
                return bool(self.client.setex(key, ttl, serialized_value))
            return bool(self.client.set(key, serialized_value))
        except Exception as e:
            logger.error(f"Redis SET error for key {key}: {e}")
            return False

    def distance_key(self, coalgebra_document: Dict[str, Any], params: Dict[str, Any]) -> str:
        canonical = json.dumps(coalgebra_document, sort_keys=True)
        return self._generate_key("bd", canonical, json.dumps(params, sort_keys=True, default=str))

    def get_cached_distance(self, coalgebra_document: Dict[str, Any],
                            params: Dict[str, Any]) -> Optional[DistanceMatrixDocument]:
        raw = self.get(self.distance_key(coalgebra_document, params))
        if raw is None:
            return None
        try:
            return DistanceMatrixDocument.model_validate(raw)
        except ValueError as e:
            logger.warning(f"Discarding malformed cached distance: {e}")
            return None

    def cache_distance(self, coalgebra_document: Dict[str, Any], params: Dict[str, Any],
                       document: DistanceMatrixDocument, ttl: int = 86400) -> bool:
        return self.set(self.distance_key(coalgebra_document, params), document.model_dump(), ttl)

    def cached_distance(self, coalgebra_document: Dict[str, Any], params: Dict[str, Any],
                        compute: Callable[[], DistanceMatrixDocument]) -> DistanceMatrixDocument:
        """Cached document if present, otherwise compute and store"""
        cached = self.get_cached_distance(coalgebra_document, params)
        if cached is not None:
            self.hits += 1
            logger.info("Distance cache hit")
            return cached
        self.misses += 1
        if self.enabled:
            logger.info("Distance cache miss")
        document = compute()
        self.cache_distance(coalgebra_document, params, document)
        return document

    def get_cache_stats(self) -> Dict[str, Any]:
        return {"enabled": self.enabled, "hits": self.hits, "misses": self.misses}
