from .keys import object_key, video_object_key, manifest_key, parse_object_key
from .manifest import (
    Manifest, ManifestEvent, SequenceGap, new_manifest, update_manifest,
    derive_urls, manifest_to_json, manifest_from_json, event_urls,
)
from .stores import MemStore, StoreOp, StoreUnreachable, SimStoreAdapter
from .client import put_with_retry, get_with_retry
from .httpstub import FileStoreHandler, serve_store, HttpStoreAdapter

__all__ = [
    "object_key", "video_object_key", "manifest_key", "parse_object_key",
    "Manifest", "ManifestEvent", "SequenceGap", "new_manifest",
    "update_manifest", "derive_urls", "manifest_to_json", "manifest_from_json",
    "event_urls",
    "MemStore", "StoreOp", "StoreUnreachable", "SimStoreAdapter",
    "put_with_retry", "get_with_retry",
    "FileStoreHandler", "serve_store", "HttpStoreAdapter",
]
