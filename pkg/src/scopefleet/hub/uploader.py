"""Event uploads and manifest authority.

One worker drains a FIFO of jobs, so object PUTs for event N and the
manifest rewrite happen strictly before anything of event N+1, while the
capture side keeps cycling (pipelining). A job that exhausts its retries
stays at the queue head and is retried when the next event lands, with
already-stored objects skipped.

The manifest is rewritten wholesale after every event (single PUT of the
canonical serialization, so readers always see a complete document).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..camera_node import LocalImage
from ..protocol import ExperimentConfig
from ..runtime import Environment, Trace
from ..storage import (
    Manifest, ManifestEvent, StoreUnreachable, manifest_key, manifest_to_json,
    new_manifest, object_key, update_manifest, video_object_key,
)
from ..storage.client import put_with_retry


@dataclass
class UploadJob:
    kind: str                                  # "init" | "event"
    config: Optional[ExperimentConfig] = None  # init
    record: Optional[ManifestEvent] = None     # event
    files: list[LocalImage] = field(default_factory=list)
    uploaded: set[str] = field(default_factory=set)
    report: dict[str, int] = field(default_factory=dict)   # key -> attempts


class Uploader:
    def __init__(self, env: Environment, adapter, trace: Trace, device_id: str,
                 max_attempts: int = 5, backoff_s: float = 0.5,
                 source: str = "hub/upload"):
        self.env = env
        self.adapter = adapter
        self.trace = trace
        self.device_id = device_id
        self.max_attempts = max_attempts
        self.backoff_s = backoff_s
        self.source = source
        self.manifest: Optional[Manifest] = None
        self.queue: deque[UploadJob] = deque()
        self.audit_hooks: list[Callable[[Manifest], None]] = []
        self._kick = env.event()
        env.process(self._loop())

    # -- producer side ---------------------------------------------------------

    def start_experiment(self, config: ExperimentConfig) -> None:
        self.queue.append(UploadJob(kind="init", config=config))
        self._wake()

    def enqueue_event(self, record: ManifestEvent, files: list[LocalImage]) -> None:
        self.queue.append(UploadJob(kind="event", record=record, files=list(files)))
        self._wake()

    def idle(self) -> bool:
        return not self.queue

    def _wake(self) -> None:
        kick, self._kick = self._kick, self.env.event()
        kick.trigger()

    # -- worker ------------------------------------------------------------------

    def _loop(self):
        while True:
            if not self.queue:
                yield self._kick
                continue
            job = self.queue[0]
            try:
                if job.kind == "init":
                    yield from self._do_init(job)
                else:
                    yield from self._do_event(job)
            except StoreUnreachable as exc:
                self.trace.log(self.source, "upload_deferred", reason=str(exc))
                yield self._kick      # retried when the next event arrives
                continue
            self.queue.popleft()

    def _put(self, key: str, data: bytes):
        attempts = yield from put_with_retry(
            self.env, self.adapter, key, data,
            max_attempts=self.max_attempts, backoff_s=self.backoff_s)
        return attempts

    def _do_init(self, job: UploadJob):
        manifest = new_manifest(job.config, self.device_id)
        yield from self._put(manifest_key(manifest.experiment_id),
                             manifest_to_json(manifest))
        self.manifest = manifest
        self.trace.log(self.source, "manifest_put",
                       experiment_id=manifest.experiment_id, events=0)

    def _file_key(self, record: ManifestEvent, image: LocalImage) -> str:
        if image.layer == "video":
            return video_object_key(self.manifest.experiment_id,
                                    record.timestamp, image.well)
        return object_key(self.manifest.experiment_id, record.timestamp,
                          image.well, image.layer)

    def _do_event(self, job: UploadJob):
        assert self.manifest is not None, "event upload before experiment init"
        record = job.record
        for image in job.files:
            key = self._file_key(record, image)
            if key in job.uploaded:
                continue
            attempts = yield from self._put(key, image.data)
            job.uploaded.add(key)
            job.report[key] = attempts
            self.trace.log(self.source, "object_put", key=key, attempts=attempts)
        updated = update_manifest(self.manifest, record)
        yield from self._put(manifest_key(updated.experiment_id),
                             manifest_to_json(updated))
        self.manifest = updated
        self.trace.log(self.source, "upload_done", event_seq=record.event_seq,
                       objects=len(job.uploaded))
        self.trace.log(self.source, "manifest_put",
                       experiment_id=updated.experiment_id,
                       events=len(updated.events))
        for hook in self.audit_hooks:
            hook(updated)
