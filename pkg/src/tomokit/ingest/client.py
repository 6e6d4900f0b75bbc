"""Minimal DICOMweb client: QIDO-RS series query plus WADO-RS retrieval.

Requests carry a bearer token; when the source has an allow-list, any
study outside it is refused locally before a request is issued.  Only
transport-level failures (connection errors and 5xx responses) are
retried, with bounded exponential backoff and an injectable sleeper so
tests run under a fake clock.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import requests

from ..errors import AuthError, PolicyError, TomoError, TransportError
from ..studies import VIEW_ORDER, ViewKind, VolumeRef


@dataclass
class RemoteSource:
    base_url: str
    auth_token: str = ""
    allowed_study_ids: Optional[frozenset[str]] = None

    def check_policy(self, study_id: str) -> None:
        if self.allowed_study_ids is not None and study_id not in self.allowed_study_ids:
            raise PolicyError(f"study {study_id} is outside the allow-list")


@dataclass
class RetryPolicy:
    attempts: int = 3
    backoff_start: float = 0.1
    multiplier: float = 2.0


def series_uid_for(ref: VolumeRef) -> str:
    """Series identifier convention: '<exam_id>.<view number 1..4>'."""
    return f"{ref.exam_id}.{VIEW_ORDER.index(ref.view) + 1}"


def instance_uid_from_qido(item: dict) -> str:
    """SOP Instance UID from a QIDO-RS result row (DICOM JSON or plain)."""
    tag = item.get("00080018")
    if isinstance(tag, dict) and tag.get("Value"):
        return str(tag["Value"][0])
    if "sop_instance_uid" in item:
        return str(item["sop_instance_uid"])
    raise TomoError("QIDO result row has no SOP Instance UID")


class DicomWebClient:
    def __init__(
        self,
        source: RemoteSource,
        session: requests.Session | None = None,
        retry: RetryPolicy | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.source = source
        self.session = session or requests.Session()
        self.retry = retry or RetryPolicy()
        self.sleeper = sleeper

    def _headers(self) -> dict[str, str]:
        return {"Authorization": f"Bearer {self.source.auth_token}"}

    def _get(self, url: str) -> requests.Response:
        delay = self.retry.backoff_start
        last: Exception | None = None
        for attempt in range(self.retry.attempts):
            try:
                resp = self.session.get(url, headers=self._headers(), timeout=30)
            except requests.RequestException as exc:
                last = TransportError(f"connection failure: {exc}")
            else:
                if resp.status_code in (401, 403):
                    raise AuthError(f"{resp.status_code} from {url}")
                if 500 <= resp.status_code < 600:
                    last = TransportError(f"{resp.status_code} from {url}")
                elif resp.status_code != 200:
                    raise TomoError(f"unexpected status {resp.status_code} from {url}")
                else:
                    return resp
            if attempt + 1 < self.retry.attempts:
                self.sleeper(delay)
                delay *= self.retry.multiplier
        assert last is not None
        raise last

    def list_instances(self, study_uid: str, series_uid: str) -> list[str]:
        """QIDO-RS: SOP Instance UIDs of a series, in server order."""
        self.source.check_policy(study_uid)
        url = f"{self.source.base_url}/studies/{study_uid}/series/{series_uid}/instances"
        return [instance_uid_from_qido(item) for item in self._get(url).json()]

    def fetch_instance(self, study_uid: str, series_uid: str, instance_uid: str) -> bytes:
        """WADO-RS: raw bytes of one instance."""
        self.source.check_policy(study_uid)
        url = (
            f"{self.source.base_url}/studies/{study_uid}"
            f"/series/{series_uid}/instances/{instance_uid}"
        )
        return self._get(url).content

    def fetch_volume(self, ref: VolumeRef) -> list[bytes]:
        """All instance payloads for the volume's series."""
        study_uid = ref.exam_id
        series_uid = series_uid_for(ref)
        instance_uids = self.list_instances(study_uid, series_uid)
        return [
            self.fetch_instance(study_uid, series_uid, uid) for uid in instance_uids
        ]


# --- framing for cache storage --------------------------------------------------


def volume_blob(instances: Sequence[bytes]) -> bytes:
    """Length-prefixed concatenation of instance payloads."""
    out = struct.pack("<I", len(instances))
    for payload in instances:
        out += struct.pack("<Q", len(payload)) + payload
    return out


def split_volume_blob(blob: bytes) -> list[bytes]:
    (count,) = struct.unpack_from("<I", blob, 0)
    offset = 4
    out = []
    for _ in range(count):
        (length,) = struct.unpack_from("<Q", blob, offset)
        offset += 8
        out.append(blob[offset : offset + length])
        offset += length
    return out


def volume_cache_key(ref: VolumeRef) -> str:
    return f"{ref.exam_id}|{series_uid_for(ref)}"


def fetch_volume_cached(cache, client: DicomWebClient, ref: VolumeRef):
    """Fetch through the rotating cache; returns the local blob path."""
    return cache.get_or_fetch(
        volume_cache_key(ref), lambda: volume_blob(client.fetch_volume(ref))
    )
