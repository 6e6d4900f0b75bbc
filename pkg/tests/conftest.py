import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from tomokit.studies import (
    Dataset,
    Demographics,
    DensityCategory,
    Exam,
    Outcome,
    ViewKind,
    VolumeRef,
)


def make_exam(i: int, rank: int = 0, split: str = "train", event: bool = False,
              event_year=None, followup: float = 6.0, n_slices: int = 2) -> Exam:
    patient_id = f"P{i:04d}"
    exam_id = f"E{i:04d}"
    views = {
        v: VolumeRef(patient_id, exam_id, v, n_slices, "2020-01-01") for v in ViewKind
    }
    return Exam(
        exam_id=exam_id,
        patient_id=patient_id,
        views=views,
        demographics=Demographics(age_years=55.0 + i % 30, race="White"),
        density=DensityCategory.from_rank(rank),
        outcome=Outcome(event=event, event_year=event_year, followup_years=followup),
        split=split,
    )


def make_dataset(n: int, splits=("train", "val", "test"), weights=(0.6, 0.2, 0.2),
                 event_rate: float = 0.0, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    exams = []
    boundaries = np.cumsum([int(round(w * n)) for w in weights[:-1]])
    for i in range(n):
        split = splits[int(np.searchsorted(boundaries, i, side="right"))]
        event = bool(rng.random() < event_rate)
        event_year = int(rng.integers(1, 6)) if event else None
        followup = float(event_year) if event else float(rng.uniform(1.0, 8.0))
        exams.append(
            make_exam(i, rank=i % 4, split=split, event=event,
                      event_year=event_year, followup=followup)
        )
    return Dataset(exams=exams)


class ScriptedDicomHandler(BaseHTTPRequestHandler):
    """Serves scripted routes and records every request path."""

    routes: dict = {}
    request_log: list = []
    failures: dict = {}

    def do_GET(self):  # noqa: N802  (http.server API)
        cls = type(self)
        cls.request_log.append((self.path, self.headers.get("Authorization")))
        remaining = cls.failures.get(self.path, 0)
        if remaining > 0:
            cls.failures[self.path] = remaining - 1
            self.send_response(503)
            self.end_headers()
            return
        entry = cls.routes.get(self.path)
        if entry is None:
            self.send_response(404)
            self.end_headers()
            return
        status, content_type, payload = entry
        token = self.headers.get("Authorization", "")
        if cls.routes.get("__require_token__") and token != cls.routes["__require_token__"]:
            self.send_response(401)
            self.end_headers()
            return
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):  # silence the default stderr noise
        pass


@pytest.fixture()
def stub_server():
    handler = type(
        "Handler", (ScriptedDicomHandler,), {"routes": {}, "request_log": [], "failures": {}}
    )
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base_url = f"http://127.0.0.1:{server.server_port}"
    try:
        yield base_url, handler
    finally:
        server.shutdown()
        thread.join(timeout=5)
