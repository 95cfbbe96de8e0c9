"""Labeling-workflow service backing the browser UI.

Serves registered clouds (display-downsampled), accepts point-label
submissions, computes the full 17-feature records for each labeled point,
and appends them to a label dataset with a write-then-rename so the file is
valid after any crash. Submissions carrying a client submission_id are
idempotent.

HTTP endpoints (JSON bodies, version field on every payload):
    GET  /clouds            list registered clouds
    GET  /clouds/{id}       display payload for one cloud
    POST /labels            a LabelSubmission
    GET  /dataset/stats     dataset row counts
"""
from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .core import CLASS_LABELS, ColoredPointCloud, LabelDataset
from .errors import FallcolorError, ValidationError
from .features import records_from_points
from . import pcio

PROTOCOL_VERSION = 1


@dataclass
class LabelSubmission:
    """One batch of point labels for a registered cloud."""

    cloud_id: str
    labels: list[tuple[int, str]]  # (full-cloud point index, label)
    annotator: str = ""
    timestamp: str = ""
    submission_id: str | None = None

    def __post_init__(self):
        if not self.labels:
            raise ValidationError("submission has no labels")
        seen = set()
        for idx, label in self.labels:
            if label not in CLASS_LABELS:
                raise ValidationError(f"label {label!r} outside {CLASS_LABELS}")
            if idx in seen:
                raise ValidationError(f"duplicate point index {idx} in submission")
            seen.add(idx)

    @classmethod
    def from_dict(cls, doc: dict) -> "LabelSubmission":
        try:
            labels = [(int(item["point_index"]), str(item["label"]))
                      for item in doc["labels"]]
            return cls(cloud_id=str(doc["cloud_id"]), labels=labels,
                       annotator=str(doc.get("annotator", "")),
                       timestamp=str(doc.get("timestamp", "")),
                       submission_id=doc.get("submission_id"))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed submission: {exc}") from exc


class LabelService:
    """Cloud registry plus the single-writer dataset appender."""

    def __init__(self, dataset_path, display_stride: int = 5, neighbor_k: int = 30):
        if display_stride < 1:
            raise ValidationError(f"display_stride must be >= 1, got {display_stride}")
        self.dataset_path = Path(dataset_path)
        self.display_stride = display_stride
        self.neighbor_k = neighbor_k
        self._clouds: dict[str, ColoredPointCloud] = {}
        self._write_lock = threading.Lock()
        self._seen_ids: set[str] = set()
        self._journal_path = self.dataset_path.with_suffix(
            self.dataset_path.suffix + ".submissions")
        if self._journal_path.exists():
            self._seen_ids = {ln.strip() for ln in
                              self._journal_path.read_text().splitlines() if ln.strip()}

    def register_cloud(self, cloud_id: str, cloud: ColoredPointCloud) -> None:
        if cloud.n_points < 4:
            raise ValidationError(f"cloud {cloud_id!r} too small to label")
        self._clouds[cloud_id] = cloud

    def register_directory(self, directory) -> int:
        directory = Path(directory)
        count = 0
        for path in sorted(directory.glob("*.ply")):
            self.register_cloud(path.stem, pcio.read_cloud(path))
            count += 1
        return count

    def list_clouds(self) -> dict:
        return {"version": PROTOCOL_VERSION,
                "clouds": [{"cloud_id": cid, "point_count": c.n_points,
                            "capture_week": c.capture_week}
                           for cid, c in sorted(self._clouds.items())]}

    def cloud_payload(self, cloud_id: str) -> dict:
        """Display payload; UI index i maps back to full index i * display_stride."""
        cloud = self._clouds.get(cloud_id)
        if cloud is None:
            raise KeyError(cloud_id)
        stride = self.display_stride
        xyz = cloud.xyz[::stride]
        rgb = cloud.rgb[::stride]
        return {
            "version": PROTOCOL_VERSION,
            "cloud_id": cloud_id,
            "point_count": cloud.n_points,
            "display_stride": stride,
            "display_count": math.ceil(cloud.n_points / stride),
            "points": [[float(a), float(b), float(c)] for a, b, c in xyz],
            "colors": [[int(a), int(b), int(c)] for a, b, c in rgb],
        }

    def submit_labels(self, submission: LabelSubmission) -> int:
        """Append one record per labeled point; returns rows appended.

        The whole submission is rejected if any index is invalid; duplicate
        submission_ids append nothing.
        """
        cloud = self._clouds.get(submission.cloud_id)
        if cloud is None:
            raise KeyError(submission.cloud_id)
        bad = [i for i, _ in submission.labels if not 0 <= i < cloud.n_points]
        if bad:
            raise ValidationError(
                f"point indices {bad} out of range for cloud of {cloud.n_points}")
        with self._write_lock:
            if submission.submission_id and submission.submission_id in self._seen_ids:
                return 0
            k = min(self.neighbor_k, cloud.n_points - 1)
            records = records_from_points(
                cloud, [i for i, _ in submission.labels],
                [label for _, label in submission.labels], k=k)
            dataset = (pcio.read_label_dataset(self.dataset_path)
                       if self.dataset_path.exists() else LabelDataset())
            dataset.rows.extend(records)
            tmp = self.dataset_path.with_suffix(self.dataset_path.suffix + ".tmp")
            pcio.write_label_dataset(dataset, tmp)
            os.replace(tmp, self.dataset_path)
            if submission.submission_id:
                self._seen_ids.add(submission.submission_id)
                with open(self._journal_path, "a") as fh:
                    fh.write(submission.submission_id + "\n")
            return len(records)

    def dataset_stats(self) -> dict:
        rows = 0
        by_label: dict[str, int] = {}
        if self.dataset_path.exists():
            dataset = pcio.read_label_dataset(self.dataset_path)
            rows = len(dataset)
            by_label = dataset.class_counts()
        return {"version": PROTOCOL_VERSION, "rows": rows,
                "by_label": dict(sorted(by_label.items()))}


class _Handler(BaseHTTPRequestHandler):
    service: LabelService = None  # type: ignore[assignment]
    static_dir: Path | None = None

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, status: int, doc: dict) -> None:
        body = json.dumps(doc).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self):  # CORS preflight for the browser UI
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self):
        path = self.path.split("?", 1)[0].rstrip("/")
        if path == "/clouds":
            self._send_json(200, self.service.list_clouds())
        elif path.startswith("/clouds/"):
            cloud_id = path[len("/clouds/"):]
            try:
                self._send_json(200, self.service.cloud_payload(cloud_id))
            except KeyError:
                self._send_json(404, {"error": f"unknown cloud {cloud_id!r}"})
        elif path == "/dataset/stats":
            self._send_json(200, self.service.dataset_stats())
        elif self.static_dir is not None and (path == "" or path.startswith("/ui")):
            self._send_static(path)
        else:
            self._send_json(404, {"error": f"unknown route {path!r}"})

    def _send_static(self, path: str) -> None:
        rel = path[len("/ui"):].lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) \
                or not target.is_file():
            self._send_json(404, {"error": "not found"})
            return
        ctype = {"html": "text/html", "js": "text/javascript", "css": "text/css",
                 "map": "application/json"}.get(target.suffix.lstrip("."),
                                                "application/octet-stream")
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        if self.path.rstrip("/") != "/labels":
            self._send_json(404, {"error": f"unknown route {self.path!r}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            doc = json.loads(self.rfile.read(length) or b"{}")
            submission = LabelSubmission.from_dict(doc)
            appended = self.service.submit_labels(submission)
            self._send_json(200, {"version": PROTOCOL_VERSION, "appended": appended,
                                  "duplicate": appended == 0
                                  and submission.submission_id is not None})
        except json.JSONDecodeError as exc:
            self._send_json(400, {"error": f"bad JSON: {exc}"})
        except KeyError as exc:
            self._send_json(404, {"error": f"unknown cloud {exc}"})
        except (ValidationError, FallcolorError) as exc:
            self._send_json(400, {"error": str(exc)})


def make_server(service: LabelService, host: str = "127.0.0.1", port: int = 0,
                static_dir=None) -> ThreadingHTTPServer:
    """Bound server (port 0 picks a free one); call serve_forever() to run."""
    handler = type("BoundHandler", (_Handler,), {
        "service": service,
        "static_dir": Path(static_dir) if static_dir else None,
    })
    return ThreadingHTTPServer((host, port), handler)
