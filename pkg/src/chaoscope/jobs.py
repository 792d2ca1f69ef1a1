"""Durable job store and runner for sampling, Lyapunov, and scan requests.

Each job lives in its own directory (request.json, status.json, and result
files), so the store survives restarts by re-reading the tree: finished
jobs stay retrievable byte-for-byte, while jobs caught mid-flight are
marked failed. Sample batches stream one row at a time into results.csv
and results.jsonl so clients can poll partial results while the job runs.
"""
from __future__ import annotations

import dataclasses
import json
import os
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .integrate import IntegrationConfig
from .lyapunov import LyapunovConfig, spectrum_from_config
from .sampler import (
    MHConfig,
    batch_csv_header,
    record_csv_row,
    record_to_dict,
    sample_batch,
)
from .scan import BifurcationConfig, bifurcation_scan, scan_csv
from .systems import (
    BoxCoord,
    SamplePoint,
    SearchBox,
    SystemDefinition,
    divergence_at,
    get_system,
)

__all__ = ["JobValidationError", "JobNotFound", "JobStore", "parse_box_doc", "box_doc"]

JOB_KINDS = ("sample_batch", "bifurcation", "lyapunov_single")


class JobValidationError(ValueError):
    """Request rejected before any job state was persisted."""


class JobNotFound(KeyError):
    pass


def parse_box_doc(system: SystemDefinition, doc) -> SearchBox:
    """Box wire format: [{name, lo, hi}, ...] where initial conditions carry
    an ``ic.`` name prefix and parameters use their bare name."""
    if not isinstance(doc, list) or not doc:
        raise JobValidationError("box must be a non-empty list of coordinates")
    coords = []
    for item in doc:
        try:
            name = str(item["name"])
            lo = float(item["lo"])
            hi = float(item["hi"])
        except (KeyError, TypeError, ValueError) as exc:
            raise JobValidationError(f"bad box coordinate {item!r}: {exc}") from None
        kind = "parameter"
        if name.startswith("ic."):
            name = name[3:]
            kind = "initial_condition"
        try:
            coords.append(BoxCoord(name, lo, hi, kind))
        except ValueError as exc:
            raise JobValidationError(str(exc)) from None
    try:
        box = SearchBox(tuple(coords))
        box.validate_for(system)
    except (ValueError, KeyError) as exc:
        raise JobValidationError(str(exc)) from None
    return box


def box_doc(box: SearchBox) -> list[dict]:
    return [{"name": c.label, "lo": c.lo, "hi": c.hi} for c in box.coords]


def _config_from(doc: Optional[dict], cls, what: str):
    doc = doc or {}
    if not isinstance(doc, dict):
        raise JobValidationError(f"{what} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise JobValidationError(f"unknown {what} fields: {sorted(unknown)}")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise JobValidationError(f"bad {what}: {exc}") from None


def _resolve_overrides(system: SystemDefinition, overrides: Optional[dict]):
    """Apply {name: value} settings over system defaults; ic.<state> keys
    address initial conditions."""
    params = system.default_params()
    state = system.default_initial_state()
    for key, value in (overrides or {}).items():
        try:
            v = float(value)
        except (TypeError, ValueError):
            raise JobValidationError(f"value for {key!r} is not a number") from None
        try:
            if key.startswith("ic."):
                state[system.state_index(key[3:])] = v
            else:
                params[system.param_index(key)] = v
        except KeyError as exc:
            raise JobValidationError(str(exc)) from None
    return params, state


@dataclass
class _JobState:
    id: str
    kind: str
    status: str = "queued"
    completed: int = 0
    total: int = 0
    created_at: float = field(default_factory=time.time)
    finished_at: Optional[float] = None
    parent_id: Optional[str] = None
    error: Optional[str] = None

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "status": self.status,
            "progress": {"completed": self.completed, "total": self.total},
            "created_at": self.created_at,
            "finished_at": self.finished_at,
            "parent_id": self.parent_id,
            "error": self.error,
        }


class JobStore:
    """Single-process job manager: one runner thread executes jobs in
    submission order; sample batches fan out over a process pool.

    Status mutations are serialized per job through the runner thread and
    written atomically, so API reads always see a consistent snapshot.
    """

    def __init__(self, data_dir: str | Path, workers: int = 2, start_runner: bool = True):
        self.root = Path(data_dir)
        self.jobs_dir = self.root / "jobs"
        self.jobs_dir.mkdir(parents=True, exist_ok=True)
        self.workers = max(1, int(workers))
        self._queue: "queue.Queue[Optional[str]]" = queue.Queue()
        self._lock = threading.Lock()
        self._recover()
        self._runner: Optional[threading.Thread] = None
        if start_runner:
            self._runner = threading.Thread(target=self._run_loop, daemon=True)
            self._runner.start()

    # -- persistence helpers -------------------------------------------------

    def _dir(self, job_id: str) -> Path:
        return self.jobs_dir / job_id

    def _write_json(self, path: Path, doc: dict) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps(doc, indent=2), encoding="utf-8")
        os.replace(tmp, path)

    def _write_status(self, state: _JobState) -> None:
        self._write_json(self._dir(state.id) / "status.json", state.to_doc())

    def _read_status(self, job_id: str) -> dict:
        path = self._dir(job_id) / "status.json"
        if not path.exists():
            raise JobNotFound(job_id)
        return json.loads(path.read_text(encoding="utf-8"))

    def _read_request(self, job_id: str) -> dict:
        path = self._dir(job_id) / "request.json"
        if not path.exists():
            raise JobNotFound(job_id)
        return json.loads(path.read_text(encoding="utf-8"))

    def _recover(self) -> None:
        for d in self.jobs_dir.iterdir() if self.jobs_dir.exists() else []:
            status_path = d / "status.json"
            if not status_path.exists():
                continue
            doc = json.loads(status_path.read_text(encoding="utf-8"))
            if doc.get("status") in ("queued", "running"):
                doc["status"] = "failed"
                doc["error"] = "interrupted by restart"
                doc["finished_at"] = time.time()
                self._write_json(status_path, doc)

    # -- validation ----------------------------------------------------------

    def _validate(self, request: dict) -> dict:
        if not isinstance(request, dict):
            raise JobValidationError("request body must be a JSON object")
        kind = request.get("kind")
        if kind not in JOB_KINDS:
            raise JobValidationError(f"kind must be one of {JOB_KINDS}, got {kind!r}")
        system_id = request.get("system_id")
        try:
            system = get_system(str(system_id))
        except KeyError:
            raise JobValidationError(f"unknown system {system_id!r}") from None

        if kind == "sample_batch":
            box = parse_box_doc(system, request.get("box"))
            k = request.get("k")
            if not isinstance(k, int) or k < 1:
                raise JobValidationError(f"k must be a positive integer, got {k!r}")
            _config_from(request.get("mh_config"), MHConfig, "mh_config")
            _config_from(request.get("lyap_config"), LyapunovConfig, "lyap_config")
            return {
                "kind": kind,
                "system_id": system.id,
                "box": box_doc(box),
                "k": k,
                "mh_config": request.get("mh_config") or {},
                "lyap_config": request.get("lyap_config") or {},
                "workers": int(request.get("workers") or self.workers),
            }
        if kind == "bifurcation":
            _resolve_overrides(system, request.get("set"))
            try:
                cfg = BifurcationConfig(
                    param_name=str(request["param"]),
                    lo=float(request["lo"]),
                    hi=float(request["hi"]),
                    n_param_points=int(request.get("points", 100)),
                    t_total=float(request.get("t_total", 7500.0)),
                    window_start=float(request.get("window_start", 7000.0)),
                    window_samples=int(request.get("window_samples", 500)),
                    observables=tuple(request.get("observables") or ()),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise JobValidationError(f"bad bifurcation request: {exc}") from None
            try:
                system.param_index(cfg.param_name)
                for name in cfg.observables:
                    system.state_index(name)
            except KeyError as exc:
                raise JobValidationError(str(exc)) from None
            out = {"kind": kind, "system_id": system.id, "param": cfg.param_name,
                   "lo": cfg.lo, "hi": cfg.hi, "points": cfg.n_param_points,
                   "t_total": cfg.t_total, "window_start": cfg.window_start,
                   "window_samples": cfg.window_samples,
                   "observables": list(cfg.observables),
                   "dt": float(request.get("dt", 0.001)),
                   "set": request.get("set") or {},
                   "workers": int(request.get("workers") or self.workers)}
            return out
        # lyapunov_single
        _resolve_overrides(system, request.get("set"))
        _config_from(request.get("lyap_config"), LyapunovConfig, "lyap_config")
        return {
            "kind": kind,
            "system_id": system.id,
            "set": request.get("set") or {},
            "lyap_config": request.get("lyap_config") or {},
        }

    # -- public API ----------------------------------------------------------

    def create_job(self, request: dict, parent_id: Optional[str] = None) -> str:
        resolved = self._validate(request)
        job_id = uuid.uuid4().hex[:12]
        state = _JobState(id=job_id, kind=resolved["kind"], parent_id=parent_id)
        if resolved["kind"] == "sample_batch":
            state.total = resolved["k"]
        elif resolved["kind"] == "bifurcation":
            state.total = resolved["points"]
        else:
            state.total = 1
        d = self._dir(job_id)
        d.mkdir(parents=True)
        self._write_json(d / "request.json", resolved)
        self._write_status(state)
        self._queue.put(job_id)
        return job_id

    def refine_job(self, parent_id: str, box: list) -> str:
        parent_req = self._read_request(parent_id)  # raises JobNotFound
        if parent_req.get("kind") != "sample_batch":
            raise JobValidationError("refine requires a sample_batch parent")
        system = get_system(parent_req["system_id"])
        new_box = parse_box_doc(system, box)
        parent_box = parse_box_doc(system, parent_req["box"])
        parent_by_label = {c.label: c for c in parent_box.coords}
        if set(c.label for c in new_box.coords) != set(parent_by_label):
            raise JobValidationError("refine box must cover exactly the parent coordinates")
        for c in new_box.coords:
            pc = parent_by_label[c.label]
            if c.lo < pc.lo or c.hi > pc.hi:
                raise JobValidationError(
                    f"refine box for {c.label} [{c.lo}, {c.hi}] exceeds parent [{pc.lo}, {pc.hi}]"
                )
        request = dict(parent_req)
        request["box"] = box_doc(new_box)
        return self.create_job(request, parent_id=parent_id)

    def get_job(self, job_id: str) -> dict:
        doc = self._read_status(job_id)
        doc["request"] = self._read_request(job_id)
        return doc

    def get_samples(self, job_id: str, filters: Optional[list[tuple[str, float, float]]] = None) -> list[dict]:
        status = self._read_status(job_id)
        if status["kind"] != "sample_batch":
            raise JobValidationError(f"job kind {status['kind']!r} has no sample rows")
        path = self._dir(job_id) / "results.jsonl"
        rows: list[dict] = []
        if path.exists():
            for line in path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                try:
                    rows.append(json.loads(line))
                except json.JSONDecodeError:
                    break  # trailing partial line from an in-flight write
        if filters:
            known = set(rows[0]) if rows else None
            for axis, lo, hi in filters:
                if known is not None and axis not in known:
                    raise JobValidationError(f"unknown filter axis {axis!r}")
                rows = [
                    r for r in rows
                    if r.get(axis) is not None and lo <= r[axis] <= hi
                ]
        return rows

    def results_csv_path(self, job_id: str) -> Path:
        self._read_status(job_id)
        path = self._dir(job_id) / "results.csv"
        if not path.exists():
            raise JobNotFound(f"{job_id} has no results.csv yet")
        return path

    def result_json(self, job_id: str) -> dict:
        self._read_status(job_id)
        path = self._dir(job_id) / "result.json"
        if not path.exists():
            raise JobNotFound(f"{job_id} has no result.json")
        return json.loads(path.read_text(encoding="utf-8"))

    def wait(self, job_id: str, timeout: float = 300.0, poll: float = 0.05) -> dict:
        deadline = time.time() + timeout
        while time.time() < deadline:
            doc = self.get_job(job_id)
            if doc["status"] in ("done", "failed"):
                return doc
            time.sleep(poll)
        raise TimeoutError(f"job {job_id} still {self.get_job(job_id)['status']}")

    def shutdown(self) -> None:
        if self._runner is not None:
            self._queue.put(None)
            self._runner.join(timeout=60)
            self._runner = None

    def run_pending(self) -> None:
        """Drain the queue synchronously (for runner-less stores in tests)."""
        while True:
            try:
                job_id = self._queue.get_nowait()
            except queue.Empty:
                return
            if job_id is not None:
                self._execute(job_id)

    # -- execution -----------------------------------------------------------

    def _run_loop(self) -> None:
        while True:
            job_id = self._queue.get()
            if job_id is None:
                return
            self._execute(job_id)

    def _execute(self, job_id: str) -> None:
        doc = self._read_status(job_id)
        state = _JobState(
            id=job_id, kind=doc["kind"], parent_id=doc.get("parent_id"),
            created_at=doc.get("created_at", time.time()),
            total=doc["progress"]["total"],
        )
        state.status = "running"
        self._write_status(state)
        try:
            request = self._read_request(job_id)
            if state.kind == "sample_batch":
                self._run_sample_batch(state, request)
            elif state.kind == "bifurcation":
                self._run_bifurcation(state, request)
            else:
                self._run_lyapunov(state, request)
            state.status = "done"
            state.completed = state.total
        except Exception as exc:  # job failure is a reportable outcome
            state.status = "failed"
            state.error = f"{type(exc).__name__}: {exc}"
        state.finished_at = time.time()
        self._write_status(state)

    def _run_sample_batch(self, state: _JobState, request: dict) -> None:
        system = get_system(request["system_id"])
        box = parse_box_doc(system, request["box"])
        mh = _config_from(request.get("mh_config"), MHConfig, "mh_config")
        lyap = _config_from(request.get("lyap_config"), LyapunovConfig, "lyap_config")
        d = self._dir(state.id)
        csv_path = d / "results.csv"
        jsonl_path = d / "results.jsonl"
        with open(csv_path, "w", encoding="utf-8") as csv_f, \
                open(jsonl_path, "w", encoding="utf-8") as jsonl_f:
            csv_f.write(batch_csv_header(box) + "\n")
            csv_f.flush()

            def on_record(i, rec):
                csv_f.write(record_csv_row(rec) + "\n")
                csv_f.flush()
                jsonl_f.write(json.dumps(record_to_dict(box, rec)) + "\n")
                jsonl_f.flush()
                state.completed = i + 1
                self._write_status(state)

            sample_batch(
                system, box, request["k"], mh, lyap,
                workers=int(request.get("workers") or self.workers),
                on_record=on_record,
            )

    def _run_bifurcation(self, state: _JobState, request: dict) -> None:
        system = get_system(request["system_id"])
        params, init_state = _resolve_overrides(system, request.get("set"))
        base = SamplePoint.of(system, params, init_state)
        cfg = BifurcationConfig(
            param_name=request["param"], lo=request["lo"], hi=request["hi"],
            n_param_points=request["points"], t_total=request["t_total"],
            window_start=request["window_start"], window_samples=request["window_samples"],
            observables=tuple(request.get("observables") or ()),
        )
        result = bifurcation_scan(
            system, base, cfg, IntegrationConfig(dt=float(request.get("dt", 0.001))),
            workers=int(request.get("workers") or self.workers),
        )
        (self._dir(state.id) / "results.csv").write_text(scan_csv(result), encoding="utf-8")

    def _run_lyapunov(self, state: _JobState, request: dict) -> None:
        system = get_system(request["system_id"])
        params, init_state = _resolve_overrides(system, request.get("set"))
        sample = SamplePoint.of(system, params, init_state)
        lyap = _config_from(request.get("lyap_config"), LyapunovConfig, "lyap_config")
        lr = spectrum_from_config(system, sample, lyap)
        doc = lr.to_dict()
        doc["divergence"] = divergence_at(system, sample)
        self._write_json(self._dir(state.id) / "result.json", doc)
