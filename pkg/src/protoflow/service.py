"""Project store and HTTP API exposing generation, editing, and export."""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional

from fastapi import Body, FastAPI, Header, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware

from . import serde
from .assembler import build_prototype, export_project
from .backends import Backends
from .kb import IconRecord, KnowledgeError, KnowledgeRecord, knowledge_record_to_text
from .orchestrator import (
    DesignInput,
    GenerationTrace,
    OrchestrationError,
    PipelineConfig,
    ThemeParseError,
    generate_prototype,
    regenerate_all,
    regenerate_component,
)
from .retrieval import IconIndex, Index, build_index


@dataclass
class Project:
    id: str
    input: DesignInput
    trace: Optional[GenerationTrace]
    created: float
    updated: float
    revision: int


def project_to_dict(p: Project) -> dict:
    return {
        "id": p.id,
        "input": serde.design_input_to_dict(p.input),
        "trace": serde.trace_to_dict(p.trace) if p.trace else None,
        "created": p.created,
        "updated": p.updated,
        "revision": p.revision,
    }


def project_from_dict(d: dict) -> Project:
    return Project(
        id=d["id"],
        input=serde.design_input_from_dict(d["input"]),
        trace=serde.trace_from_dict(d["trace"]) if d.get("trace") else None,
        created=d["created"],
        updated=d["updated"],
        revision=d["revision"],
    )


class ProjectStore:
    """File-per-project persistence with atomic writes and per-project locks."""

    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, project_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(project_id, threading.Lock())

    def _path(self, project_id: str) -> str:
        return os.path.join(self.data_dir, f"{project_id}.json")

    def exists(self, project_id: str) -> bool:
        return os.path.exists(self._path(project_id))

    def load(self, project_id: str) -> Project:
        path = self._path(project_id)
        if not os.path.exists(path):
            raise KeyError(project_id)
        with open(path, encoding="utf-8") as fh:
            return project_from_dict(json.load(fh))

    def save(self, project: Project) -> None:
        path = self._path(project.id)
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(project_to_dict(project), fh)
        os.replace(tmp, path)

    def list_ids(self) -> list[str]:
        return sorted(
            name[: -len(".json")]
            for name in os.listdir(self.data_dir)
            if name.endswith(".json")
        )


def create_app(
    data_dir: str,
    backends: Optional[Backends] = None,
    config: PipelineConfig = PipelineConfig(),
    kb_records: Optional[list[KnowledgeRecord]] = None,
    icons: Optional[list[IconRecord]] = None,
) -> FastAPI:
    backends = backends or Backends.from_env()
    kb_records = kb_records or []
    store = ProjectStore(data_dir)
    icon_index = IconIndex(icons, backends.embed) if icons else None
    kb_index: Optional[Index] = None
    if kb_records:
        kb_index = build_index(
            [(r.id, knowledge_record_to_text(r)) for r in kb_records], backends.embed
        )
    idempotency_cache: dict[tuple[str, str], dict] = {}
    cache_guard = threading.Lock()

    app = FastAPI(title="protoflow")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def get_project(project_id: str) -> Project:
        try:
            return store.load(project_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"project {project_id} not found")

    def parse_input(payload: dict) -> DesignInput:
        try:
            inp = serde.design_input_from_dict(payload)
            inp.validate()
            return inp
        except (KeyError, TypeError) as e:
            raise HTTPException(status_code=422, detail=f"bad input: missing {e}")
        except (KnowledgeError, ValueError) as e:
            raise HTTPException(status_code=422, detail=str(e))

    def check_revision(project: Project, expected: Optional[int]) -> None:
        if expected is not None and expected != project.revision:
            raise HTTPException(
                status_code=409,
                detail=f"stale revision {expected}, current is {project.revision}",
            )

    def cached_response(project_id: str, key: Optional[str]):
        if key is None:
            return None
        with cache_guard:
            return idempotency_cache.get((project_id, key))

    def remember_response(project_id: str, key: Optional[str], doc: dict) -> None:
        if key is not None:
            with cache_guard:
                idempotency_cache[(project_id, key)] = doc

    def run_locked(project_id: str, fn):
        lock = store.lock(project_id)
        if not lock.acquire(blocking=False):
            raise HTTPException(
                status_code=409, detail=f"project {project_id} has a generation in flight"
            )
        try:
            return fn()
        finally:
            lock.release()

    def run_pipeline(fn):
        try:
            return fn()
        except ThemeParseError as e:
            raise HTTPException(status_code=502, detail=f"theme description stage failed: {e}")
        except OrchestrationError as e:
            raise HTTPException(status_code=502, detail=f"generation failed: {e}")

    @app.post("/api/projects", status_code=201)
    def create_project(payload: dict = Body(...)):
        inp = parse_input(payload)
        now = time.time()
        project = Project(
            id=uuid.uuid4().hex[:12],
            input=inp,
            trace=None,
            created=now,
            updated=now,
            revision=1,
        )
        store.save(project)
        return project_to_dict(project)

    @app.get("/api/projects")
    def list_projects():
        out = []
        for pid in store.list_ids():
            p = store.load(pid)
            out.append({
                "id": p.id,
                "revision": p.revision,
                "updated": p.updated,
                "prompt": p.input.prompt,
                "has_trace": p.trace is not None,
            })
        return out

    @app.get("/api/projects/{project_id}")
    def read_project(project_id: str):
        return project_to_dict(get_project(project_id))

    @app.put("/api/projects/{project_id}")
    def update_project(
        project_id: str,
        payload: dict = Body(...),
        idempotency_key: Optional[str] = Header(default=None),
    ):
        cached = cached_response(project_id, idempotency_key)
        if cached is not None:
            return cached

        def mutate():
            project = get_project(project_id)
            check_revision(project, payload.get("revision"))
            project.input = parse_input(payload["input"])
            project.trace = None  # input changed; any old trace is stale
            project.revision += 1
            project.updated = time.time()
            store.save(project)
            return project_to_dict(project)

        doc = run_locked(project_id, mutate)
        remember_response(project_id, idempotency_key, doc)
        return doc

    @app.post("/api/projects/{project_id}/generate")
    def generate(
        project_id: str,
        payload: dict = Body(default={}),
        idempotency_key: Optional[str] = Header(default=None),
    ):
        cached = cached_response(project_id, idempotency_key)
        if cached is not None:
            return cached

        def mutate():
            project = get_project(project_id)
            check_revision(project, payload.get("revision"))
            trace = run_pipeline(lambda: generate_prototype(
                project.input, backends, kb_records, icon_index, config, index=kb_index
            ))
            project.trace = trace
            project.revision += 1
            project.updated = time.time()
            store.save(project)
            return project_to_dict(project)

        doc = run_locked(project_id, mutate)
        remember_response(project_id, idempotency_key, doc)
        return doc

    @app.put("/api/projects/{project_id}/theme")
    def update_theme(
        project_id: str,
        payload: dict = Body(...),
        idempotency_key: Optional[str] = Header(default=None),
    ):
        cached = cached_response(project_id, idempotency_key)
        if cached is not None:
            return cached

        def mutate():
            project = get_project(project_id)
            check_revision(project, payload.get("revision"))
            if project.trace is None:
                raise HTTPException(status_code=409, detail="project has no generation yet")
            try:
                theme = serde.theme_description_from_dict(payload["theme"])
                theme.validate(len(project.input.layout.components))
            except (KeyError, TypeError, ValueError) as e:
                raise HTTPException(status_code=422, detail=f"bad theme: {e}")
            trace = run_pipeline(lambda: regenerate_all(
                project.trace, project.input, theme, backends, icon_index, config
            ))
            project.trace = trace
            project.revision += 1
            project.updated = time.time()
            store.save(project)
            return project_to_dict(project)

        doc = run_locked(project_id, mutate)
        remember_response(project_id, idempotency_key, doc)
        return doc

    @app.put("/api/projects/{project_id}/components/{index}")
    def update_component(
        project_id: str,
        index: int,
        payload: dict = Body(...),
        idempotency_key: Optional[str] = Header(default=None),
    ):
        cached = cached_response(project_id, idempotency_key)
        if cached is not None:
            return cached

        def mutate():
            project = get_project(project_id)
            check_revision(project, payload.get("revision"))
            if project.trace is None:
                raise HTTPException(status_code=409, detail="project has no generation yet")
            if not (0 <= index < len(project.input.layout.components)):
                raise HTTPException(status_code=422, detail=f"component index {index} out of range")
            trace = run_pipeline(lambda: regenerate_component(
                project.trace, project.input, index, payload.get("hint"),
                backends, icon_index, config,
            ))
            project.trace = trace
            project.revision += 1
            project.updated = time.time()
            store.save(project)
            return project_to_dict(project)

        doc = run_locked(project_id, mutate)
        remember_response(project_id, idempotency_key, doc)
        return doc

    @app.get("/api/projects/{project_id}/trace")
    def read_trace(project_id: str):
        project = get_project(project_id)
        if project.trace is None:
            raise HTTPException(status_code=404, detail="project has no generation yet")
        return serde.trace_to_dict(project.trace)

    @app.get("/api/projects/{project_id}/export.svg")
    def export_svg(project_id: str):
        project = get_project(project_id)
        if project.trace is None:
            raise HTTPException(status_code=404, detail="project has no generation yet")
        proto = build_prototype(project.input, project.trace)
        return Response(content=proto.svg, media_type="image/svg+xml")

    @app.get("/api/projects/{project_id}/export.json")
    def export_json(project_id: str):
        project = get_project(project_id)
        if project.trace is None:
            raise HTTPException(status_code=404, detail="project has no generation yet")
        proto = build_prototype(project.input, project.trace)
        return export_project(proto)

    return app
