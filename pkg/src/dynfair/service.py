"""HTTP service wrapping the simulator: submit experiment jobs, poll status,
fetch artifacts, run the controller benchmark and generate rating files."""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from pydantic import BaseModel, Field

from . import __version__
from .clicksim import generate_synthetic_rating_matrix, save_groups, save_rating_matrix, synthetic_group_ids
from .runner import ExperimentConfig, benchmark_controllers, run_experiment

__all__ = ["app", "create_app"]


class JobInfo(BaseModel):
    job_id: str
    status: Literal["queued", "running", "done", "failed"]
    error: Optional[str] = None
    summary: Optional[dict] = None
    log_csv: Optional[str] = None
    summary_json: Optional[str] = None


class BenchRequest(BaseModel):
    n_values: list[int] = Field(default=[1000, 10000], min_length=1)
    k: int = Field(default=10, ge=1)
    m: int = Field(default=5, ge=2)
    repetitions: int = Field(default=200, ge=1)
    seed: int = 0


class BenchRow(BaseModel):
    policy: str
    n: int
    k: int
    m: int
    repetitions: int
    mean_micros: float
    median_micros: float


class BenchResponse(BaseModel):
    rows: list[BenchRow]


class RatingsRequest(BaseModel):
    num_users: int = Field(default=10_000, ge=1)
    num_docs: int = Field(default=100, ge=2)
    num_groups: int = Field(default=5, ge=2)
    latent_rank: int = Field(default=10, ge=1)
    sigmoid_a: float = 10.0
    sigmoid_b: float = 3.0
    group_spread: float = 1.0
    seed: int = 0
    output_dir: str


class RatingsResponse(BaseModel):
    ratings_path: str
    features_path: str
    groups_path: str


class HealthResponse(BaseModel):
    status: str
    version: str


class _JobStore:
    """In-process job registry; experiments run on a worker thread."""

    def __init__(self, max_workers: int = 2):
        self._lock = threading.Lock()
        self._jobs: dict[str, JobInfo] = {}
        self._executor = ThreadPoolExecutor(max_workers=max_workers)

    def submit(self, cfg: ExperimentConfig) -> JobInfo:
        job_id = uuid.uuid4().hex[:12]
        info = JobInfo(job_id=job_id, status="queued")
        with self._lock:
            self._jobs[job_id] = info
        self._executor.submit(self._run, job_id, cfg)
        return info

    def _run(self, job_id: str, cfg: ExperimentConfig) -> None:
        self._set(job_id, status="running")
        try:
            result = run_experiment(cfg)
            self._set(
                job_id,
                status="done",
                summary=result.summary,
                log_csv=str(result.log_path),
                summary_json=str(result.summary_path),
            )
        except Exception as exc:  # job errors surface through the API
            self._set(job_id, status="failed", error=f"{type(exc).__name__}: {exc}")

    def _set(self, job_id: str, **updates) -> None:
        with self._lock:
            self._jobs[job_id] = self._jobs[job_id].model_copy(update=updates)

    def get(self, job_id: str) -> Optional[JobInfo]:
        with self._lock:
            return self._jobs.get(job_id)

    def all(self) -> list[JobInfo]:
        with self._lock:
            return list(self._jobs.values())


def create_app() -> FastAPI:
    app = FastAPI(title="dynfair", version=__version__)
    app.state.jobs = _JobStore()

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/experiments", response_model=JobInfo, status_code=202)
    def submit_experiment(cfg: ExperimentConfig) -> JobInfo:
        if cfg.output_dir is None:
            raise HTTPException(status_code=422, detail="output_dir is required")
        return app.state.jobs.submit(cfg)

    @app.get("/experiments", response_model=list[JobInfo])
    def list_experiments() -> list[JobInfo]:
        return app.state.jobs.all()

    @app.get("/experiments/{job_id}", response_model=JobInfo)
    def get_experiment(job_id: str) -> JobInfo:
        info = app.state.jobs.get(job_id)
        if info is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        return info

    @app.get("/experiments/{job_id}/log.csv")
    def get_log(job_id: str):
        info = app.state.jobs.get(job_id)
        if info is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        if info.status != "done" or info.log_csv is None:
            raise HTTPException(status_code=409, detail=f"job {job_id} is {info.status}")
        return FileResponse(info.log_csv, media_type="text/csv")

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest) -> BenchResponse:
        rows = benchmark_controllers(
            req.n_values, k=req.k, m=req.m, repetitions=req.repetitions, seed=req.seed
        )
        return BenchResponse(rows=[BenchRow(**row) for row in rows])

    @app.post("/ratings", response_model=RatingsResponse)
    def gen_ratings(req: RatingsRequest) -> RatingsResponse:
        out = Path(req.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        rng = np.random.default_rng(np.random.SeedSequence([req.seed, 0]))
        matrix = generate_synthetic_rating_matrix(
            req.num_users,
            req.num_docs,
            req.latent_rank,
            req.sigmoid_a,
            req.sigmoid_b,
            rng,
            num_groups=req.num_groups,
            group_spread=req.group_spread,
        )
        ratings_path = out / "ratings.csv"
        features_path = out / "features.csv"
        groups_path = out / "groups.csv"
        save_rating_matrix(matrix, ratings_path, features_path)
        save_groups(synthetic_group_ids(req.num_docs, req.num_groups), groups_path)
        return RatingsResponse(
            ratings_path=str(ratings_path),
            features_path=str(features_path),
            groups_path=str(groups_path),
        )

    return app


app = create_app()
