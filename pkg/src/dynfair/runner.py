"""Experiment orchestration: multi-trial simulations, metric logging, and the
controller timing benchmark."""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .clicksim import (
    NewsUserProfile,
    generate_synthetic_rating_matrix,
    load_groups,
    load_rating_matrix,
    news_relevance_prob,
    news_true_relevance,
    sample_clicks,
    sample_news_corpus,
    sample_news_users_batch,
    synthetic_group_ids,
)
from .core import Corpus, PropensityCurve, Ranking
from .estimation import (
    IpsEstimator,
    MlpRanker,
    NaiveCounter,
    ips_loss_gradient,
    sgd_step,
    skyline_loss_gradient,
)
from .fairness import (
    ExposureLedger,
    MeritTable,
    default_tracked_ks,
    estimated_merits,
    ndcg_at_ks,
)
from .policies import (
    FaircoConfig,
    FaircoPolicy,
    MmfConfig,
    MmfPolicy,
    rank_by_scores,
    rank_naive,
)

__all__ = [
    "ExperimentConfig",
    "RunResult",
    "run_experiment",
    "compute_ips_error",
    "benchmark_controllers",
    "summary_metric",
    "CSV_SCHEMA_VERSION",
]

CSV_SCHEMA_VERSION = 1
POLICIES = ("naive", "dultr-glob", "dultr", "skyline", "fairco", "mmf")
LAST_WINDOW = 1000


class ExperimentConfig(BaseModel):
    """Declarative description of one simulation run (one policy setting)."""

    scenario: Literal["news", "movie-synthetic", "movie-file"]
    policy: Literal["naive", "dultr-glob", "dultr", "skyline", "fairco", "mmf"]
    trials: int = Field(default=1, ge=1)
    steps: int = Field(default=6000, ge=1)
    seed: int = 0
    tracked_ks: Optional[list[int]] = None
    output_dir: Optional[str] = None
    metric_cadence: int = Field(default=50, ge=1)
    record_timing: bool = False
    workers: int = Field(default=1, ge=1)

    mmf_lambda: float = Field(default=0.6, ge=0.0, le=1.0)
    mmf_k: int = Field(default=10, ge=1)
    fairco_gain: float = Field(default=0.01, gt=0.0)

    news_docs: int = Field(default=30, ge=2)
    p_neg: float = Field(default=0.5, ge=0.0, le=1.0)
    merit_mc_users: int = Field(default=100_000, ge=100)

    num_users: int = Field(default=10_000, ge=1)
    num_docs: int = Field(default=100, ge=2)
    num_groups: int = Field(default=5, ge=2)
    latent_rank: int = Field(default=10, ge=1)
    sigmoid_a: float = 10.0
    sigmoid_b: float = 3.0
    group_spread: float = 1.0
    ratings_path: Optional[str] = None
    features_path: Optional[str] = None
    groups_path: Optional[str] = None

    learning_rate: float = Field(default=0.01, ge=0.0)
    hidden_units: int = Field(default=64, ge=1)
    ndcg_realized_gains: bool = False

    @model_validator(mode="after")
    def _check(self):
        if self.scenario == "news" and self.policy == "dultr":
            raise ValueError("dultr needs user features; the news scenario has none (use dultr-glob)")
        if self.scenario == "movie-file":
            for name in ("ratings_path", "features_path", "groups_path"):
                if getattr(self, name) is None:
                    raise ValueError(f"movie-file scenario requires {name}")
        return self

    def uses_model(self) -> bool:
        return self.scenario != "news" and self.policy in ("dultr", "skyline", "fairco", "mmf")


@dataclass
class RunResult:
    log_path: Path
    summary_path: Path
    summary: dict


@dataclass
class _TrialOutput:
    trial: int
    rows: list[str]
    final: dict[str, float]
    last_window: dict[str, float]
    mean_step_micros: float


def _trial_streams(seed: int, trial: int) -> list[np.random.Generator]:
    """Six independent child streams (corpus, user, relevance, click, policy,
    model) of the trial's seed, so policies sharing a seed face common
    random numbers on everything but their own decisions."""
    ss = np.random.SeedSequence(seed + trial)
    return [np.random.default_rng(child) for child in ss.spawn(6)]


class _NewsTrialData:
    def __init__(self, cfg: ExperimentConfig, corpus_rng: np.random.Generator, steps: int):
        self.corpus = sample_news_corpus(cfg.news_docs, corpus_rng)
        self.true_relevance = news_true_relevance(
            self.corpus, cfg.p_neg, corpus_rng, num_users=cfg.merit_mc_users
        )
        self.user_features = None
        self._p_neg = cfg.p_neg
        self._steps_drawn = 0
        self._polarities = np.empty(0)
        self._opennesses = np.empty(0)
        self._batch = steps

    def step_user(self, rng: np.random.Generator):
        if self._steps_drawn == self._polarities.shape[0]:
            pol, opn = sample_news_users_batch(self._p_neg, self._batch, rng)
            self._polarities = np.concatenate([self._polarities, pol])
            self._opennesses = np.concatenate([self._opennesses, opn])
        i = self._steps_drawn
        self._steps_drawn += 1
        user = NewsUserProfile(polarity=float(self._polarities[i]), openness=float(self._opennesses[i]))
        return None, news_relevance_prob(user, self.corpus.polarities)


class _MovieTrialData:
    def __init__(self, values: np.ndarray, features: np.ndarray, group_ids: np.ndarray):
        self.values = values
        self.features = features
        self.corpus = Corpus(group_ids=group_ids, gain_columns=np.arange(values.shape[1]))
        self.true_relevance = values.mean(axis=0)
        self.user_features = features

    def step_user(self, rng: np.random.Generator):
        uid = int(rng.integers(self.values.shape[0]))
        return self.features[uid], self.values[uid]


def _movie_shared(cfg: ExperimentConfig):
    if cfg.scenario == "movie-file":
        matrix = load_rating_matrix(cfg.ratings_path, cfg.features_path)
        group_ids = load_groups(cfg.groups_path, matrix.num_docs)
        return matrix.values, matrix.user_features, group_ids
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
    matrix = generate_synthetic_rating_matrix(
        cfg.num_users,
        cfg.num_docs,
        cfg.latent_rank,
        cfg.sigmoid_a,
        cfg.sigmoid_b,
        rng,
        num_groups=cfg.num_groups,
        group_spread=cfg.group_spread,
    )
    return matrix.values, matrix.user_features, synthetic_group_ids(cfg.num_docs, cfg.num_groups)


def compute_ips_error(estimator, true_relevance: np.ndarray) -> float:
    """Mean absolute gap between the estimator's per-document relevance and
    the ground truth."""
    est = estimator.estimates()
    true_relevance = np.asarray(true_relevance)
    if est.shape != true_relevance.shape:
        raise ValueError("estimate and truth must have the same length")
    return float(np.mean(np.abs(est - true_relevance)))


def _resolve_tracked_ks(cfg: ExperimentConfig, n: int) -> tuple[int, ...]:
    if cfg.tracked_ks is None:
        return default_tracked_ks(n)
    ks = tuple(sorted(set(int(k) for k in cfg.tracked_ks)))
    if not ks or ks[0] < 1 or ks[-1] > n:
        raise ValueError(f"tracked_ks must be a non-empty subset of [1, {n}]")
    return ks


def csv_header(tracked_ks) -> str:
    cols = ["trial", "step", "policy", "lambda"]
    cols += [f"ndcg@{k}" for k in tracked_ks]
    cols += [f"unfairness@{k}" for k in tracked_ks]
    cols += ["ips_error", "step_micros"]
    return ",".join(cols)


def _fmt(x: float) -> str:
    return repr(float(x))


def _run_trial(cfg: ExperimentConfig, trial: int, shared) -> _TrialOutput:
    corpus_rng, user_rng, rel_rng, click_rng, policy_rng, model_rng = _trial_streams(cfg.seed, trial)
    if cfg.scenario == "news":
        data = _NewsTrialData(cfg, corpus_rng, cfg.steps)
    else:
        data = _MovieTrialData(*shared)
    corpus = data.corpus
    n, m = corpus.n, corpus.m
    tracked_ks = _resolve_tracked_ks(cfg, n)
    ks_arr = np.asarray(tracked_ks, dtype=np.int64)
    curve = PropensityCurve()
    discounts = curve.values(n)
    true_R = data.true_relevance
    merit_true = (corpus.group_onehot @ true_R) / corpus.group_sizes
    if (merit_true <= 0.0).any():
        raise ValueError("a group has zero true merit; evaluation is undefined")

    ips = IpsEstimator(n)
    counter = NaiveCounter(n)
    model = (
        MlpRanker.initialize(data.user_features.shape[1], cfg.hidden_units, n, model_rng)
        if cfg.uses_model()
        else None
    )
    fairco = FaircoPolicy(corpus, FaircoConfig(cfg.fairco_gain), curve) if cfg.policy == "fairco" else None
    mmf = (
        MmfPolicy(corpus, MmfConfig(lam=cfg.mmf_lambda, k=min(cfg.mmf_k, n), use_ltr_model=cfg.uses_model()), curve)
        if cfg.policy == "mmf"
        else None
    )

    ledger = ExposureLedger(corpus, tracked_ks, curve)
    ndcg_sum = np.zeros(len(tracked_ks))
    window = min(LAST_WINDOW, cfg.steps)
    ndcg_ring = np.zeros((window, len(tracked_ks)))
    unf_ring = np.zeros((window, len(tracked_ks)))
    lam_str = _fmt(cfg.mmf_lambda) if cfg.policy == "mmf" else ""
    rows: list[str] = []
    unf_now = np.zeros(len(tracked_ks))
    ips_err = 0.0
    total_micros = 0.0
    window_micros = 0.0
    window_count = 0

    for t in range(1, cfg.steps + 1):
        t0 = time.perf_counter_ns()
        features, gain_probs = data.step_user(user_rng)
        realized = (rel_rng.random(n) < gain_probs).astype(np.int8)

        ips_est = ips.estimates()
        if model is not None:
            model_out, cache = model.forward_cached(features)
        else:
            model_out = None

        if cfg.policy == "naive":
            ranking = rank_naive(counter, timestep=t)
        elif cfg.policy == "dultr-glob":
            ranking = rank_by_scores(ips_est, timestep=t)
        elif cfg.policy == "dultr":
            ranking = rank_by_scores(model_out, timestep=t)
        elif cfg.policy == "skyline":
            ranking = rank_by_scores(model_out if model is not None else gain_probs, timestep=t)
        elif cfg.policy == "fairco":
            scores = model_out if model is not None else ips_est
            ranking = fairco.rank(scores, estimated_merits(ips_est, corpus), timestep=t)
        else:
            scores = model_out if model is not None else ips_est
            ranking = mmf.rank(scores, estimated_merits(ips_est, corpus), policy_rng, timestep=t)

        record = sample_clicks(ranking, realized, curve, click_rng)
        ips.update(record)
        counter.update(record)
        if model is not None:
            if cfg.policy == "skyline":
                grad = skyline_loss_gradient(model, realized, features)
            else:
                grad = ips_loss_gradient(model, record, features)
            sgd_step(model, grad, cfg.learning_rate)
        if fairco is not None:
            fairco.observe(ranking)
        if mmf is not None:
            mmf.observe(ranking)

        ledger.update(ranking)
        gains = realized if cfg.ndcg_realized_gains else gain_probs
        ndcg_now = ndcg_at_ks(ranking.order, gains, ks_arr, discounts)
        ndcg_sum += ndcg_now
        exp_mer = (ledger.cum_exposure / t) / merit_true[:, None]
        unf_now = np.abs(exp_mer[:, None, :] - exp_mer[None, :, :]).sum(axis=(0, 1)) / (m * (m - 1))
        slot = (t - 1) % window
        ndcg_ring[slot] = ndcg_now
        unf_ring[slot] = unf_now

        micros = (time.perf_counter_ns() - t0) / 1000.0
        total_micros += micros
        window_micros += micros
        window_count += 1

        if t % cfg.metric_cadence == 0 or t == cfg.steps:
            estimator = counter if cfg.policy == "naive" else ips
            ips_err = compute_ips_error(estimator, true_R)
            step_micros = _fmt(window_micros / window_count) if cfg.record_timing else "0"
            ndcg_mean = ndcg_sum / t
            rows.append(
                f"{trial},{t},{cfg.policy},{lam_str},"
                + ",".join(_fmt(v) for v in ndcg_mean)
                + ","
                + ",".join(_fmt(v) for v in unf_now)
                + f",{_fmt(ips_err)},{step_micros}"
            )
            window_micros = 0.0
            window_count = 0

    final: dict[str, float] = {}
    last: dict[str, float] = {}
    ndcg_mean = ndcg_sum / cfg.steps
    ndcg_last = ndcg_ring.mean(axis=0)
    unf_last = unf_ring.mean(axis=0)
    for j, k in enumerate(tracked_ks):
        final[f"ndcg@{k}"] = float(ndcg_mean[j])
        final[f"unfairness@{k}"] = float(unf_now[j])
        last[f"ndcg@{k}"] = float(ndcg_last[j])
        last[f"unfairness@{k}"] = float(unf_last[j])
    final["ips_error"] = float(ips_err)
    last["ips_error"] = float(ips_err)
    for vals in (final, last):
        for key, value in vals.items():
            if not np.isfinite(value):
                raise FloatingPointError(f"non-finite metric {key} in trial {trial}")
    return _TrialOutput(
        trial=trial,
        rows=rows,
        final=final,
        last_window=last,
        mean_step_micros=total_micros / cfg.steps,
    )


def _trial_task(args):
    cfg_json, trial, shared = args
    return _run_trial(ExperimentConfig.model_validate_json(cfg_json), trial, shared)


def summary_metric(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=float)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "std": std, "trials": [float(v) for v in values]}


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Run all trials for one policy setting, streaming the metric CSV and
    writing the cross-trial summary JSON."""
    if cfg.output_dir is None:
        raise ValueError("output_dir is required to run an experiment")
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    shared = _movie_shared(cfg) if cfg.scenario != "news" else None
    n = cfg.news_docs if cfg.scenario == "news" else shared[0].shape[1]
    tracked_ks = _resolve_tracked_ks(cfg, n)

    log_path = out_dir / "log.csv"
    outputs: list[_TrialOutput] = []
    with open(log_path, "w") as fh:
        fh.write(csv_header(tracked_ks) + "\n")
        if cfg.workers > 1 and cfg.trials > 1:
            cfg_json = cfg.model_dump_json()
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                for result in pool.map(_trial_task, [(cfg_json, i, shared) for i in range(cfg.trials)]):
                    outputs.append(result)
                    fh.write("\n".join(result.rows) + "\n")
                    fh.flush()
        else:
            for trial in range(cfg.trials):
                result = _run_trial(cfg, trial, shared)
                outputs.append(result)
                fh.write("\n".join(result.rows) + "\n")
                fh.flush()

    metric_keys = list(outputs[0].final.keys())
    summary = {
        "config": json.loads(cfg.model_dump_json()),
        "tracked_ks": list(tracked_ks),
        "metrics": {
            "final": {key: summary_metric([o.final[key] for o in outputs]) for key in metric_keys},
            "last1000": {key: summary_metric([o.last_window[key] for o in outputs]) for key in metric_keys},
        },
        "timing": {"mean_step_micros": float(np.mean([o.mean_step_micros for o in outputs]))},
    }
    summary_path = out_dir / "summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return RunResult(log_path=log_path, summary_path=summary_path, summary=summary)


def benchmark_controllers(
    n_values,
    k: int = 10,
    m: int = 5,
    repetitions: int = 200,
    seed: int = 0,
) -> list[dict]:
    """Per-step fairness-control cost of MMF vs FairCo at growing corpus
    sizes.

    Relevance estimation is excluded on both sides: estimates, estimated
    merits and the per-group queues are prepared outside the timed region.
    FairCo's timed step is what its production policy does per presented
    list: update full-list group exposure, perturb all n scores and re-rank.
    MMF's timed step is its controller work: update the k-prefix exposure
    scratch and make k fairness selections; it never touches documents
    outside the queues' heads.
    """
    from .policies import GroupPriorityQueues

    rows: list[dict] = []
    for n in n_values:
        if k > n:
            raise ValueError("k must not exceed n")
        rng = np.random.default_rng(np.random.SeedSequence([seed, int(n)]))
        corpus = Corpus(group_ids=np.arange(n) % m)
        estimates = rng.random(n)
        merits = estimated_merits(estimates, corpus)
        curve = PropensityCurve()
        prev = Ranking(order=rng.permutation(n), timestep=1)

        warmup = max(10, repetitions // 10)

        fairco = FaircoPolicy(corpus, FaircoConfig(0.01), curve)
        fairco.observe(prev)  # warm history so ExpMer is defined
        samples = []
        for rep in range(warmup + repetitions):
            t0 = time.perf_counter_ns()
            fairco.observe(prev)
            fairco.rank(estimates, merits, timestep=1)
            dt = time.perf_counter_ns() - t0
            if rep >= warmup:
                samples.append(dt)
        rows.append(_bench_row("fairco", n, k, m, repetitions, samples))

        mmf = MmfPolicy(corpus, MmfConfig(lam=1.0, k=k), curve)
        mmf.rank(estimates, merits, rng, timestep=1)
        mmf.observe(prev)  # warm history
        ctrl = mmf.controller
        queues = GroupPriorityQueues(estimates, corpus.group_ids, m)
        samples = []
        for rep in range(warmup + repetitions):
            if min(queues.remaining) < k:
                queues = GroupPriorityQueues(estimates, corpus.group_ids, m)
            t0 = time.perf_counter_ns()
            ctrl.begin_step(merits)
            for pos in range(k):
                g = ctrl.select_group(pos, queues.remaining)
                queues.pop_group(g)
                ctrl.place(pos, g)
            ctrl.commit_step()
            dt = time.perf_counter_ns() - t0
            if rep >= warmup:
                samples.append(dt)
        rows.append(_bench_row("mmf", n, k, m, repetitions, samples))
    return rows


def _bench_row(policy: str, n: int, k: int, m: int, repetitions: int, samples_ns) -> dict:
    arr = np.asarray(samples_ns, dtype=float) / 1000.0
    # median resists scheduler hiccups on shared machines
    return {
        "policy": policy, "n": int(n), "k": k, "m": m, "repetitions": repetitions,
        "mean_micros": float(arr.mean()), "median_micros": float(np.median(arr)),
    }
