"""Multi-agent evolutionary driver around :func:`qevolve.landscape.iterate`.

Agents evolve independently for an episode, then the agent synchronization
step keeps the elite, respawns the others from it (or lets them continue),
and randomly perturbs some of them. Every random draw comes from a Philox
stream keyed by ``(master_seed, stream id, agent id, episode)``, so a run is
a pure function of its inputs no matter how agents are scheduled.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from ._rng import stream
from .landscape import CostFunction, IterateConfig, iterate
from .simcore import TWO_PI, canonicalize

log = logging.getLogger(__name__)

_AGENT_STREAM = 0
_SYNC_STREAM = 1
_INIT_STREAM = 2

CHECKPOINT_FORMAT = "qevolve-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class EvolutionConfig:
    n_agents: int = 1
    episode_length: int = 500
    p_exploration: float = 0.2
    p_randomization: float = 0.2
    r: float = 0.3
    subset_size: int = 8
    line_samples: int = 32
    landscape_order: Optional[int] = None
    max_evaluations: int = 1_000_000
    target_cost: float = -math.inf
    master_seed: int = 0

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("need at least one agent")
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        for name in ("p_exploration", "p_randomization"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} = {p} is not a probability")
        if self.r < 0:
            raise ValueError("r must be non-negative")
        if self.subset_size < 1 or self.line_samples < 2:
            raise ValueError("need subset_size >= 1 and line_samples >= 2")
        if self.landscape_order not in (None, 3, 5):
            raise ValueError("landscape_order must be 3 or 5")
        if self.master_seed < 0:
            raise ValueError("master_seed must be a non-negative integer")

    @property
    def iterate_config(self) -> IterateConfig:
        return IterateConfig(self.subset_size, self.line_samples)

    def fingerprint(self) -> str:
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Agent:
    id: int
    params: np.ndarray
    best_cost: float
    converged: bool = False


@dataclass
class TraceRecord:
    episode: int
    evaluations: int
    best_cost: float
    s2_normalized: Optional[float] = None
    overlap: Optional[float] = None


@dataclass
class RunResult:
    best_params: np.ndarray
    best_cost: float
    evaluations_used: int
    trace: list[TraceRecord]
    agents: list[Agent] = field(default_factory=list)
    episodes: int = 0
    stop_reason: str = ""


class _Ordered:
    """View of a cost function under a different declared landscape order."""

    def __init__(self, f: CostFunction, order: int):
        self.f = f
        self.order = order
        self.counter = f.counter
        self.n_params = f.n_params

    def __call__(self, params) -> float:
        return self.f(params)


def _with_order(f: CostFunction, order: Optional[int]) -> CostFunction:
    if order is None or order == f.order:
        return f
    if order < f.order:
        raise ValueError(f"an order-{order} fit cannot represent an order-{f.order} landscape")
    return _Ordered(f, order)


def run_episode(
    agent: Agent,
    f: CostFunction,
    cfg: EvolutionConfig,
    episode: int = 0,
    budget: Optional[int] = None,
) -> tuple[Agent, int]:
    """Advance one agent by up to ``cfg.episode_length`` iterations.

    Returns the updated agent and the evaluations spent. Stops early when the
    evaluation ``budget`` would be overrun, when the agent converges, or when
    it reaches ``cfg.target_cost``.
    """
    rng = stream(cfg.master_seed, _AGENT_STREAM, agent.id, episode)
    icfg = cfg.iterate_config
    params, cost = agent.params, agent.best_cost
    spent = 0
    converged = agent.converged
    if not converged:
        for _ in range(cfg.episode_length):
            remaining = None if budget is None else budget - spent
            res = iterate(f, params, icfg, rng, f0=cost, budget=remaining)
            spent += res.evaluations
            params, cost = res.params, res.cost
            if res.truncated:
                break
            if res.converged:
                converged = True
                break
            if cost <= cfg.target_cost:
                break
    return Agent(agent.id, params, cost, converged), spent


def best_agent(agents: list[Agent]) -> Agent:
    return min(agents, key=lambda a: (a.best_cost, a.id))


def synchronize(
    agents: list[Agent],
    cfg: EvolutionConfig,
    f: Optional[CostFunction] = None,
    episode: int = 0,
    budget: Optional[int] = None,
) -> tuple[list[Agent], int]:
    """Agent synchronization protocol.

    The elite (lowest cost, then lowest id) passes through untouched. Each
    other agent keeps its state with probability ``p_exploration`` and
    otherwise restarts from the elite; afterwards, with probability
    ``p_randomization``, every one of its parameters is shifted by an
    independent uniform draw from ``[-r, r]`` and its cost is re-evaluated
    with ``f``. Returns the new agents and the evaluations spent.
    """
    if not agents:
        raise ValueError("no agents to synchronize")
    if len(agents) == 1:
        return list(agents), 0
    elite = best_agent(agents)
    rng = stream(cfg.master_seed, _SYNC_STREAM, episode)
    out, spent = [], 0
    for a in sorted(agents, key=lambda a: a.id):
        if a is elite:
            out.append(a)
            continue
        keep = rng.random() < cfg.p_exploration
        perturb = rng.random() < cfg.p_randomization
        shift = rng.uniform(-cfg.r, cfg.r, size=a.params.size) if perturb else None
        if keep:
            new = Agent(a.id, a.params, a.best_cost, a.converged)
        else:
            new = Agent(a.id, elite.params.copy(), elite.best_cost, elite.converged)
        if perturb and f is not None and (budget is None or spent < budget):
            new.params = canonicalize(new.params + shift)
            new.best_cost = f(new.params)
            new.converged = False
            spent += 1
        out.append(new)
    return out, spent


def initial_params(n_params: int, init: Union[str, np.ndarray], seed: int, agent_id: int):
    if isinstance(init, str):
        if init == "zeros":
            return np.zeros(n_params)
        if init == "random":
            return stream(seed, _INIT_STREAM, agent_id).uniform(0.0, TWO_PI, n_params)
        raise ValueError(f"unknown init {init!r}")
    params = canonicalize(init)
    if params.shape != (n_params,):
        raise ValueError(f"initial parameters have shape {params.shape}, expected ({n_params},)")
    return params


def save_checkpoint(path, cfg: EvolutionConfig, episode: int, evaluations: int,
                    agents: list[Agent], trace: list[TraceRecord]) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config_hash": cfg.fingerprint(),
        "episode": episode,
        "evaluations": evaluations,
        "rng": {"scheme": "philox(master_seed, stream, agent, episode)", "next_episode": episode + 1},
        "agents": [
            {"id": a.id, "params": [float(x) for x in a.params],
             "best_cost": a.best_cost, "converged": a.converged}
            for a in agents
        ],
        "trace": [dataclasses.asdict(r) for r in trace],
    }
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(json.dumps(doc, indent=1))
    tmp.replace(path)


def load_checkpoint(path, cfg: EvolutionConfig) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')}")
    if doc["config_hash"] != cfg.fingerprint():
        raise ValueError("checkpoint was written with a different configuration")
    doc["agents"] = [
        Agent(a["id"], np.array(a["params"], dtype=np.float64), a["best_cost"], a["converged"])
        for a in doc["agents"]
    ]
    doc["trace"] = [TraceRecord(**r) for r in doc["trace"]]
    return doc


def run(
    f: CostFunction,
    cfg: EvolutionConfig,
    init: Union[str, np.ndarray] = "zeros",
    *,
    threads: int = 1,
    record_every: int = 1,
    on_record: Optional[Callable[[np.ndarray], dict]] = None,
    checkpoint: Optional[Union[str, Path]] = None,
    resume: bool = False,
    max_episodes: Optional[int] = None,
) -> RunResult:
    """Run episodes and synchronizations until the budget or target is reached.

    ``on_record`` receives the elite parameters whenever a trace record is
    written and may return extra fields (``s2_normalized``, ``overlap``).
    ``threads`` only changes speed: results are identical for any value.
    """
    f = _with_order(f, cfg.landscape_order)

    def record(episode, used, agents):
        elite = best_agent(agents)
        rec = TraceRecord(episode, used, elite.best_cost)
        if on_record is not None:
            for k, v in on_record(elite.params).items():
                setattr(rec, k, v)
        trace.append(rec)

    if resume and checkpoint is not None and Path(checkpoint).exists():
        doc = load_checkpoint(checkpoint, cfg)
        agents, used, trace = doc["agents"], doc["evaluations"], doc["trace"]
        episode = doc["episode"]
    else:
        agents, trace, used, episode = [], [], 0, 0
        for i in range(cfg.n_agents):
            x = initial_params(f.n_params, init, cfg.master_seed, i)
            agents.append(Agent(i, x, f(x)))
            used += 1
        record(0, used, agents)

    stop = ""
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        while True:
            elite = best_agent(agents)
            if elite.best_cost <= cfg.target_cost:
                stop = "target"
                break
            if used >= cfg.max_evaluations:
                stop = "budget"
                break
            if max_episodes is not None and episode >= max_episodes:
                stop = "max_episodes"
                break
            if all(a.converged for a in agents):
                stop = "converged"
                break
            episode += 1
            allowance = (cfg.max_evaluations - used) // len(agents)
            step = lambda a: run_episode(a, f, cfg, episode, allowance)
            results = list(pool.map(step, agents)) if pool else [step(a) for a in agents]
            agents = [a for a, _ in results]
            spent = sum(s for _, s in results)
            used += spent
            agents, sync_spent = synchronize(
                agents, cfg, f, episode, budget=cfg.max_evaluations - used
            )
            used += sync_spent
            if spent + sync_spent == 0:
                # no agent can afford another iteration
                stop = "budget"
                break
            if episode % record_every == 0:
                record(episode, used, agents)
            if checkpoint is not None:
                save_checkpoint(checkpoint, cfg, episode, used, agents, trace)
            log.debug("episode %d: best %.12g after %d evaluations",
                      episode, best_agent(agents).best_cost, used)
    finally:
        if pool:
            pool.shutdown()

    if trace[-1].evaluations != used:
        record(episode, used, agents)
    elite = best_agent(agents)
    return RunResult(elite.params.copy(), elite.best_cost, used, trace, agents, episode, stop)
