"""Joint asynchronous training of the task and network objectives.

Each worker repeatedly flips a coin with probability ``omega`` to choose
the network objective (otherwise the author-ranking objective), draws a
mini-batch for it and applies lock-free SGD updates to the shared model.
The learning rate decays linearly with global progress down to a floor.
"""
from __future__ import annotations

import threading
import time
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import _kernels
from .errors import ConfigConflict, ExhaustedRejection, NonFiniteUpdate
from .graph_store import LinkType, NodeCatalog, NodeType
from .metapath import PathAdjacency, normalize
from .objectives import (
    EmbeddingModel,
    PaperInstance,
    hinge_loss,
    nce_log_prob,
    paper_repr,
)
from .sampling import (
    DEFAULT_NOISE_EXPONENT,
    build_alias,
    build_noise,
    rng_state,
    sample_alias,
)


class Task(Enum):
    NETWORK_GENERAL = _kernels.NETWORK
    TASK_SPECIFIC = _kernels.TASK


def schedule_task(rng: np.random.Generator, omega: float) -> Task:
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"omega must lie in [0, 1], got {omega}")
    return Task.NETWORK_GENERAL if rng.random() < omega else Task.TASK_SPECIFIC


@dataclass
class TrainConfig:
    omega: float = 0.8
    lam: float = 1e-4
    margin: float = 1.0
    k_negatives: int = 5
    dim: int = 128
    lr_initial: float = 0.025
    total_samples: int = 1_000_000
    batch_size: int = 512
    threads: int = 1
    seed: int = 0
    paths: list[str] = field(default_factory=list)
    noise_exponent: float = DEFAULT_NOISE_EXPONENT

    def __post_init__(self):
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError(f"omega must lie in [0, 1], got {self.omega}")
        if self.batch_size < 1 or self.threads < 1 or self.k_negatives < 1 or self.dim < 1:
            raise ValueError("batch_size, threads, k_negatives and dim must be >= 1")
        if self.lam < 0 or self.margin <= 0 or self.lr_initial <= 0 or self.total_samples < 0:
            raise ValueError("need lam >= 0, margin > 0, lr_initial > 0, total_samples >= 0")
        self.paths = [str(p) for p in self.paths]

    def replace(self, **changes) -> "TrainConfig":
        return TrainConfig(**{**asdict(self), **changes})


@dataclass
class RunReport:
    samples_processed: dict[str, int]
    wall_time: float
    hinge_curve: list[float]
    nll_curve: list[float]
    config: dict
    model_path: str | None = None

    @property
    def total_processed(self) -> int:
        return sum(self.samples_processed.values())

    @property
    def samples_per_second(self) -> float:
        return self.total_processed / self.wall_time if self.wall_time > 0 else float("inf")

    def to_text(self) -> str:
        lines = [f"samples_network={self.samples_processed['network']}",
                 f"samples_task={self.samples_processed['task']}",
                 f"wall_time={self.wall_time!r}",
                 f"samples_per_second={self.samples_per_second!r}",
                 "hinge_curve=" + ",".join(repr(v) for v in self.hinge_curve),
                 "nll_curve=" + ",".join(repr(v) for v in self.nll_curve),
                 f"model_path={self.model_path or ''}"]
        for key, val in self.config.items():
            if isinstance(val, list):
                val = ",".join(map(str, val))
            lines.append(f"config.{key}={val}")
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())


# ------------------------------------------------------------------ packing

@dataclass
class PackedInstances:
    x_ptr: np.ndarray
    x_idx: np.ndarray
    a_ptr: np.ndarray
    a_idx: np.ndarray

    @classmethod
    def build(cls, instances) -> "PackedInstances":
        x_lens, x_parts, a_lens, a_parts = [], [], [], []
        for inst in instances:
            for xs in inst.neighbors:
                x_lens.append(len(xs))
                x_parts.append(xs)
            a = inst.author_array
            a_lens.append(len(a))
            a_parts.append(a)
        x_ptr = np.zeros(len(x_lens) + 1, np.int64)
        np.cumsum(x_lens, out=x_ptr[1:])
        a_ptr = np.zeros(len(a_lens) + 1, np.int64)
        np.cumsum(a_lens, out=a_ptr[1:])
        cat = lambda parts: (np.concatenate(parts).astype(np.int64) if parts
                             else np.zeros(0, np.int64))
        return cls(x_ptr, cat(x_parts), a_ptr, cat(a_parts))


@dataclass
class PackedPaths:
    e_ptr: np.ndarray
    e_src: np.ndarray
    e_dst: np.ndarray
    e_prob: np.ndarray
    e_alias: np.ndarray
    z_ptr: np.ndarray
    z_support: np.ndarray
    z_prob: np.ndarray
    z_alias: np.ndarray

    @classmethod
    def build(cls, paths, catalog: NodeCatalog, exponent: float) -> "PackedPaths":
        e_ptr, z_ptr = [0], [0]
        cols = {k: [] for k in ("src", "dst", "prob", "alias", "sup", "zprob", "zalias")}
        for adj in paths:
            edge_table = build_alias(adj.weights)
            noise = build_noise(catalog, adj.path.dest_type, adj.path.last_link, exponent)
            cols["src"].append(adj.rows)
            cols["dst"].append(adj.cols)
            cols["prob"].append(edge_table.prob)
            cols["alias"].append(edge_table.alias)
            cols["sup"].append(noise.support)
            cols["zprob"].append(noise.table.prob)
            cols["zalias"].append(noise.table.alias)
            e_ptr.append(e_ptr[-1] + len(adj))
            z_ptr.append(z_ptr[-1] + len(noise.support))

        def cat(key, dtype):
            return np.concatenate(cols[key]).astype(dtype) if cols[key] else np.zeros(0, dtype)

        return cls(np.asarray(e_ptr, np.int64), cat("src", np.int64), cat("dst", np.int64),
                   cat("prob", np.float64), cat("alias", np.int64),
                   np.asarray(z_ptr, np.int64), cat("sup", np.int64),
                   cat("zprob", np.float64), cat("zalias", np.int64))


def _author_noise(catalog: NodeCatalog, exponent: float):
    return build_noise(catalog, NodeType.AUTHOR, LinkType.PA, exponent)


# ------------------------------------------------------------------ training

def train(config: TrainConfig, catalog: NodeCatalog, paths: list[PathAdjacency],
          instances: list[PaperInstance], model: EmbeddingModel | None = None
          ) -> tuple[EmbeddingModel, RunReport]:
    """Run lock-free SGD on the joint objective for ``config.total_samples`` samples."""
    paths = [normalize(p) for p in paths]
    instances = [i for i in instances if i.authors and not i.is_empty()]
    if config.omega > 0 and not paths:
        raise ConfigConflict("network objective requested (omega > 0) but no paths given")
    if config.omega < 1 and not instances:
        raise ConfigConflict("task objective requested (omega < 1) but no training instances")
    if config.paths and len(config.paths) != len(paths):
        raise ConfigConflict("config.paths does not match the supplied adjacencies")
    specs = [p.spec for p in paths]
    if model is None:
        model = EmbeddingModel.initialize(len(catalog), config.dim, specs, seed=config.seed)
    elif model.U.shape != (len(catalog), config.dim) or len(model.b) != len(paths):
        raise ConfigConflict("initial model does not match catalog, dim or path count")

    pi = PackedInstances.build(instances)
    pp = PackedPaths.build(paths, catalog, config.noise_exponent)
    if config.omega < 1:
        an = _author_noise(catalog, config.noise_exponent)
        an_prob, an_alias, an_support = an.table.prob, an.table.alias, an.support
    else:
        an_prob = np.ones(1)
        an_alias = np.zeros(1, np.int64)
        an_support = np.zeros(1, np.int64)

    n_threads = config.threads
    total = config.total_samples
    quotas = [total // n_threads + (1 if t < total % n_threads else 0) for t in range(n_threads)]
    max_batches = max(1, -(-max(quotas) // config.batch_size))
    progress = np.zeros(n_threads, np.int64)
    counts = np.zeros((n_threads, 2), np.int64)
    log_task = np.full((n_threads, max_batches), -1, np.int64)
    log_loss = np.zeros((n_threads, max_batches))
    log_len = np.zeros(n_threads, np.int64)
    status = np.zeros(1, np.int64)
    states = [rng_state(config.seed ^ t) for t in range(n_threads)]

    def work(t):
        _kernels.run_worker(
            t, quotas[t], config.batch_size, config.omega, max(total, 1),
            config.lr_initial, config.lam, config.margin, config.k_negatives,
            model.U, model.w, model.b,
            pi.x_ptr, pi.x_idx, pi.a_ptr, pi.a_idx, an_prob, an_alias, an_support,
            pp.e_ptr, pp.e_src, pp.e_dst, pp.e_prob, pp.e_alias,
            pp.z_ptr, pp.z_support, pp.z_prob, pp.z_alias,
            states[t], progress, counts, log_task, log_loss, log_len, status)

    start = time.perf_counter()
    if n_threads == 1:
        work(0)
    else:
        workers = [threading.Thread(target=work, args=(t,)) for t in range(n_threads)]
        for th in workers:
            th.start()
        for th in workers:
            th.join()
    wall = time.perf_counter() - start

    if status[0] == _kernels.EXHAUSTED:
        raise ExhaustedRejection("negative-author rejection sampling exhausted; "
                                 "some paper lists every noise author")
    if status[0] == _kernels.NON_FINITE or not model.is_finite():
        raise NonFiniteUpdate("training diverged (non-finite loss or parameters); "
                              "lower lr_initial")

    hinge, nll = _loss_curves(log_task, log_loss, log_len)
    report = RunReport(
        samples_processed={"network": int(counts[:, _kernels.NETWORK].sum()),
                           "task": int(counts[:, _kernels.TASK].sum())},
        wall_time=wall, hinge_curve=hinge, nll_curve=nll,
        config=asdict(config.replace(paths=specs)))
    return model, report


def _loss_curves(log_task, log_loss, log_len, points: int = 20):
    """Windowed means of per-batch losses, batches ordered round-robin over workers."""
    seq_task, seq_loss = [], []
    for nb in range(int(log_len.max(initial=0))):
        for t in range(log_task.shape[0]):
            if nb < log_len[t]:
                seq_task.append(log_task[t, nb])
                seq_loss.append(log_loss[t, nb])
    seq_task = np.asarray(seq_task)
    seq_loss = np.asarray(seq_loss)
    curves = []
    for task in (_kernels.TASK, _kernels.NETWORK):
        vals = seq_loss[seq_task == task]
        if len(vals) == 0:
            curves.append([])
            continue
        chunks = np.array_split(vals, min(points, len(vals)))
        curves.append([float(c.mean()) for c in chunks])
    return curves[0], curves[1]


# ------------------------------------------------------------------ probing

@dataclass
class ProbeSet:
    task: list[tuple[PaperInstance, int, int]]
    net: list[tuple[int, int, int, np.ndarray]]


def make_probe(catalog: NodeCatalog, paths, instances, n: int = 500, k: int = 5,
               seed: int = 0, exponent: float = DEFAULT_NOISE_EXPONENT) -> ProbeSet:
    """Fixed held-out samples for both objectives."""
    rng = np.random.default_rng(seed)
    task = []
    if instances:
        noise = _author_noise(catalog, exponent)
        for _ in range(n):
            inst = instances[rng.integers(len(instances))]
            if len(noise.support) <= len(inst.authors):
                continue
            a = int(inst.author_array[rng.integers(len(inst.authors))])
            neg = noise.sample(rng)
            while neg in inst.authors:
                neg = noise.sample(rng)
            task.append((inst, a, neg))
    net = []
    paths = [normalize(p) for p in paths]
    if paths:
        tables = [build_alias(p.weights) for p in paths]
        noises = [build_noise(catalog, p.path.dest_type, p.path.last_link, exponent) for p in paths]
        for _ in range(n):
            r = int(rng.integers(len(paths)))
            e = sample_alias(tables[r], rng)
            negs = noises[r].sample(rng, size=k)
            net.append((r, int(paths[r].rows[e]), int(paths[r].cols[e]), negs))
    return ProbeSet(task, net)


def loss_probe(model: EmbeddingModel, probe: ProbeSet, margin: float = 1.0
               ) -> tuple[float, float]:
    """Mean hinge loss and mean negative log-likelihood on a fixed probe set."""
    hinge = nll = float("nan")
    if probe.task:
        vals = []
        for inst, a, neg in probe.task:
            vp = paper_repr(inst, model)
            vals.append(hinge_loss(float(model.U[a] @ vp), float(model.U[neg] @ vp), margin))
        hinge = float(np.mean(vals))
    if probe.net:
        nll = float(np.mean([-nce_log_prob(i, j, negs, r, model)
                             for r, i, j, negs in probe.net]))
    return hinge, nll
