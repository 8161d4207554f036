"""Task-guided meta-path selection.

Stage 1 trains the joint model once per candidate path and ranks the
paths by validation MAP@3 (Recall@3 breaks ties).  Stage 2 trains on the
growing prefixes of that ranking and keeps the best prefix.  Together the
two stages need at most ``2 * len(candidates)`` training runs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .corpus import Holdout
from .errors import AuthorIdError
from .evaluation import Sampled, evaluate
from .metapath import PathAdjacency, materialize, parse_path_spec
from .trainer import TrainConfig, train

log = logging.getLogger(__name__)

UTILITY_K = 3


@dataclass(frozen=True)
class PathUtility:
    paths: tuple[str, ...]
    map_at_3: float
    recall_at_3: float

    @property
    def key(self) -> tuple[float, float]:
        return (self.map_at_3, self.recall_at_3)

    @property
    def failed(self) -> bool:
        return self.map_at_3 == float("-inf")


@dataclass
class SelectionData:
    """Training view plus validation papers shared by every selection run."""

    holdout: Holdout
    protocol: Sampled = Sampled(100)
    eval_seed: int = 0
    _cache: dict[str, PathAdjacency] = field(default_factory=dict, repr=False)

    def adjacency(self, spec: str) -> PathAdjacency:
        if spec not in self._cache:
            h = self.holdout
            self._cache[spec] = materialize(parse_path_spec(spec), h.edges, len(h.catalog))
        return self._cache[spec]


@dataclass
class SelectionReport:
    single: list[PathUtility]
    prefixes: list[PathUtility]
    selected: list[str]
    baseline: PathUtility | None = None
    runs: int = 0

    def to_tsv(self) -> str:
        out = ["stage\tpaths\tMAP@3\tRecall@3"]
        if self.baseline is not None:
            out.append(f"baseline\t-\t{self.baseline.map_at_3!r}\t{self.baseline.recall_at_3!r}")
        for u in self.single:
            out.append(f"single\t{','.join(u.paths)}\t{u.map_at_3!r}\t{u.recall_at_3!r}")
        for u in self.prefixes:
            out.append(f"prefix\t{','.join(u.paths)}\t{u.map_at_3!r}\t{u.recall_at_3!r}")
        out.append(f"selected\t{','.join(self.selected)}\t\t")
        return "\n".join(out) + "\n"

    def summary(self) -> str:
        lines = [f"training runs: {self.runs}"]
        if self.baseline is not None:
            lines.append(f"task-only baseline MAP@3 {self.baseline.map_at_3:.4f}")
        lines.append("single-path ranking:")
        lines += [f"  {','.join(u.paths):<10} MAP@3 {u.map_at_3:.4f}  Recall@3 {u.recall_at_3:.4f}"
                  for u in self.single]
        lines.append("additive prefixes:")
        lines += [f"  +{u.paths[-1]:<9} MAP@3 {u.map_at_3:.4f}  Recall@3 {u.recall_at_3:.4f}"
                  for u in self.prefixes]
        lines.append("selected: " + ", ".join(self.selected))
        return "\n".join(lines) + "\n"


def path_utility(specs, base_config: TrainConfig, data: SelectionData) -> PathUtility:
    """Validation MAP@3 / Recall@3 of one joint training run on ``specs``."""
    specs = tuple(specs)
    h = data.holdout
    config = base_config.replace(paths=list(specs))
    if not specs:
        config = config.replace(omega=0.0)
    try:
        model, _ = train(config, h.catalog, [data.adjacency(s) for s in specs], h.train)
        result = evaluate(model, h.valid, h.catalog, data.protocol, ks=(UTILITY_K,),
                          seed=data.eval_seed)
    except AuthorIdError as exc:
        log.warning("run on %s failed: %s", ",".join(specs) or "<task only>", exc)
        return PathUtility(specs, float("-inf"), float("-inf"))
    return PathUtility(specs, result.metric("map", UTILITY_K), result.metric("recall", UTILITY_K))


def single_path_scores(candidates, base_config: TrainConfig, data: SelectionData
                       ) -> list[PathUtility]:
    """One joint run per candidate; sorted best first (stable on ties)."""
    scores = [path_utility([str(c)], base_config, data) for c in candidates]
    return sorted(scores, key=lambda u: u.key, reverse=True)


def greedy_additive(ranked: list[PathUtility], base_config: TrainConfig, data: SelectionData,
                    baseline: PathUtility | None = None) -> SelectionReport:
    """Evaluate growing prefixes of ``ranked`` and keep the best one.

    With a ``baseline``, paths that did not beat it in stage 1 are left out
    (the top-ranked path is always kept).  The length-1 prefix reuses its
    stage-1 result, which is the same deterministic run.
    """
    if not ranked:
        raise ValueError("no ranked paths")
    usable = [u for u in ranked if not u.failed]
    if not usable:
        usable = ranked[:1]
    pool = [usable[0]] + [u for u in usable[1:]
                          if baseline is None or u.key > baseline.key]
    prefixes = [pool[0]]
    runs = 0
    for n in range(2, len(pool) + 1):
        specs = [p for u in pool[:n] for p in u.paths]
        prefixes.append(path_utility(specs, base_config, data))
        runs += 1
    best = max(range(len(prefixes)), key=lambda n: (prefixes[n].key, -n))
    return SelectionReport(single=list(ranked), prefixes=prefixes,
                           selected=list(prefixes[best].paths), baseline=baseline, runs=runs)


def select_paths(candidates, base_config: TrainConfig, data: SelectionData,
                 use_baseline: bool = True) -> SelectionReport:
    """Both stages; returns the report with the total number of training runs."""
    candidates = [str(c) for c in candidates]
    ranked = single_path_scores(candidates, base_config, data)
    baseline = path_utility([], base_config, data) if use_baseline else None
    report = greedy_additive(ranked, base_config, data, baseline)
    report.runs += len(candidates) + (1 if use_baseline else 0)
    return report
