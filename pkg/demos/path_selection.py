"""Greedy task-guided selection over the default candidate paths.

Candidates are ranked by validation MAP@3 when trained alone with the
task, then growing prefixes of that ranking are tried and the best kept.
The validation papers are the final training year.

Run: python3 demos/path_selection.py   (about fifteen seconds)
"""
from authorid.corpus import temporal_holdout
from authorid.metapath import DEFAULT_CANDIDATES
from authorid.path_selection import SelectionData, select_paths
from authorid.synthetic import SyntheticSpec, generate
from authorid.trainer import TrainConfig

corpus = generate(SyntheticSpec(), seed=0)
holdout = temporal_holdout(corpus.catalog, corpus.edges)
print(f"validation year {holdout.valid_year:.0f}: {len(holdout.valid)} papers, "
      f"{len(holdout.train)} for training\n")
base = TrainConfig(omega=0.8, dim=64, lr_initial=0.1, total_samples=1_000_000, seed=0)
report = select_paths(list(DEFAULT_CANDIDATES), base, SelectionData(holdout))
print(report.summary())
