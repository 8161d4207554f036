"""Task-only, network-only and joint embeddings compared on held-out papers.

Run: python3 demos/train_and_evaluate.py   (about ten seconds)
"""
from authorid.evaluation import Sampled, WholeSet, evaluate
from authorid.metapath import materialize, parse_path_spec
from authorid.synthetic import SyntheticSpec, generate
from authorid.trainer import TrainConfig, train

corpus = generate(SyntheticSpec(), seed=0)
cat = corpus.catalog
base = TrainConfig(dim=64, lr_initial=0.1, total_samples=1_000_000, seed=0)

variants = {
    "task only (omega=0)": (0.0, []),
    "network only (omega=1)": (1.0, ["P-A", "P-P", "P-V", "P-W", "P-Y"]),
    "joint (omega=0.8)": (0.8, ["P-A", "P-P"]),
}
print(f"{len(corpus.train)} training papers, {len(corpus.test)} test papers\n")
print(f"{'variant':<24}{'MAP@3':>8}{'Rec@10':>8}{'whole MAP@3':>13}{'samples/s':>12}")
for name, (omega, specs) in variants.items():
    paths = [materialize(parse_path_spec(s), corpus.edges, len(cat)) for s in specs]
    model, report = train(base.replace(omega=omega, paths=specs), cat, paths, corpus.train)
    sampled = evaluate(model, corpus.test, cat, Sampled(100))
    whole = evaluate(model, corpus.test, cat, WholeSet(), ks=(3,))
    print(f"{name:<24}{sampled.metric('map', 3):>8.3f}{sampled.metric('recall', 10):>8.3f}"
          f"{whole.metric('map', 3):>13.3f}{report.samples_per_second:>12.3g}")
