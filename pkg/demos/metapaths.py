"""Meta-path adjacencies on a small synthetic bibliographic network.

Run: python3 demos/metapaths.py
"""
import numpy as np

from authorid.metapath import DEFAULT_CANDIDATES, compose, materialize, normalize, parse_path_spec
from authorid.synthetic import SyntheticSpec, generate

corpus = generate(SyntheticSpec(n_papers=600, n_authors=80, n_keywords=150), seed=0)
cat, edges = corpus.catalog, corpus.edges
print(f"{len(cat)} nodes, {len(edges)} edges")

print(f"\n{'path':<8}{'entries':>10}{'path instances':>16}")
for spec in DEFAULT_CANDIDATES:
    adj = materialize(parse_path_spec(spec), edges, len(cat))
    print(f"{spec:<8}{len(adj):>10}{adj.total_raw_weight:>16.0f}")

# composing two hops multiplies counts: A-P followed by P-W gives A-P-W
ap = materialize(parse_path_spec("A-P"), edges, len(cat))
pw = materialize(parse_path_spec("P-W"), edges, len(cat))
apw = compose(ap, pw)
direct = materialize(parse_path_spec("A-P-W"), edges, len(cat))
print("\ncompose(A-P, P-W) == materialize(A-P-W):",
      np.array_equal(apw.weights, direct.weights))

# the sampler sees the normalized distribution over (i, j) pairs
p = normalize(direct)
top = np.argsort(-p.weights)[:3]
for k in top:
    print(f"  P({cat.ids[p.rows[k]]} -> {cat.ids[p.cols[k]]}) = {p.weights[k]:.5f}")
