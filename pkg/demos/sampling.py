"""Alias tables and degree^0.75 noise distributions.

Run: python3 demos/sampling.py
"""
import numpy as np

from authorid.graph_store import LinkType, NodeType
from authorid.sampling import alias_draw_many, build_alias, build_noise, rng_state
from authorid.synthetic import SyntheticSpec, generate

weights = np.array([1.0, 2.0, 3.0, 0.0, 4.0])
table = build_alias(weights)
print("target      ", weights / weights.sum())
print("table exact ", table.probabilities())
counts = alias_draw_many(table.prob, table.alias, 1_000_000, rng_state(0))
print("1e6 draws   ", counts / counts.sum())

corpus = generate(SyntheticSpec(), seed=0)
noise = build_noise(corpus.catalog, NodeType.AUTHOR, LinkType.PA, 0.75)
deg = corpus.catalog.degrees[noise.support, int(LinkType.PA)]
busiest = noise.support[np.argmax(deg)]
print(f"\n{len(noise.support)} authors with papers; the most productive "
      f"({deg.max()} papers) is drawn as a negative with p={noise.probability_of(busiest):.4f}, "
      f"versus {deg.max() / deg.sum():.4f} under raw degree")
