"""
Evaluating style transfer
=========================

Semantic and style cosines, the gated Valid Style score, its sensitivity to
the gate and the Pareto frontier of semantic versus style.
"""

import numpy as np

from charstyle.evaluation import (ParetoPoint, ScoredSample, aggregate_report, format_report, h_score,
                                  high_fidelity_filter, pareto_frontier, semantic_score, style_score,
                                  tau_sensitivity)

rng = np.random.default_rng(0)
neutral, generated, centroid = rng.standard_normal((3, 16))
generated = 0.8 * neutral + 0.6 * centroid
print("semantic %.3f, style %.3f" % (semantic_score(generated, neutral), style_score(generated, centroid)))

samples = [ScoredSample(f"s{i}", float(a), float(b), "demo")
           for i, (a, b) in enumerate(zip(rng.uniform(0.6, 1.0, 200), rng.uniform(0.3, 0.9, 200)))]
print(format_report([aggregate_report(samples, tau=0.75)]))
print({t: round(v, 4) for t, v in tau_sensitivity(samples).items()})

# published system means: which are Pareto-optimal?
rows = [("Model v2 (Inf-only)", 0.88, 0.63), ("Model v2", 0.84, 0.58), ("Model v1", 0.83, 0.58),
        ("Baseline B", 0.71, 0.76), ("Baseline C", 0.74, 0.69), ("Baseline D", 0.77, 0.87),
        ("Baseline A", 0.51, 0.88)]
points = [ParetoPoint(s, y, name) for name, s, y in rows]
print("frontier:", [p.label for p in pareto_frontier(points)])
print("semantic >= 0.75:", [p.label for p in high_fidelity_filter(points, 0.75)])

# harmonic mean of the published means does not give the published H column
print("H(0.88, 0.63) = %.3f" % h_score(0.88, 0.63))
