"""Quick end-to-end check of the compiled `collab` extension.

Build and run from the repository root:

    cargo build --release -p collab-py
    cp target/release/libcollab.so crates/py/python/collab.so
    python3 crates/py/python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import collab  # noqa: E402


def main():
    assert set(collab.STRATEGIES) == {"Best+I", "Conf+I", "Best+LI", "Conf+LI", "LMaj+LI"}

    model = collab.NkModel(12, 3, seed=42)
    assert (model.n, model.k) == (12, 3)
    zeros = "0" * 12
    f = model.fitness(zeros)
    assert 0.0 <= f <= 1.0
    mean_locus = sum(model.locus_value(zeros, i) for i in range(12)) / 12
    assert math.isclose(f, mean_locus, rel_tol=1e-12)
    assert math.isclose(model.local_score(zeros, list(range(12))), f, rel_tol=1e-12)

    net = collab.ConcernNetwork(model, 0.0, seed=1)
    assert len(net) == 24
    assert net.concern(0) == net.concern(1)
    assert 1 in net.neighbors(0)

    r = collab.run_trial("Best+I", rewire_p=0.0, seed=3, n=40, k=3, iterations=60)
    assert len(r.trajectory) == 61
    assert r.performance == r.trajectory[-1]
    assert r.converged_at <= 60
    again = collab.run_trial("Best+I", rewire_p=0.0, seed=3, n=40, k=3, iterations=60)
    assert again.trajectory == r.trajectory

    rows = collab.run_sweep("desk", trials=1, n=24, rewire=[0.0], strategies=["Conf+I", "LMaj+LI"])
    assert [row["strategy"] for row in rows] == ["Conf+I", "LMaj+LI"]

    edges = [(0, 1), (1, 2), (2, 0), (2, 3)]
    m = collab.graph_metrics(4, edges, exact=True)
    assert m["edges"] == 4 and m["mean_min_cut"] == 1.0

    stats = collab.project_metrics(
        "project,article,timestamp,old_grade,new_grade,revisions\n"
        "W,a,2015-01-01,Start,C,10\n"
    )
    assert stats[0]["E_C"] == 0.1 and stats[0]["P"] == 0.0

    fit = collab.standardized_ols([1, 2, 3, 4, 5], [1, 3, 2, 5, 4])
    assert math.isclose(fit["slope"], 0.8, rel_tol=1e-12)

    try:
        collab.run_trial("Best+X")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown strategy accepted")

    print("collab smoke test passed")


if __name__ == "__main__":
    main()
