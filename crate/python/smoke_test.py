"""Smoke test for the qrest_py extension.

Build first, e.g. `maturin develop -m crates/py/Cargo.toml` or
`cd crates/py && pip install . --no-build-isolation`.
"""

import json
import math
import os
import tempfile

import qrest_py as q


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    plus = q.DensityMatrix([[0.5, 0.5], [0.5, 0.5]])
    close(q.c_l1(plus), 1.0, 1e-12)
    close(q.c_rel_ent(plus), 1.0, 1e-10)
    close(q.c_geometric(plus), 0.5, 1e-6)

    rho = q.random_mixed([2, 2], 8, 1)
    sigma = q.random_mixed([2, 2], 8, 2)
    close(q.max_fidelity_fixed(rho, sigma), q.fidelity(rho, sigma), 1e-5)
    names, values = q.coherence_features(rho)
    assert names[0] == "<ZI>" and len(values) == 5, names

    w = q.werner(3, -1.0)
    close(q.eg_lower(w), 0.5 * (1 - math.sqrt(1 - 1.0)), 5e-3)
    assert len(q.entanglement_features(w)[1]) == 15
    assert w.partial_trace([0]).dims == [3]

    xs = [[i / 20.0] for i in range(20)]
    ys = [math.sin(3 * x[0]) for x in xs]
    model = q.SvrModel.train(xs, ys, c=100.0, epsilon=0.001, tau=0.5)
    mse, mape, r2, p_over = q.evaluate(ys, model.predict_batch(xs))
    assert r2 > 0.99, r2
    again = q.SvrModel.from_json(model.to_json())
    assert again.predict(xs[3]) == model.predict(xs[3])

    lower = q.SvrModel.train(xs, ys, c=100.0, tau=0.5, delta=0.02)
    preds = lower.predict_batch(xs)
    # noiseless data: the quantile fit interpolates up to the solver tolerance
    assert max(p - y for p, y in zip(preds, ys)) < 1e-2

    with tempfile.TemporaryDirectory() as d:
        out = os.path.join(d, "c.jsonl")
        assert q.run_cli(["gen", "--suite", "coherence", "--dims", "2x2", "--count", "8", "--out", out]) == 0
        with open(out) as f:
            records = [json.loads(line) for line in f]
        assert len(records) == 8 and records[0]["schema"] == "coherence-z/2x2"
        assert q.run_cli(["gen", "--suite", "nope"]) == 1

    print("qrest_py smoke test passed")


if __name__ == "__main__":
    main()
