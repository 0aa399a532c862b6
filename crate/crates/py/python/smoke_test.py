"""Smoke test for the twoopt_lab extension module.

Build and install the module first, for example with
``pip install --no-build-isolation ./crates/py`` (needs maturin), then run
``python crates/py/python/smoke_test.py``.
"""

import json
import math
import os
import tempfile

import twoopt_lab as lab


def check_gadget():
    g = lab.Gadget("euclidean", 3)
    assert len(g.instance) == 24
    assert g.script_len == g.expected_steps == 50
    report = g.verify()
    assert report["ok"], report
    assert report["min_margin"] > 0
    trace = g.run()
    assert trace.steps == 50
    assert trace.terminated == "SCRIPT_END"
    pairs = trace.pair_report()
    assert pairs["t"] == 50
    assert pairs["pairs_disjoint"] >= math.ceil((2 * 50 - 24) / 7)

    manhattan = lab.Gadget("manhattan", 2)
    assert manhattan.script_len == 2 ** 6 - 22
    assert manhattan.verify()["ok"]
    assert all(v > 0 for _, v in lab.inequality_margins("lp", "3"))


def check_local_search():
    inst = lab.Instance.phi_perturbed(12, 4.0, seed=5)
    assert inst.metric == "2" and inst.dim == 2
    start = lab.random_tour(inst, 1)
    for pivot in ("first", "best", "random"):
        trace = lab.run(inst, start, pivot=pivot, seed=9)
        assert trace.terminated == "LOCAL_OPT"
        assert trace.final_length <= trace.initial_length
        assert trace.final_tour.crossings(inst) == 0
        assert all(d > 0 for d in trace.deltas)

    opt, tour = lab.held_karp_opt(inst)
    assert abs(tour.length(inst) - opt) < 1e-9
    assert lab.opt_lower_bound(inst, 4.0) <= opt
    cheapest = lab.insertion_tour(inst)
    assert cheapest.length(inst) >= opt - 1e-12
    assert lab.min_improvement(inst) > 0


def check_small_oracles():
    square = lab.Instance([[0, 0], [1, 1], [1, 0], [0, 1]], metric="2", name="square")
    steps, path = lab.longest_path(square)
    assert steps == 1 and len(path) == 2
    assert lab.Tour([0, 1, 2, 3]).crossings(square) == 1
    assert lab.Tour([0, 2, 1, 3]).crossings(square) == 0

    try:
        lab.held_karp_opt(lab.Instance.uniform(19, seed=1))
    except OverflowError:
        pass
    else:
        raise AssertionError("capacity limit not enforced")


def check_files_and_experiment():
    inst = lab.Instance.uniform(20, seed=3).with_metric("inf")
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "u.inst")
        inst.save(path)
        back = lab.Instance.load(path)
        assert back.points == inst.points and back.metric == "inf"

    config = {"model": "PHI", "n": [10], "phi": [1, 8], "seeds": [1, 2]}
    csv = lab.run_experiment(json.dumps(config))
    rows = [line for line in csv.splitlines() if line and not line.startswith("#")]
    assert rows[0].startswith("seed,model,n,")
    assert len(rows) == 5
    assert csv == lab.run_experiment(json.dumps(config))


if __name__ == "__main__":
    check_gadget()
    check_local_search()
    check_small_oracles()
    check_files_and_experiment()
    print("twoopt_lab smoke test passed")
