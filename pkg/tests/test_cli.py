"""Command-line behavior: outputs, exit codes, determinism."""

import json
import shutil

import pytest

from unitsel import fixture_path
from unitsel.cli import main


@pytest.fixture()
def two_node(tmp_path):
    dst = tmp_path / "two_node.json"
    shutil.copy(fixture_path("two_node.json"), dst)
    return dst


@pytest.fixture()
def five_node(tmp_path):
    dst = tmp_path / "five_node.json"
    shutil.copy(fixture_path("five_node.json"), dst)
    return dst


@pytest.fixture()
def observe_v1_objective(tmp_path):
    path = tmp_path / "objective.json"
    path.write_text('{"units":["U"],"terms":[{"weight":1.0,"y":{"V":"v1"}}]}')
    return path


def test_solve_two_node(capsys, two_node, observe_v1_objective):
    code = main([
        "solve", "--model", str(two_node), "--objective", str(observe_v1_objective),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "unit: U=u1" in out
    assert "value: 0.6" in out
    assert "excluded: 0" in out


def test_solve_json_and_method_equivalence(capsys, two_node, observe_v1_objective):
    outputs = []
    for method in ("ve", "brute"):
        code = main([
            "solve", "--model", str(two_node), "--objective",
            str(observe_v1_objective), "--method", method, "--json",
        ])
        assert code == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]
    doc = json.loads(outputs[0])
    assert doc["unit"] == {"U": "u1"}
    assert abs(doc["value"] - 0.6) < 1e-12
    assert doc["excluded"] == 0


def test_solve_missing_model_exits_1(capsys, observe_v1_objective):
    code = main([
        "solve", "--model", "/nonexistent/model.json",
        "--objective", str(observe_v1_objective),
    ])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_map_and_rmap_two_node(capsys, two_node):
    assert main(["map", "--model", str(two_node), "--targets", "U", "--e", "V=v1"]) == 0
    out = capsys.readouterr().out
    assert "instantiation: U=u2" in out and "0.24" in out
    assert main(["rmap", "--model", str(two_node), "--targets", "U", "--e1", "V=v1"]) == 0
    out = capsys.readouterr().out
    assert "instantiation: U=u1" in out and "0.6" in out


def test_rmap_rejects_overlapping_sets(capsys, two_node):
    code = main([
        "rmap", "--model", str(two_node), "--targets", "U",
        "--e1", "V=v1", "--e2", "V=v2",
    ])
    assert code == 1


def test_trace_prints_worked_clusters(capsys, five_node, tmp_path):
    order = tmp_path / "order.txt"
    order.write_text("#constrained: A,B\nE\nD\nC\nB\nA\n")
    code = main([
        "map", "--model", str(five_node), "--targets", "A,B",
        "--e", "E=e0", "--order", str(order), "--trace",
    ])
    assert code == 0
    out = capsys.readouterr().out
    for cluster in ("CE", "BCD", "ABC", "AB"):
        assert cluster in out


def test_width_five_node(capsys, five_node):
    assert main(["width", "--model", str(five_node)]) == 0
    out = capsys.readouterr().out
    assert "width: 2" in out


def test_width_tight_family(capsys, tmp_path):
    model = tmp_path / "tight.json"
    objective = tmp_path / "tight_objective.json"
    assert main([
        "gen", "--kind", "tight", "--n", "5",
        "--out", str(model), "--objective-out", str(objective),
    ]) == 0
    capsys.readouterr()
    units = ",".join(f"U{i}" for i in range(1, 6))
    code = main([
        "width", "--model", str(model), "--units", units,
        "--objective", str(objective),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "width: 3" in out
    assert "observed<=bound PASS" in out
    lifted = [l for l in out.splitlines() if l.startswith("lifted constrained width")]
    assert lifted and int(lifted[0].split(":")[1]) >= 5


def test_width_lifted_nworld(capsys, five_node):
    code = main([
        "width", "--model", str(five_node), "--units", "A", "--lifted", "3",
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "bound=w observed<=bound PASS" in out


def test_compile_cnf_then_rmap_contradiction_exits_2(capsys, tmp_path):
    dimacs = tmp_path / "contradiction.cnf"
    dimacs.write_text("p cnf 1 2\n1 0\n-1 0\n")
    model = tmp_path / "circuit.json"
    assert main(["compile-cnf", "--dimacs", str(dimacs), "--out", str(model)]) == 0
    err = capsys.readouterr().err
    assert "sentinel: s" in err
    sentinel = err.split("sentinel:")[1].strip()
    code = main([
        "rmap", "--model", str(model), "--targets", "x1",
        "--e1", f"{sentinel}=1",
    ])
    assert code == 2


def test_gen_random_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen", "--kind", "random", "--n", "8", "--seed", "3", "--out", str(a)]) == 0
    assert main(["gen", "--kind", "random", "--n", "8", "--seed", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_build_objective_model_roundtrips(capsys, two_node, observe_v1_objective, tmp_path):
    out = tmp_path / "om.json"
    code = main([
        "build-objective-model", "--model", str(two_node),
        "--objective", str(observe_v1_objective), "--out", str(out),
    ])
    assert code == 0
    from unitsel import load_model

    om = load_model(out.read_bytes(), allow_nonfunctional=True)
    names = {v.name for v in om.variables}
    assert "H" in names and "[V^1]" in names


def test_solve_with_order_file_over_objective_model(capsys, two_node, observe_v1_objective, tmp_path):
    # The order file names objective-model variables; constrained on U.
    order = tmp_path / "order.txt"
    order.write_text("#constrained: U\n[V^1]\nH\nU\n")
    code = main([
        "solve", "--model", str(two_node), "--objective",
        str(observe_v1_objective), "--order", str(order), "--json",
    ])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["unit"] == {"U": "u1"} and abs(doc["value"] - 0.6) < 1e-12


def test_bench_deterministic_bytes(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('[{"n": 8, "ur": 0.5, "trials": 2}]')
    outs = []
    for name in ("x.csv", "y.csv"):
        path = tmp_path / name
        assert main([
            "bench", "--config", str(cfg), "--seed", "7", "--out", str(path),
        ]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].decode().splitlines()[0] == "n,n2,R,ur,n1,w,w1,w2"


def test_env_seed_default(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("UNITSEL_SEED", "5")
    a = tmp_path / "a.json"
    assert main(["gen", "--kind", "random", "--n", "6", "--out", str(a)]) == 0
    monkeypatch.delenv("UNITSEL_SEED")
    b = tmp_path / "b.json"
    assert main(["gen", "--kind", "random", "--n", "6", "--seed", "5", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
