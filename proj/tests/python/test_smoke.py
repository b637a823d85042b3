import json
import math

import pytest

import divaudit as da

WRONG = "We add the two parts of the order together first.\nThen we subtract the discount applied to everything.\nAnswer: 3"
RIGHT = "We add the two parts of the order together first.\nThe discount only applies to the second item here.\nAnswer: 7"


def minc_slate():
    agents = [da.AgentOutput(f"a{i}", WRONG) for i in range(3)] + [da.AgentOutput("a3", RIGHT)]
    return da.AgentSlate("s1", "How much?", "7", agents)


def test_normalize():
    assert da.answers_equal(" 1,000.0 ", "1000")
    assert not da.answers_equal("3", "7")
    assert da.normalize_answer("  Yes. ") == da.normalize_answer("yes")


def test_vote_and_audit():
    s = minc_slate()
    assert da.classify_regime(s) == "MinC"
    mv = da.majority_vote(s)
    assert mv.answer == "3"
    assert mv.tokens_in == 0
    r = da.audit(s, da.OracleParams(q=1.0))
    assert r.answer == "7"
    assert r.method == "Auditor"
    assert r.judge_calls >= 1


def test_tree_and_traps():
    s = minc_slate()
    tree = json.loads(da.tree_json(s))
    assert tree
    lines, stats = da.mine_traps([s])
    assert len(lines) == 1
    assert json.loads(stats)["kept"] == 1
    assert json.loads(lines[0])["meta"]["support_err"] == 3


def test_json_round_trip():
    s = minc_slate()
    back = da.AgentSlate.from_json_line(s.to_json_line())
    assert back.id == "s1" and len(back.agents) == 4


def test_loss_and_theory():
    assert da.acpo_loss(0, 0, 0, 0, 0.1) == pytest.approx(math.log(2), abs=1e-12)
    gw, gl = da.acpo_grad(0, 0, 0, 0, 1.0)
    assert gw == pytest.approx(-0.5) and gl == pytest.approx(0.5)
    assert da.theoretical_var_mean(0.7, 0.0, 10) == pytest.approx(0.021)
    e = da.estimate_var_mean(10, 0.7, 0.3, trials=20000, seed=1)
    assert abs(e["empirical"] - e["theoretical"]) <= 4 * e["standard_error"]
    mv, au = da.mv_vs_auditor(3, 1, 1.0, 200)
    assert mv == 0.0 and au == 1.0


def test_errors():
    cfg = da.TreeConfig()
    cfg.tau = 2.0
    with pytest.raises(ValueError):
        da.tree_json(minc_slate(), cfg)
    with pytest.raises(OSError):
        da.load_slates("/nonexistent/slates.jsonl")
