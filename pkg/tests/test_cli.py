import json

import pytest

from rigidtorus.cli import main

GOLDEN = "quadratic:(1+1*sqrt(5))/2"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


def test_semigroup_count(capsys):
    code, doc = report(capsys, "semigroup", "count", "--gens", "2,3", "--limit", "100")
    assert code == 0 and doc["count"] == 19
    m = doc["manifest"]
    assert m["seed"] == 0 and m["toolVersion"] and m["command"][:3] == ["rigidtorus", "semigroup", "count"]
    assert "wallTimeSeconds" not in m


def test_density_schema_and_csv(capsys, tmp_path):
    csv = tmp_path / "d.csv"
    code, doc = report(capsys, "semigroup", "density", "--gens", "2,3", "--checkpoints", "1e2,10^4,1000000", "--csv", str(csv))
    assert code == 0
    oracle = [sum(1 for a in range(21) for b in range(13) if (a or b) and 2 ** a * 3 ** b <= n) for n in (100, 10 ** 4, 10 ** 6)]
    assert [c["count"] for c in doc["checkpoints"]] == oracle
    assert set(doc["checkpoints"][0]) >= {"N", "count", "density", "logDensity"}
    assert doc["checkpoints"][0]["density"] == "19/100"
    assert doc["lacunary"] is False and doc["witness"] is None
    assert csv.read_text().splitlines()[:2] == ["N,count", "100,19"]


def test_reconstruct(capsys):
    code, doc = report(capsys, "rigidity", "reconstruct", "--x", "1/3", "--gens", "2,3", "--m1", "10", "--doublings", "2")
    assert code == 0 and doc["verdict"] == "1/3"
    assert [s["M"] for s in doc["stages"]] == [10, 100]
    assert set(doc["stages"][0]) >= {"M", "delta", "q1", "q2", "k", "ell", "kappaBound"}
    code, doc = report(capsys, "rigidity", "reconstruct", "--x", "quadratic:(-1+1*sqrt(2))/1", "--gens", "2,3,5,7", "--m1", "100")
    assert doc["verdict"] == "NotCertified"
    assert set(doc["x"]) == {"value", "errorRadius"}


def test_byte_identical_reports(capsys):
    argv = ["entropy", "estimate", "--measure", "bernoulli:base=2,probs=1/4,3/4", "--p", "2", "--depth", "100", "--samples", "40", "--seed", "7"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_classify_and_rejection(capsys):
    six = "atomic:[" + ",".join(f"{k}/7=1/6" for k in range(1, 7)) + "]"
    code, doc = report(capsys, "rigidity", "classify", "--measure", six, "--gens", "2,3")
    assert code == 0 and doc["verdict"] == "FiniteSupportDetected"
    assert [a["x"] for a in doc["atoms"]] == [f"{k}/7" for k in range(1, 7)]
    code, doc = report(capsys, "rigidity", "classify", "--measure", "atomic:[1/7=1/3,2/7=1/3,4/7=1/3]", "--gens", "2,3")
    assert code == 1 and doc["q"] == 3 and doc["witnessArc"]


def test_measure_and_lemma1(capsys):
    code, doc = report(capsys, "measure", "mass", "--measure", "cantor", "--arc", "1/3,1/3")
    assert doc["mass"] == "0/1"
    code, doc = report(capsys, "measure", "invariance", "--measure", "cantor", "--q", "2")
    assert code == 1 and doc["invariant"] is False
    code, doc = report(capsys, "entropy", "lemma1", "--measure", "atomic:[1/7=1/3,2/7=1/3,4/7=1/3]", "--beta", "1/10", "--delta-grid", "3^-11..3^-20", "--samples", "20")
    assert doc["passFraction"] == "1/1" and len(doc["grid"]) == 10


def test_equidist(capsys, tmp_path):
    code, doc = report(capsys, "equidist", "discrepancy", "--integers", "--alpha", GOLDEN, "--limit", "2000")
    assert code == 0 and doc["normalized"] < 3
    csv = tmp_path / "w.csv"
    code, doc = report(capsys, "equidist", "weyl", "--set", "5,13", "--alpha", "quadratic:(-1+1*sqrt(5))/2", "--limit", "13", "--csv", str(csv))
    assert doc["count"] == 2 and set(doc["re"]) >= {"value", "errorRadius"}
    assert csv.read_text().startswith("N,abs_S,re_S")


@pytest.mark.parametrize(
    "argv",
    [
        ["semigroup", "count", "--gens", "1,x", "--limit", "3"],
        ["measure", "mass", "--measure", "bogus", "--arc", "0,1"],
        ["equidist", "weyl", "--integers", "--alpha", "pi", "--limit", "10"],
        ["semigroup", "count", "--gens", "2", "--limit", "5", "--frobnicate"],
        ["nonsense"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2
    assert capsys.readouterr().err


def test_config_file_overrides(capsys, tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[semigroup.count]\ngens = 2,3\nlimit = 100\n")
    code, doc = report(capsys, "--config", str(ini), "semigroup", "count")
    assert code == 0 and doc["count"] == 19
    code, doc = report(capsys, "--config", str(ini), "semigroup", "count", "--limit", "20")
    assert doc["count"] == 9
    ini.write_text("[semigroup.count]\nbogus = 1\n")
    code, _, err = run(capsys, "--config", str(ini), "semigroup", "count", "--gens", "2", "--limit", "4")
    assert code == 2 and "bogus" in err


def test_nazarov_roundtrip_and_tamper(capsys, tmp_path):
    cert = tmp_path / "cert.json"
    code, _, _ = run(capsys, "nazarov", "run", "--alpha", GOLDEN, "--stages", "2", "--json", str(cert))
    assert code == 0
    doc = json.loads(cert.read_text())
    assert doc["allHold"] and len(doc["stages"]) == 2
    code, out = report(capsys, "nazarov", "verify", str(cert))
    assert code == 0 and out["violated"] == []

    doc["stages"][1]["B"].append(doc["stages"][1]["N"] - 1)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, out, err = run(capsys, "nazarov", "verify", str(bad))
    assert code == 1 and "VIOLATED" in err and json.loads(out)["violated"]

    doc = json.loads(cert.read_text())
    doc["stages"][0]["certificate"]["weylRe"]["lo"] = "1/100"
    bad.write_text(json.dumps(doc))
    code, out, err = run(capsys, "nazarov", "verify", str(bad))
    assert code == 1 and "Weyl" in err


def test_nazarov_rational_aborts(capsys):
    code, doc = report(capsys, "nazarov", "run", "--alpha", "rational:1/4", "--search-limit", "2000")
    assert code == 1 and doc["aborted"] == "NotFound"
