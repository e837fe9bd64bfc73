import json
import re

import pytest

from campus_ties import cli
from campus_ties.reports import sha256_file

SUBCOMMANDS = ["critical-freq", "infer", "metrics", "behavior", "assort", "percolate",
               "synth", "validate", "replay"]


def run(argv):
    return cli.main([str(a) for a in argv])


@pytest.mark.parametrize("name", SUBCOMMANDS)
def test_help_documents_every_flag(name, capsys):
    parser = cli.build_parser()
    sub = next(a for a in parser._actions if a.dest == "command").choices[name]
    with pytest.raises(SystemExit) as exc:
        cli.main([name, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for action in sub._actions:
        for flag in action.option_strings:
            assert flag in text


def test_critical_freq_defaults(capsys):
    assert run(["critical-freq"]) == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == "a\tP\tE"
    assert len(lines) == 11 and lines[-1] == "# a_c\t5"


def test_huge_ceiling_gives_one(capsys):
    assert run(["critical-freq", "--ceiling", "1e7"]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "# a_c\t1"


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["critical-freq", "--b", "0"])
    assert exc.value.code == 1
    assert "usage:" in capsys.readouterr().err


def test_format_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("who,where,when\na,C1.W1,5\n")
    assert run(["infer", "--consumption", bad]) == 2
    assert "line 1" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert run(["infer", "--consumption", tmp_path / "nope.csv"]) == 2


def test_empty_input_gives_empty_network(tmp_path, caplog):
    empty = tmp_path / "empty.csv"
    empty.write_text("student_id,location_id,timestamp\n")
    assert run(["infer", "--consumption", empty, "--out", tmp_path / "o"]) == 0
    assert (tmp_path / "o" / "network_all.tsv").read_text() == ""
    assert "empty network" in caplog.text


def test_validate_hit_rate(tmp_path):
    truth = tmp_path / "t.tsv"
    inferred = tmp_path / "i.tsv"
    truth.write_text("".join(f"a{i}\tb{i}\t1\n" for i in range(43)))
    inferred.write_text("".join(f"a{i}\tb{i}\t7\n" for i in range(38)))
    assert run(["validate", "--truth", truth, "--inferred", inferred, "--out", tmp_path / "v"]) == 0
    doc = json.loads((tmp_path / "v" / "validation.json").read_text())
    assert round(doc["hit_rate"], 3) == 0.884
    assert doc["missed"] == 5 and doc["precision"] == 1.0


def test_synth_seed_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run(["synth", "--seed", 7, "--out", tmp_path / d]) == 0
    a = json.loads((tmp_path / "a" / "manifest.json").read_text())["outputs"]
    b = json.loads((tmp_path / "b" / "manifest.json").read_text())["outputs"]
    assert a == b and "truth_edges.tsv" in a


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    """Every command run once on a small synthetic campus with one thread."""
    root = tmp_path_factory.mktemp("cli")
    syn, inf, beh = root / "syn", root / "inf", root / "beh"
    steps = {
        "synth": ["synth", "--students", 400, "--windows", 10, "--seed", 5, "--out", syn],
        "critical-freq": ["critical-freq", "--out", root / "cf"],
        "infer": ["infer", "--consumption", syn / "consumption.csv", "--auto-ac",
                  "--ac-sweep", "1..9", "--out", inf],
        "metrics": ["metrics", "--edges", inf / "network_all.tsv", "--out", root / "met"],
        "behavior": ["behavior", "--consumption", syn / "consumption.csv", "--library",
                     syn / "library.csv", "--gpa", syn / "gpa.csv", "--out", beh],
        "assort": ["assort", "--edges", inf / "network_all.tsv", "--profiles", beh / "profiles.tsv",
                   "--out", root / "asr"],
        "percolate": ["percolate", "--edges", inf / "network_all.tsv", "--profiles",
                      beh / "profiles.tsv", "--dm", 0.01, "--out", root / "per"],
        "validate": ["validate", "--truth", syn / "truth_edges.tsv", "--inferred",
                     inf / "network_all.tsv", "--out", root / "val"],
    }
    for argv in steps.values():
        assert run(argv + ["--threads", 1]) == 0
    return root


def test_infer_outputs(pipeline_dir):
    inf = pipeline_dir / "inf"
    side = json.loads((inf / "network_all.json").read_text())
    assert side["a_c"] >= 1 and side["edge_count"] > 0
    rows = [line.split("\t") for line in (inf / "size_vs_ac.tsv").read_text().splitlines()[1:]]
    nodes = [int(r[1]) for r in rows]
    edges = [int(r[2]) for r in rows]
    assert len(rows) == 9
    assert nodes == sorted(nodes, reverse=True) and edges == sorted(edges, reverse=True)


def test_percolate_outputs(pipeline_dir):
    per = pipeline_dir / "per"
    doc = json.loads((per / "percolation.json").read_text())
    assert {"p_c", "m_c", "key_nodes"} <= set(doc)
    assert 0 < doc["p_c"] <= 1
    assert (per / "percolation.tsv").read_text().startswith("m\tp\tg1\tg2\n")


@pytest.mark.parametrize("name", ["syn", "cf", "inf", "met", "beh", "asr", "per", "val"])
def test_replay_is_byte_identical(pipeline_dir, name, monkeypatch):
    src = pipeline_dir / name
    manifest = json.loads((src / "manifest.json").read_text())
    monkeypatch.setenv("CAMPUS_TIES_THREADS", "3")
    dst = pipeline_dir / f"{name}-replay"
    assert run(["replay", src / "manifest.json", "--out", dst, "--threads", 4]) == 0
    for out_name, digest in manifest["outputs"].items():
        assert sha256_file(dst / out_name) == digest
        assert (dst / out_name).read_bytes() == (src / out_name).read_bytes()
    assert json.loads((dst / "manifest.json").read_text()) == manifest


def test_manifest_materializes_defaults(pipeline_dir):
    doc = json.loads((pipeline_dir / "inf" / "manifest.json").read_text())
    assert doc["tool"] == "campus-ties" and re.match(r"\d+\.\d+\.\d+", doc["version"])
    cfg = doc["config"]
    assert cfg["window_seconds"] == 120 and cfg["min_records"] == 10 and cfg["auto_ac"] is True
    assert "threads" not in cfg and "out" not in cfg
    assert all(len(d) == 64 for d in doc["inputs"].values())


def test_replay_refuses_changed_input(pipeline_dir, tmp_path, capsys):
    src = tmp_path / "in.tsv"
    src.write_text("a\tb\t5\n")
    assert run(["validate", "--truth", src, "--inferred", src, "--out", tmp_path / "v"]) == 0
    src.write_text("a\tc\t5\n")
    assert run(["replay", tmp_path / "v" / "manifest.json", "--out", tmp_path / "w"]) == 1


def test_insufficient_data_exit_code(pipeline_dir, tmp_path):
    edges = tmp_path / "e.tsv"
    edges.write_text("x\ty\t5\ny\tz\t5\n")
    code = run(["percolate", "--edges", edges, "--profiles", pipeline_dir / "beh" / "profiles.tsv"])
    assert code == 3
