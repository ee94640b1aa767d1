import json
import subprocess
import sys

import pytest

from oar_link.cli import main
from oar_link.codec import Codebook
from oar_link.graph import ObjectNode, OarGraph, RelationEdge, serialize_graph
from oar_link.vocab import Vocabulary


def test_run(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"snr_db": [0, 10], "trials": 2, "schemes": ["semantic_adaptive"]}))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--jsonl"]) == 0
    assert (tmp_path / "o" / "summary.csv").exists()
    assert len((tmp_path / "o" / "trials.jsonl").read_text().splitlines()) == 4


def test_run_uses_config_output(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "cfg.json").write_text(json.dumps({"snr_db": [3], "trials": 1, "output": "res"}))
    assert main(["run", "--config", "cfg.json"]) == 0
    assert (tmp_path / "res" / "summary.csv").exists()


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trials": 0}))
    assert main(["run", "--config", str(cfg)]) == 1
    cfg.write_text("{not json")
    assert main(["run", "--config", str(cfg)]) == 1
    assert "oar-link:" in capsys.readouterr().err


def test_io_error_exit_code(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trials": 1, "snr_db": [0]}))
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--config", str(cfg), "--out", str(blocker)]) == 2


def test_gen_vocab(tmp_path):
    out = tmp_path / "v.json"
    assert main(["gen-vocab", "--out", str(out)]) == 0
    assert Vocabulary.load(out).n_entities == 150


def test_gen_codebook(tmp_path):
    out = tmp_path / "cb.bin"
    assert main(["gen-codebook", "--seed", "3", "--out", str(out)]) == 0
    assert Codebook.load(out).seed == 3


def test_ged(tmp_path, capsys):
    g1 = OarGraph([ObjectNode(0, 0), ObjectNode(1, 1), ObjectNode(2, 2)],
                  [RelationEdge(0, 1, 0), RelationEdge(1, 2, 0)])
    g2 = OarGraph([ObjectNode(0, 0), ObjectNode(1, 1)], [RelationEdge(0, 1, 0)])
    (tmp_path / "a.json").write_text(serialize_graph(g1))
    (tmp_path / "b.json").write_text(serialize_graph(g2))
    assert main(["ged", str(tmp_path / "a.json"), str(tmp_path / "b.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["raw"] == 2.0 and out["approximate"] is False
    (tmp_path / "b.json").write_text("{")
    assert main(["ged", str(tmp_path / "a.json"), str(tmp_path / "b.json")]) == 1


def test_validate(tmp_path, capsys):
    g = OarGraph([ObjectNode(0, 0)], [])
    path = tmp_path / "c.jsonl"
    path.write_text(serialize_graph(g) + "\n" + serialize_graph(g) + "\n")
    assert main(["validate", str(path)]) == 0
    assert "2 valid graphs" in capsys.readouterr().out
    path.write_text(serialize_graph(g) + "\nnope\n")
    assert main(["validate", str(path)]) == 1
    assert "line 2" in capsys.readouterr().err
    assert main(["validate", str(tmp_path / "missing.jsonl")]) == 2


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "oar_link.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("run", "gen-vocab", "gen-codebook", "ged", "validate"):
        assert cmd in out.stdout
