import json

import pytest

from conftest import write_jsonl_dumps
from cqadiff.cli import main
from cqadiff.synthetic import make_benchmark


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Full CLI flow over a small synthetic dump."""
    root = tmp_path_factory.mktemp("cli")
    bench = make_benchmark(n_questions=120, n_users=12, n_answers=400,
                           n_test_pairs=40, seed=3)
    write_jsonl_dumps(bench.dataset, root / "posts.jsonl", root / "users.jsonl")
    assert main(["ingest", "--posts", str(root / "posts.jsonl"),
                 "--users", str(root / "users.jsonl"), "--tags", "synthetic",
                 "--bucket-weeks", "2", "--out", str(root / "ds.snap")]) == 0
    assert main(["build-graph", "--dataset", str(root / "ds.snap"),
                 "--delta-t", "1", "--out", str(root / "net.tsv")]) == 0
    assert main(["features", "--network", str(root / "net.tsv"),
                 "--dataset", str(root / "ds.snap"),
                 "--out", str(root / "cache.tsv")]) == 0
    assert main(["train", "--network", str(root / "net.tsv"),
                 "--cache", str(root / "cache.tsv"), "--seed", "13",
                 "--out", str(root / "model.bin")]) == 0
    return root, bench


def test_predict_outputs_verdict(workdir, capsys):
    root, bench = workdir
    qids = sorted(bench.network.nodes)
    assert main(["predict", "--model", str(root / "model.bin"),
                 "--cache", str(root / "cache.tsv"),
                 "--dataset", str(root / "ds.snap"),
                 "--pair", f"{qids[0]},{qids[-1]}"]) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["harder"] in (qids[0], qids[-1])
    assert 0.5 <= out["confidence"] <= 1.0


def test_predict_cold_start_exit_code(workdir, capsys):
    root, _ = workdir
    assert main(["predict", "--model", str(root / "model.bin"),
                 "--cache", str(root / "cache.tsv"),
                 "--pair", "1,999999"]) == 2


def test_coldstart_predict(workdir, capsys):
    root, bench = workdir
    qids = sorted(bench.network.nodes)
    assert main(["coldstart-predict", "--model", str(root / "model.bin"),
                 "--dataset", str(root / "ds.snap"),
                 "--network", str(root / "net.tsv"),
                 "--cache", str(root / "cache.tsv"),
                 "--pair", f"{qids[0]},{qids[5]}", "--k", "3"]) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["harder"] in (qids[0], qids[5])


def test_baseline_scores_tsv(workdir):
    root, _ = workdir
    out = root / "hits.tsv"
    assert main(["baseline", "--method", "hits", "--network", str(root / "net.tsv"),
                 "--out", str(out)]) == 0
    rows = out.read_text().strip().splitlines()
    assert len(rows) == 120
    qid, score = rows[0].split("\t")
    float(score)


def test_baseline_pagerank_and_elo(workdir):
    root, _ = workdir
    assert main(["baseline", "--method", "pagerank", "--dataset", str(root / "ds.snap"),
                 "--out", str(root / "pr.tsv")]) == 0
    assert main(["baseline", "--method", "elo", "--dataset", str(root / "ds.snap"),
                 "--out", str(root / "elo.tsv")]) == 0
    assert main(["baseline", "--method", "rcm", "--network", str(root / "net.tsv"),
                 "--dataset", str(root / "ds.snap"), "--rcm-iters", "100",
                 "--out", str(root / "rcm.tsv")]) == 0


def test_global_rank_scores_and_levels(workdir, tmp_path):
    root, bench = workdir
    assert main(["global-rank", "--model", str(root / "model.bin"),
                 "--dataset", str(root / "ds.snap"),
                 "--network", str(root / "net.tsv"),
                 "--cache", str(root / "cache.tsv"),
                 "--samples", "1500", "--seed", "5",
                 "--out", str(tmp_path / "scores.tsv")]) == 0
    scores = {}
    for line in (tmp_path / "scores.tsv").read_text().splitlines():
        qid, val = line.split("\t")
        scores[int(qid)] = float(val)
    assert len(scores) == 120

    # derive noisy level labels from the plant for the thresholding path
    labels = tmp_path / "labels.tsv"
    with open(labels, "w") as fh:
        for qid, rank in sorted(bench.latent.items())[:60]:
            level = "easy" if rank <= 40 else "medium" if rank <= 80 else "hard"
            fh.write(f"{qid}\t{level}\n")
    assert main(["global-rank", "--model", str(root / "model.bin"),
                 "--dataset", str(root / "ds.snap"),
                 "--network", str(root / "net.tsv"),
                 "--cache", str(root / "cache.tsv"),
                 "--samples", "1500", "--seed", "5",
                 "--levels-train", str(labels),
                 "--out", str(tmp_path / "levels.tsv")]) == 0
    levels = dict(line.split("\t") for line in (tmp_path / "levels.tsv").read_text().splitlines())
    assert set(levels.values()) <= {"easy", "medium", "hard"}
    assert len(levels) == 120


def test_experiment_noise_writes_tsv_and_figure(tmp_path):
    cfg = tmp_path / "noise.cfg"
    cfg.write_text("questions=100\nusers=10\nanswers=300\nseed=3\n"
                   "levels=0,10\nkinds=Noise2\n")
    out = tmp_path / "results" / "noise.tsv"
    assert main(["experiment", "noise", "--config", str(cfg),
                 "--out", str(out)]) == 0
    assert out.exists()
    assert out.with_suffix(".png").exists()
    header, *rows = out.read_text().strip().splitlines()
    assert header.split("\t") == ["kind", "x_percent", "n_edges", "f1", "auc",
                                  "precision", "recall"]
    assert len(rows) == 2


def test_experiment_ablate_writes_tsv_and_figure(tmp_path):
    cfg = tmp_path / "abl.cfg"
    cfg.write_text("questions=100\nusers=10\nanswers=300\nseed=3\n"
                   "drops=lf_rank,H2\n")
    out = tmp_path / "ablate.tsv"
    assert main(["experiment", "ablate", "--config", str(cfg),
                 "--out", str(out)]) == 0
    rows = out.read_text().strip().splitlines()
    assert rows[0].split("\t") == ["dropped", "f1", "delta_f1", "auc"]
    assert [r.split("\t")[0] for r in rows[1:]] == ["none", "lf_rank", "H2"]
    assert out.with_suffix(".png").exists()


def test_serve_env_overrides(workdir, monkeypatch):
    root, _ = workdir
    captured = {}

    def fake_serve(service, port, snapshot_dir=None, snapshot_interval=300.0,
                   static_dir=None, host="127.0.0.1"):
        captured["port"] = port
        captured["snapshot_dir"] = snapshot_dir
        captured["threshold"] = service.confidence_threshold

    monkeypatch.setattr("cqadiff.cli.serve_forever", fake_serve)
    monkeypatch.setenv("CQADIFF_PORT", "19999")
    monkeypatch.setenv("CQADIFF_SNAPSHOT_DIR", "/tmp/snapdir-env")
    monkeypatch.setenv("CQADIFF_CONFIDENCE_THRESHOLD", "0.6")
    assert main(["serve", "--model", str(root / "model.bin"),
                 "--dataset", str(root / "ds.snap"),
                 "--network", str(root / "net.tsv"),
                 "--cache", str(root / "cache.tsv"), "--port", "8080"]) == 0
    assert captured == {"port": 19999, "snapshot_dir": "/tmp/snapdir-env",
                        "threshold": 0.6}


def test_experiment_domain_writes_grid(tmp_path):
    cfg = tmp_path / "dom.cfg"
    cfg.write_text("domain_seeds=3,4\n")
    out = tmp_path / "domain.tsv"
    assert main(["experiment", "domain", "--config", str(cfg),
                 "--out", str(out)]) == 0
    rows = out.read_text().strip().splitlines()
    assert len(rows) == 1 + 4  # header + 2x2 grid
    assert out.with_suffix(".png").exists()
