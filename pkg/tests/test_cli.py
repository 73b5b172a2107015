import json

import numpy as np
import pytest
from click.testing import CliRunner

from specfp.cli import EXIT_CONFIG, EXIT_INPUT, main
from specfp.generators import FamilySpec, generate
from specfp.mmio import write_matrix_market


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def corpus_dir(tmp_path):
    """Six Matrix Market files, two families x three matrices."""
    paths = []
    for fam in ("Covariance", "AdjacencyER"):
        for i in range(3):
            mat = generate(FamilySpec(fam, 40, seed=i))
            p = tmp_path / f"{fam}-{i}.mtx"
            write_matrix_market(mat, p)
            paths.append(p)
    return tmp_path, paths


class TestFingerprint:
    def test_prints_records(self, runner, corpus_dir):
        _, paths = corpus_dir
        res = runner.invoke(main, ["fingerprint", str(paths[0]), "--k", "4"])
        assert res.exit_code == 0
        rec = json.loads(res.output.strip())
        assert rec["K"] == 4 and rec["method"] == "CSF"
        assert len(rec["phi"]) == 4

    def test_writes_jsonl(self, runner, corpus_dir, tmp_path):
        _, paths = corpus_dir
        out = tmp_path / "fps.jsonl"
        res = runner.invoke(
            main, ["fingerprint", *map(str, paths), "--out", str(out)]
        )
        assert res.exit_code == 0
        assert len(out.read_text().strip().splitlines()) == len(paths)

    def test_adaptive_method(self, runner, corpus_dir):
        _, paths = corpus_dir
        res = runner.invoke(main, ["fingerprint", str(paths[0]), "--method", "asf"])
        assert res.exit_code == 0
        assert json.loads(res.output.strip())["method"] == "ASF"

    def test_missing_file_exit_3(self, runner, tmp_path):
        res = runner.invoke(main, ["fingerprint", str(tmp_path / "nope.mtx")])
        assert res.exit_code == EXIT_INPUT

    def test_malformed_file_exit_3(self, runner, tmp_path):
        bad = tmp_path / "bad.mtx"
        bad.write_text("this is not a matrix\n")
        res = runner.invoke(main, ["fingerprint", str(bad)])
        assert res.exit_code == EXIT_INPUT

    def test_bad_k_exit_2(self, runner, corpus_dir):
        _, paths = corpus_dir
        res = runner.invoke(main, ["fingerprint", str(paths[0]), "--k", "0"])
        assert res.exit_code == EXIT_CONFIG


class TestPipeline:
    def _fps(self, runner, corpus_dir, tmp_path):
        _, paths = corpus_dir
        out = tmp_path / "fps.jsonl"
        res = runner.invoke(main, ["fingerprint", *map(str, paths), "--out", str(out)])
        assert res.exit_code == 0
        return out

    def test_distances(self, runner, corpus_dir, tmp_path):
        fps = self._fps(runner, corpus_dir, tmp_path)
        res = runner.invoke(main, ["distances", str(fps)])
        assert res.exit_code == 0
        lines = res.output.strip().splitlines()
        assert len(lines) == 7  # header + 6 matrices

    def test_cluster_recovers_families(self, runner, corpus_dir, tmp_path):
        fps = self._fps(runner, corpus_dir, tmp_path)
        newick = tmp_path / "tree.nwk"
        res = runner.invoke(
            main, ["cluster", str(fps), "--k", "2", "--newick", str(newick)]
        )
        assert res.exit_code == 0
        labels = {}
        for line in res.output.strip().splitlines():
            if line.startswith("#"):  # silhouette diagnostic on stderr
                continue
            mid, lab = line.split(",")
            labels.setdefault(mid.rsplit("-", 1)[0], set()).add(lab)
        # each family lands in exactly one cluster, and they differ
        assert all(len(s) == 1 for s in labels.values())
        assert labels["Covariance"] != labels["AdjacencyER"]
        assert newick.read_text().strip().endswith(";")

    def test_cluster_bad_k_exit_2(self, runner, corpus_dir, tmp_path):
        fps = self._fps(runner, corpus_dir, tmp_path)
        res = runner.invoke(main, ["cluster", str(fps), "--k", "99"])
        assert res.exit_code == EXIT_CONFIG

    def test_distances_needs_two(self, runner, corpus_dir, tmp_path):
        _, paths = corpus_dir
        out = tmp_path / "one.jsonl"
        runner.invoke(main, ["fingerprint", str(paths[0]), "--out", str(out)])
        res = runner.invoke(main, ["distances", str(out)])
        assert res.exit_code == EXIT_INPUT


class TestExperiment:
    def test_e0_with_yaml_overrides(self, runner, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("per_family: 2\n")
        res = runner.invoke(
            main,
            ["experiment", "e0", "--out-dir", str(tmp_path / "out"),
             "--config", str(cfg)],
        )
        assert res.exit_code == 0
        assert res.output.startswith("experiment,method,params")
        assert (tmp_path / "out" / "e0_results.csv").exists()

    def test_unknown_override_exit_2(self, runner, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("nonsense_option: 1\n")
        res = runner.invoke(main, ["experiment", "e0", "--config", str(cfg)])
        assert res.exit_code == EXIT_CONFIG

    def test_unknown_experiment_rejected(self, runner):
        res = runner.invoke(main, ["experiment", "e99"])
        assert res.exit_code != 0


class TestRecommend:
    def test_ranks_and_solves(self, runner, tmp_path):
        fam = FamilySpec("SPDLaplacianLike", 32, seed=0)
        q = tmp_path / "q.mtx"
        write_matrix_market(generate(fam), q)
        dbs = []
        for i in (1, 2):
            p = tmp_path / f"db{i}.mtx"
            write_matrix_market(generate(FamilySpec("SPDLaplacianLike", 32, seed=i)), p)
            dbs.append(p)
        res = runner.invoke(
            main,
            ["recommend", str(q), "--db", str(dbs[0]), "--db", str(dbs[1]),
             "--solve"],
        )
        assert res.exit_code == 0
        names = res.output.strip().splitlines()[0].split(",")
        assert len(names) == 5 and "IC0" in names and "Jacobi" in names

    def test_dimension_mismatch_exit_3(self, runner, tmp_path):
        q = tmp_path / "q.mtx"
        d = tmp_path / "d.mtx"
        write_matrix_market(generate(FamilySpec("SPDLaplacianLike", 16, seed=0)), q)
        write_matrix_market(generate(FamilySpec("SPDLaplacianLike", 24, seed=1)), d)
        res = runner.invoke(
            main, ["recommend", str(q), "--db", str(d), "--policy", "frobenius_1nn"]
        )
        assert res.exit_code == EXIT_INPUT
