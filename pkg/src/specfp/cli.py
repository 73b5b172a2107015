"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 unreadable/invalid input,
4 network failure.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import yaml

from .experiments import EXPERIMENTS, ExperimentConfig, result_rows_csv, run_experiment
from .fingerprint import StoppingConfig, asf, asf_h, csf, load_fingerprints, save_fingerprints
from .krylov import default_rhs
from .mmio import MatrixMarketError, load_matrix
from .moments import ProbeSet
from .phylogeny import (
    dendrogram_newick,
    distance_matrix_csv,
    hierarchical_cluster,
    pairwise_distance,
    silhouette,
)
from .recommender import build_portfolio, probe_and_switch, recommend
from .sparse import DimensionError, SymmetryError
from .suitesparse import E3_MATRICES, FetchError, fetch_suitesparse

EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_NETWORK = 4

_INPUT_ERRORS = (
    MatrixMarketError,
    DimensionError,
    SymmetryError,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
)


def _die(code: int, msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _load(path):
    try:
        return load_matrix(path)
    except _INPUT_ERRORS as err:
        _die(EXIT_INPUT, f"{path}: {err}")
    except OSError as err:
        _die(EXIT_INPUT, f"{path}: {err}")


@click.group()
def main():
    """Spectral fingerprints of sparse symmetric matrices."""


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path())
@click.option("--method", type=click.Choice(["csf", "asf", "asf-h"]), default="csf")
@click.option("--k", default=5, show_default=True, help="Fingerprint length (csf only).")
@click.option("--eta", default=0.06, show_default=True, help="Damping factor.")
@click.option("--probes", "-p", default=64, show_default=True, help="Hutchinson probe count.")
@click.option("--estimator", type=click.Choice(["exact", "hutchinson"]), default="exact")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Output file (JSON lines).")
def fingerprint(paths, method, k, eta, probes, estimator, seed, out):
    """Fingerprint Matrix Market files."""
    if k < 1:
        _die(EXIT_CONFIG, "--k must be >= 1")
    if eta < 0:
        _die(EXIT_CONFIG, "--eta must be >= 0")
    fps = []
    for path in paths:
        mat = _load(path)
        mid = Path(path).stem
        if method == "csf":
            fps.append(csf(mat, k, eta=eta, estimator=estimator, p=probes,
                           seed=seed, matrix_id=mid))
        elif method == "asf":
            fps.append(asf(mat, StoppingConfig(), eta=eta, matrix_id=mid)[0])
        else:
            fps.append(asf_h(mat, StoppingConfig(), eta=eta,
                             probes=ProbeSet(probes, seed=seed), matrix_id=mid)[0])
    if out:
        save_fingerprints(fps, out)
    else:
        from .fingerprint import to_record

        for fp in fps:
            click.echo(to_record(fp))


def _read_fps(path):
    try:
        return load_fingerprints(path)
    except _INPUT_ERRORS as err:
        _die(EXIT_INPUT, f"{path}: {err}")
    except (OSError, ValueError, KeyError) as err:
        _die(EXIT_INPUT, f"{path}: {err}")


@main.command()
@click.argument("fps_file", type=click.Path())
@click.option("--metric", type=click.Choice(["euclidean", "cosine"]), default="euclidean")
@click.option("--out", type=click.Path(), default=None)
def distances(fps_file, metric, out):
    """Pairwise distance matrix from a fingerprint file."""
    fps = _read_fps(fps_file)
    if len(fps) < 2:
        _die(EXIT_INPUT, "need at least two fingerprints")
    csv = distance_matrix_csv(pairwise_distance(fps, metric=metric))
    if out:
        Path(out).write_text(csv)
    else:
        click.echo(csv, nl=False)


@main.command()
@click.argument("fps_file", type=click.Path())
@click.option("--k", required=True, type=int, help="Number of clusters.")
@click.option("--metric", type=click.Choice(["euclidean", "cosine"]), default="euclidean")
@click.option("--linkage", type=click.Choice(["average", "single", "complete"]),
              default="average")
@click.option("--newick", type=click.Path(), default=None, help="Write a Newick tree here.")
def cluster(fps_file, k, metric, linkage, newick):
    """Cluster fingerprints; prints id,label lines."""
    fps = _read_fps(fps_file)
    if k < 1 or k > len(fps):
        _die(EXIT_CONFIG, f"--k must be in [1, {len(fps)}]")
    dm = pairwise_distance(fps, metric=metric)
    res = hierarchical_cluster(dm, k, linkage=linkage)
    for mid, lab in zip(res.ids, res.labels):
        click.echo(f"{mid},{lab}")
    if res.k >= 2:
        click.echo(f"# silhouette: {silhouette(dm, res.labels):.4f}", err=True)
    if newick:
        full = hierarchical_cluster(dm, 1, linkage=linkage)
        Path(newick).write_text(dendrogram_newick(full) + "\n")


@main.command()
@click.argument("name", type=click.Choice(EXPERIMENTS))
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="YAML file with ExperimentConfig overrides.")
@click.option("--cache-dir", type=click.Path(), default=None,
              help="SuiteSparse cache directory (e3).")
def experiment(name, seed, out_dir, config_path, cache_dir):
    """Run one experiment and print its results table."""
    overrides = {}
    if config_path:
        try:
            loaded = yaml.safe_load(Path(config_path).read_text()) or {}
        except (OSError, yaml.YAMLError) as err:
            _die(EXIT_INPUT, f"{config_path}: {err}")
        if not isinstance(loaded, dict):
            _die(EXIT_CONFIG, f"{config_path}: expected a mapping of option overrides")
        overrides = {k: tuple(v) if isinstance(v, list) else v for k, v in loaded.items()}
    try:
        cfg = ExperimentConfig(experiment=name, seed=seed, out_dir=out_dir,
                               cache_dir=cache_dir, **overrides)
    except (TypeError, ValueError) as err:
        _die(EXIT_CONFIG, str(err))
    try:
        rows = run_experiment(cfg)
    except FetchError as err:
        _die(EXIT_NETWORK, str(err))
    except _INPUT_ERRORS as err:
        _die(EXIT_INPUT, str(err))
    click.echo(result_rows_csv(rows), nl=False)


@main.command("fetch-ss")
@click.argument("names", nargs=-1)
@click.option("--cache-dir", type=click.Path(), default=None)
def fetch_ss(names, cache_dir):
    """Fetch SuiteSparse matrices (group/name) into the local cache."""
    names = names or E3_MATRICES
    try:
        paths = fetch_suitesparse(names, cache_dir)
    except FetchError as err:
        _die(EXIT_NETWORK, str(err))
    for p in paths:
        click.echo(str(p))


@main.command()
@click.argument("query", type=click.Path())
@click.option("--db", "db_paths", multiple=True, required=True,
              type=click.Path(), help="Database matrices (repeatable).")
@click.option("--policy", type=click.Choice(["phylo_knn", "frobenius_1nn", "frobenius_knn"]),
              default="phylo_knn", show_default=True)
@click.option("--solve/--no-solve", default=False,
              help="Also run probe-and-switch on the query.")
@click.option("--maxit", default=None, type=int)
def recommend_cmd(query, db_paths, policy, solve, maxit):
    """Rank preconditioners for a query matrix against a matrix database."""
    qmat = _load(query)
    items = [(Path(p).stem, _load(p)) for p in db_paths]
    db = build_portfolio(items, maxit=maxit)
    try:
        ranked = recommend(qmat, db, policy=policy)
    except (DimensionError, ValueError) as err:
        _die(EXIT_INPUT, str(err))
    click.echo(",".join(s.name for s in ranked))
    if solve:
        rep, trace = probe_and_switch(qmat, default_rhs(qmat), ranked, maxit=maxit)
        click.echo(
            f"# used={rep.preconditioner.name} converged={rep.converged} "
            f"iters={trace.total_iterations} switches={trace.switches}",
            err=True,
        )


main.add_command(recommend_cmd, name="recommend")


if __name__ == "__main__":
    main()
