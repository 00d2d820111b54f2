"""Command-line interface: ingest, recommend, embed, simulate, serve.

Exit codes: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .catalog import load_catalog, load_distance_config, load_genre_graph
from .equity import DEFAULT_LAMBDA, ExposureLedger
from .errors import ValidationFailure
from .kernel import DEFAULT_SIGMA, DEFAULT_THETA, KernelParams, clamp_sigma
from .recommender import SeedProfile, recommend
from .service import ConfigError, load_service_config
from .simulator import POLICIES, PopulationSpec, evaluate_policies, run_simulation, write_metrics
from .textemb import build_vectors, dump_vectors, load_corpus


def _fail_validation(exc: ValidationFailure) -> None:
    click.echo(exc.report.render(), err=True)
    sys.exit(1)


def _load_bundle(catalog_path, genre_graph_path, distance_config_path):
    graph = load_genre_graph(Path(genre_graph_path)) if genre_graph_path else None
    criteria, calibration = ((), None)
    if distance_config_path:
        criteria, calibration = load_distance_config(Path(distance_config_path))
    return load_catalog(Path(catalog_path), criteria=criteria, genre_graph=graph,
                        calibration=calibration)


@click.group()
def main():
    """Diversity-first recommendation engine."""


@main.command()
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), required=True)
@click.option("--genre-graph", "genre_graph_path", type=click.Path(exists=True))
@click.option("--distance-config", "distance_config_path", type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", type=click.Path(exists=True))
def ingest(catalog_path, genre_graph_path, distance_config_path, corpus_path):
    """Validate inputs and print an ingestion report."""
    try:
        catalog = _load_bundle(catalog_path, genre_graph_path, distance_config_path)
    except ValidationFailure as exc:
        _fail_validation(exc)
    click.echo(f"catalog: {len(catalog)} items")
    if catalog.genre_graph is not None:
        click.echo(f"genre graph: {len(catalog.genre_graph)} genres, "
                   f"diameter {catalog.genre_graph.diameter}")
    if catalog.criteria:
        click.echo(f"criteria: {', '.join(c.id for c in catalog.criteria)}")
    if corpus_path:
        try:
            docs = load_corpus(Path(corpus_path))
        except ValidationFailure as exc:
            _fail_validation(exc)
        click.echo(f"corpus: {len(docs)} documents")
    click.echo("ok")


@main.command("recommend")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), required=True)
@click.option("--genre-graph", "genre_graph_path", type=click.Path(exists=True))
@click.option("--distance-config", "distance_config_path", type=click.Path(exists=True))
@click.option("--seed-id", "seed_ids", multiple=True, required=True,
              help="Seed item id (repeatable).")
@click.option("--k", default=10, show_default=True)
@click.option("--mode", type=click.Choice(["diverse", "similar"]), default="diverse",
              show_default=True)
@click.option("--sigma", default=DEFAULT_SIGMA, show_default=True,
              help="Diversity radius (clamped to the working range).")
@click.option("--theta", default=DEFAULT_THETA, show_default=True)
@click.option("--boost", "--lambda", "boost", default=DEFAULT_LAMBDA, show_default=True,
              help="Under-exposure boost strength.")
def recommend_cmd(catalog_path, genre_graph_path, distance_config_path, seed_ids,
                  k, mode, sigma, theta, boost):
    """One-shot recommendation to stdout (one JSON object per line)."""
    try:
        catalog = _load_bundle(catalog_path, genre_graph_path, distance_config_path)
    except ValidationFailure as exc:
        _fail_validation(exc)
    unknown = [s for s in seed_ids if s not in catalog.items]
    if unknown:
        click.echo(f"unknown seed id: {unknown[0]}", err=True)
        sys.exit(1)
    params = KernelParams(sigma=clamp_sigma(sigma), theta=theta)
    ledger = ExposureLedger(catalog.ids())
    recs = recommend(catalog, SeedProfile.from_seed_ids(seed_ids), params,
                     lam=boost, ledger=ledger, k=k, mode=mode)
    for rec in recs:
        item = catalog.item(rec.item_id)
        click.echo(json.dumps({
            "rank": rec.rank, "item_id": rec.item_id, "title": item.title,
            "artist": item.artist, "distance": rec.distance,
            "raw_score": rec.raw_score, "adjusted_score": rec.adjusted_score,
            "band": rec.band.value, "bold": rec.bold,
        }))


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--dim", default=64, show_default=True)
@click.option("--seed", default=7, show_default=True)
def embed(corpus_path, out_path, dim, seed):
    """Build a vectors file from a corpus."""
    try:
        docs = load_corpus(Path(corpus_path))
        result = build_vectors(docs, k=dim, seed=seed)
    except ValidationFailure as exc:
        _fail_validation(exc)
    except Exception as exc:  # vocabulary too small, empty corpus
        click.echo(str(exc), err=True)
        sys.exit(1)
    Path(out_path).write_text(dump_vectors(result.vectors), encoding="utf-8")
    for doc_id, reason in result.skipped:
        click.echo(f"skipped {doc_id}: {reason}", err=True)
    click.echo(f"embedded {len(result.vectors)} documents into {out_path}")


@main.command()
@click.option("--users", default=50, show_default=True)
@click.option("--items", default=500, show_default=True)
@click.option("--rounds", default=200, show_default=True)
@click.option("--policy", type=click.Choice(list(POLICIES) + ["all"]), default="all",
              show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Metrics file (single policy) or prefix (all policies).")
def simulate(users, items, rounds, policy, seed, out_path):
    """Run the exposure simulation and write per-round metrics."""
    pop = PopulationSpec(n_users=users, n_items=items, seed=seed)
    if policy != "all":
        result = run_simulation(pop, policy, rounds)
        write_metrics(result, Path(out_path))
        click.echo(f"{policy}: gini={result.final.gini:.4f} "
                   f"coverage={result.final.coverage:.4f} -> {out_path}")
        return
    for pol in POLICIES:
        result = run_simulation(pop, pol, rounds)
        suffix = pol.replace("+", "-")
        path = Path(f"{out_path}.{suffix}.jsonl")
        write_metrics(result, path)
        click.echo(f"{pol}: gini={result.final.gini:.4f} "
                   f"coverage={result.final.coverage:.4f} -> {path}")
    report = evaluate_policies(pop, rounds)
    report_path = Path(f"{out_path}.report.json")
    report_path.write_text(report.to_json(), encoding="utf-8")
    click.echo(report.render_table())


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True,
              help="Service config file (JSON).")
def serve(config_path):
    """Run the HTTP service."""
    from .service import serve as run_service

    try:
        config = load_service_config(Path(config_path))
        run_service(config)
    except ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
