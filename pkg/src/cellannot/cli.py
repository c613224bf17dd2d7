"""Command-line entry points.

Subcommands: ingest, annotate, baseline, eval (manual | semantic |
diversity), graph (stats), serve. Chat-backed commands need a provider
from the config file; the eval commands fall back to the deterministic
offline mock embedder when no provider is configured.
"""
from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .errors import CellAnnotError
from .evaluation import (
    intra_group_similarity,
    read_labels_csv,
    read_pairs_csv,
    read_review_sheet,
    score_manual_sheet,
    score_semantic_groups,
)
from .gateway import Gateway, MockProvider, build_gateway
from .graph import TissueScope, load_snapshot
from .ingest import run_pipeline
from .report import render_diversity_figure, render_manual_figure, render_semantic_figure
from .service.config import AppConfig, find_config, load_config
from .workflow import AnnotationRequest, AnnotationWorkflow, render_trace_report


def _load_app_config(config_path: str | None) -> AppConfig | None:
    path = find_config(config_path)
    if path is None:
        return None
    if not path.exists():
        raise click.ClickException(f"config file not found: {path}")
    return load_config(path)


def _gateway_from_config(
    config: AppConfig | None, provider_name: str | None, purpose: str
) -> Gateway:
    if config is None:
        raise click.ClickException(
            f"{purpose} needs a provider; pass --config pointing at a TOML file "
            "with a [provider] section"
        )
    try:
        provider_config = config.resolve_provider(provider_name)
    except KeyError as exc:
        raise click.ClickException(str(exc))
    try:
        return build_gateway(provider_config)
    except (ValueError, OSError) as exc:
        raise click.ClickException(f"cannot build provider: {exc}")


def _embedding_gateway(config: AppConfig | None, provider_name: str | None) -> Gateway:
    # Embedding-only commands stay offline by default: the mock embedder
    # needs no script and no key.
    if config is None and provider_name is None:
        return Gateway(MockProvider([]))
    if config is None:
        raise click.ClickException("--provider requires --config")
    return _gateway_from_config(config, provider_name, "semantic evaluation")


def _parse_markers(text: str) -> list[str]:
    return [m for m in (part.strip() for part in text.replace(",", " ").split()) if m]


def _scope_from_options(tissues: str, global_scope: bool) -> TissueScope:
    tissue_list = [t.strip() for t in tissues.split(",") if t.strip()]
    if global_scope or not tissue_list:
        return TissueScope.global_scope()
    return TissueScope.scoped(tissue_list)


@click.group()
def main() -> None:
    """Knowledge-graph retrieval-augmented cell type annotation."""


@main.command()
@click.option("--input", "input_csv", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--cache", "cache_dir", type=click.Path(file_okay=False), default=None,
              help="Response cache directory (overrides the provider's).")
@click.option("--provider", "provider_name", default=None, help="Named provider from the config.")
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--workers", default=1, show_default=True, help="Concurrent extraction calls.")
def ingest(input_csv, out_dir, cache_dir, provider_name, config_path, workers) -> None:
    """Run the ETL: raw marker CSV to association CSVs and a graph snapshot."""
    config = _load_app_config(config_path)
    if config is not None and cache_dir is not None:
        try:
            config.resolve_provider(provider_name).cache_dir = cache_dir
        except KeyError as exc:
            raise click.ClickException(str(exc))
    gateway = _gateway_from_config(config, provider_name, "ingestion")
    try:
        result = run_pipeline(input_csv, out_dir, gateway, workers=workers)
    except CellAnnotError as exc:
        raise click.ClickException(str(exc))
    stats = result.graph.stats()
    click.echo(f"records: {len(result.records)}")
    click.echo(f"nodes: {stats.node_count}  edges: {stats.edge_count}")
    click.echo(f"unified csv: {result.unified_csv}")
    click.echo(f"snapshot: {result.snapshot_path}")
    click.echo(f"quarantined: {len(result.quarantined)} ({result.quarantine_csv})")


@main.command()
@click.option("--graph", "graph_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Graph snapshot (defaults to the config's [graph].snapshot).")
@click.option("--markers", required=True, help="Comma or whitespace separated gene symbols.")
@click.option("--tissues", default="", help="Comma-separated tissue names.")
@click.option("--global", "global_scope", is_flag=True, help="Query without tissue constraints.")
@click.option("--iterations", default=5, show_default=True)
@click.option("--mode", type=click.Choice(["graph", "baseline"]), default="graph", show_default=True)
@click.option("--provider", "provider_name", default=None)
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None,
              help="Write the full trace report to this file.")
def annotate(graph_path, markers, tissues, global_scope, iterations, mode,
             provider_name, config_path, report_path) -> None:
    """Annotate one marker list and print the voted label."""
    config = _load_app_config(config_path)
    if graph_path is None:
        snapshot = config.snapshot_path() if config else None
        if snapshot is None:
            raise click.ClickException("no graph snapshot: pass --graph or configure [graph].snapshot")
        graph_path = snapshot
    graph = load_snapshot(graph_path)
    gateway = _gateway_from_config(config, provider_name, "annotation")
    request = AnnotationRequest(
        markers=_parse_markers(markers),
        scope=_scope_from_options(tissues, global_scope),
        iterations=iterations,
        mode=mode,
    )
    workflow = AnnotationWorkflow(graph, gateway)
    try:
        result = workflow.annotate(request)
    except CellAnnotError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"label: {result.label}")
    for canon, count in sorted(result.votes.items(), key=lambda kv: (-kv[1], kv[0])):
        click.echo(f"  {count}/{request.iterations}  {canon}")
    if report_path:
        Path(report_path).write_text(render_trace_report(result), encoding="utf-8")
        click.echo(f"report: {report_path}")


@main.command()
@click.option("--markers", required=True)
@click.option("--tissue", "tissue_name", default="human", show_default=True)
@click.option("--provider", "provider_name", default=None)
@click.option("--config", "config_path", default=None, type=click.Path())
def baseline(markers, tissue_name, provider_name, config_path) -> None:
    """Single general-purpose prompt, no graph: the comparison arm."""
    config = _load_app_config(config_path)
    gateway = _gateway_from_config(config, provider_name, "baseline annotation")
    workflow = AnnotationWorkflow(None, gateway)
    try:
        label = workflow.run_baseline_general(_parse_markers(markers), tissue_name)
    except CellAnnotError as exc:
        raise click.ClickException(str(exc))
    click.echo(label)


@main.group(name="eval")
def eval_group() -> None:
    """Scoring harnesses over review sheets and label files."""


def _write_rows(path: Path, header: list[str], rows) -> Path:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


@eval_group.command()
@click.option("--sheet", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default="reports", show_default=True, type=click.Path(file_okay=False))
@click.option("--figure/--no-figure", default=True, show_default=True)
def manual(sheet, out_dir, figure) -> None:
    """Aggregate a human review sheet into weighted rubric scores."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = read_review_sheet(sheet)
    reports = score_manual_sheet(rows)
    items_csv = _write_rows(
        out / "manual_items.csv",
        ["group", "reference_label", "predicted_label", "level", "weight"],
        (
            [r.group_id, item.reference_label, item.predicted_label,
             item.level.value, item.level.weight]
            for r in reports
            for item in r.items
        ),
    )
    groups_csv = _write_rows(
        out / "manual_groups.csv",
        ["group", "items", "mean_score"],
        ([r.group_id, len(r.items), f"{r.mean_score:.6f}"] for r in reports),
    )
    for r in reports:
        click.echo(f"{r.group_id}: {r.mean_score:.4f} over {len(r.items)} items")
    click.echo(f"wrote {items_csv} and {groups_csv}")
    if figure:
        click.echo(f"figure: {render_manual_figure(reports, out / 'manual_scores.png')}")


@eval_group.command()
@click.option("--pairs", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default="reports", show_default=True, type=click.Path(file_okay=False))
@click.option("--provider", "provider_name", default=None)
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--pool", is_flag=True, help="Normalize across all groups at once.")
@click.option("--figure/--no-figure", default=True, show_default=True)
def semantic(pairs, out_dir, provider_name, config_path, pool, figure) -> None:
    """Embedding-based quintile scores for (reference, prediction) pairs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gateway = _embedding_gateway(_load_app_config(config_path), provider_name)
    reports = score_semantic_groups(read_pairs_csv(pairs), gateway, pool_groups=pool)
    items_csv = _write_rows(
        out / "semantic_items.csv",
        ["group", "reference", "prediction", "cosine", "normalized", "score"],
        (
            [r.group_id, i.reference, i.prediction,
             f"{i.cosine:.6f}", f"{i.normalized:.6f}", i.score]
            for r in reports
            for i in r.items
        ),
    )
    groups_csv = _write_rows(
        out / "semantic_groups.csv",
        ["group", "items", "mean_score"],
        ([r.group_id, len(r.items), f"{r.mean_score:.6f}"] for r in reports),
    )
    for r in reports:
        click.echo(f"{r.group_id}: {r.mean_score:.4f} over {len(r.items)} pairs")
    click.echo(f"wrote {items_csv} and {groups_csv}")
    if figure:
        click.echo(f"figure: {render_semantic_figure(reports, out / 'semantic_scores.png')}")


@eval_group.command()
@click.option("--labels", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default="reports", show_default=True, type=click.Path(file_okay=False))
@click.option("--provider", "provider_name", default=None)
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--figure/--no-figure", default=True, show_default=True)
def diversity(labels, out_dir, provider_name, config_path, figure) -> None:
    """Intra-group pairwise similarity; lower similarity = more diversity."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gateway = _embedding_gateway(_load_app_config(config_path), provider_name)
    grouped = read_labels_csv(labels)
    rows: list[tuple[str, float, float]] = []
    for group_id in sorted(grouped):
        mean, variance = intra_group_similarity(grouped[group_id], gateway)
        rows.append((group_id, mean, variance))
        click.echo(f"{group_id}: mean {mean:.4f}, variance {variance:.6f}")
    out_csv = _write_rows(
        out / "diversity_groups.csv",
        ["group", "labels", "mean_similarity", "variance"],
        ([g, len(grouped[g]), f"{m:.6f}", f"{v:.6f}"] for g, m, v in rows),
    )
    click.echo(f"wrote {out_csv}")
    if figure:
        click.echo(f"figure: {render_diversity_figure(rows, out / 'diversity.png')}")


@main.group(name="graph")
def graph_group() -> None:
    """Knowledge graph inspection."""


@graph_group.command()
@click.option("--graph", "graph_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--json", "as_json", is_flag=True)
def stats(graph_path, config_path, as_json) -> None:
    """Node and edge counts for a graph snapshot."""
    if graph_path is None:
        config = _load_app_config(config_path)
        snapshot = config.snapshot_path() if config else None
        if snapshot is None:
            raise click.ClickException("no graph snapshot: pass --graph or configure [graph].snapshot")
        graph_path = snapshot
    graph = load_snapshot(graph_path)
    payload = graph.stats().as_dict()
    if as_json:
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
        return
    click.echo(f"nodes: {payload['node_count']}")
    for kind, count in payload["nodes_by_kind"].items():
        click.echo(f"  {kind}: {count}")
    click.echo(f"edges: {payload['edge_count']}")
    for kind, count in payload["edges_by_kind"].items():
        click.echo(f"  {kind}: {count}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
def serve(config_path) -> None:
    """Start the HTTP service described by the config file."""
    import uvicorn

    from .service.app import create_app

    config = load_config(config_path)
    snapshot = config.snapshot_path()
    graph = load_snapshot(snapshot) if snapshot and Path(snapshot).exists() else None
    if graph is None:
        click.echo("warning: no graph snapshot loaded; annotation endpoints will return 503", err=True)
    gateway = build_gateway(config.provider)
    static_dir = Path(config.server.static)
    if not static_dir.is_absolute():
        static_dir = config.base_dir / static_dir
    app = create_app(
        graph,
        gateway,
        max_workers=config.server.workers,
        journal_path=config.server.journal or None,
        static_dir=str(static_dir) if static_dir.is_dir() else None,
    )
    uvicorn.run(app, host=config.server.host, port=config.server.port)


if __name__ == "__main__":
    sys.exit(main())
