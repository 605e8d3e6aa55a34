"""protoflow command line interface."""

from __future__ import annotations

import collections
import json
import os
import sys

import click

from . import evalkit, serde
from .assembler import build_prototype, export_project
from .backends import Backends
from .kb import (
    KnowledgeError,
    knowledge_record_to_text,
    load_icon_base,
    load_knowledge_base,
)
from .orchestrator import DesignInput, PipelineConfig, generate_prototype
from .retrieval import IconIndex, RetrievalConfig, build_index, query_text, top_k


@click.group()
def main():
    """Retrieval-augmented UI prototype generation."""


@main.group()
def kb():
    """Knowledge base tools."""


@kb.command("validate")
@click.argument("path", type=click.Path(exists=True))
def kb_validate(path):
    try:
        records = load_knowledge_base(path)
    except KnowledgeError as e:
        click.echo(f"INVALID: {e}", err=True)
        sys.exit(1)
    click.echo(f"OK: {len(records)} records")


@kb.command("stats")
@click.argument("path", type=click.Path(exists=True))
def kb_stats(path):
    records = load_knowledge_base(path)
    type_counts = collections.Counter(
        c.type.label for r in records for c in r.layout.components
    )
    click.echo(f"records: {len(records)}")
    click.echo(f"components: {sum(type_counts.values())}")
    for label, count in type_counts.most_common():
        click.echo(f"  {label}: {count}")


@kb.command("query")
@click.option("--kb-path", "kb_path", required=True, type=click.Path(exists=True))
@click.option("--prompt", required=True)
@click.option("--layout", "layout_path", required=True, type=click.Path(exists=True))
@click.option("-k", default=2, show_default=True)
def kb_query(kb_path, prompt, layout_path, k):
    backends = Backends.from_env()
    records = load_knowledge_base(kb_path)
    index = build_index(
        [(r.id, knowledge_record_to_text(r)) for r in records], backends.embed
    )
    with open(layout_path, encoding="utf-8") as fh:
        layout = serde.layout_from_dict(json.load(fh))
    query = backends.embed.embed_text(query_text(prompt, layout))
    result = top_k(index, query, RetrievalConfig(k=k))
    for hit in result.hits:
        click.echo(f"{hit.record_id}\t{hit.score:.6f}")


@main.command("generate")
@click.option("--prompt", required=True)
@click.option("--layout", "layout_path", required=True, type=click.Path(exists=True))
@click.option("--kb-path", "kb_path", type=click.Path(exists=True))
@click.option("--icons", "icons_path", type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def generate(prompt, layout_path, kb_path, icons_path, seed, out):
    """Generate a prototype and write the project export JSON."""
    backends = Backends.from_env()
    records = load_knowledge_base(kb_path) if kb_path else []
    icon_index = None
    if icons_path:
        icon_index = IconIndex(load_icon_base(icons_path), backends.embed)
    with open(layout_path, encoding="utf-8") as fh:
        layout = serde.layout_from_dict(json.load(fh))
    inp = DesignInput(prompt=prompt, layout=layout)
    config = PipelineConfig(seed=seed)
    trace = generate_prototype(inp, backends, records, icon_index, config)
    doc = export_project(build_prototype(inp, trace))
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
    click.echo(f"wrote {out}")


@main.command("export")
@click.option("--project", "project_path", required=True, type=click.Path(exists=True),
              help="Path to a stored project JSON document.")
@click.option("--format", "fmt", type=click.Choice(["svg", "json"]), default="svg")
@click.option("--out", required=True, type=click.Path())
def export(project_path, fmt, out):
    from .service import project_from_dict

    with open(project_path, encoding="utf-8") as fh:
        project = project_from_dict(json.load(fh))
    if project.trace is None:
        click.echo("project has no generation", err=True)
        sys.exit(1)
    proto = build_prototype(project.input, project.trace)
    if fmt == "svg":
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(proto.svg)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(export_project(proto), fh)
    click.echo(f"wrote {out}")


@main.group("eval")
def eval_group():
    """Metric tools."""


@eval_group.command("fid")
@click.option("--real", "real_path", required=True, type=click.Path(exists=True))
@click.option("--gen", "gen_path", required=True, type=click.Path(exists=True))
def eval_fid(real_path, gen_path):
    real = evalkit.fit_gaussian(evalkit.load_features(real_path))
    gen = evalkit.fit_gaussian(evalkit.load_features(gen_path))
    click.echo(f"FID: {evalkit.fid(real, gen):.6f}")


@eval_group.command("gd")
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
def eval_gd(features_path):
    feats = evalkit.load_features(features_path)
    click.echo(f"GD: {evalkit.gd(feats):.6f}")


@eval_group.command("ablate")
@click.option("--configs", "configs_path", required=True, type=click.Path(exists=True),
              help="JSON list of {name, flags} rows.")
@click.option("--inputs", "inputs_dir", required=True, type=click.Path(exists=True),
              help="Directory of design-input JSON files.")
@click.option("--kb-path", "kb_path", type=click.Path(exists=True))
@click.option("--icons", "icons_path", type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--reference-seed", default=1, show_default=True)
def eval_ablate(configs_path, inputs_dir, kb_path, icons_path, seed, reference_seed):
    backends = Backends.from_env()
    records = load_knowledge_base(kb_path) if kb_path else []
    icon_index = None
    if icons_path:
        icon_index = IconIndex(load_icon_base(icons_path), backends.embed)
    with open(configs_path, encoding="utf-8") as fh:
        configs = [(row["name"], frozenset(row.get("flags", []))) for row in json.load(fh)]
    inputs = []
    for name in sorted(os.listdir(inputs_dir)):
        if not name.endswith(".json"):
            continue
        with open(os.path.join(inputs_dir, name), encoding="utf-8") as fh:
            inputs.append(serde.design_input_from_dict(json.load(fh)))
    reference = evalkit.generate_feature_set(
        inputs, backends, records, icon_index, PipelineConfig(seed=reference_seed)
    )
    report = evalkit.run_ablation(
        configs, inputs, backends, records, icon_index, reference,
        base_config=PipelineConfig(seed=seed),
    )
    click.echo(evalkit.format_report(report))


@main.command("serve")
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default="./protoflow-data", show_default=True)
@click.option("--kb-path", "kb_path", type=click.Path(exists=True))
@click.option("--icons", "icons_path", type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
def serve(port, host, data_dir, kb_path, icons_path, seed):
    import uvicorn

    from .service import create_app

    records = load_knowledge_base(kb_path) if kb_path else []
    icons = load_icon_base(icons_path) if icons_path else []
    app = create_app(
        data_dir,
        backends=Backends.from_env(),
        config=PipelineConfig(seed=seed),
        kb_records=records,
        icons=icons,
    )
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
