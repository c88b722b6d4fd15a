"""Batch entry points: single runs, the benchmark, store management, and the service."""

import json
import os
import sys
from pathlib import Path

import click

from . import baselines
from .assets import load_scene_arg
from .errors import RearrangeError
from .evaluation import METHODS, BenchConfig, run_benchmark
from .experience_store import Store, bundled_seed_dir, seed_store
from .grounding import make_embedder
from .llm_client import make_backend
from .reasoner import run_pipeline, transitions_to_doc
from .relations import RelationThresholds, check, parse_relation
from .scene import load_scene, scene_to_dict

ENV_PREFIX = "REARRANGE_"
CONFIG_KEYS = ("backend", "embedder", "mode", "scene", "store_dir", "seed", "gap_px", "front_axis")


def _read_config_file(path):
    """Flat key = value lines; quotes optional, '#' starts a comment."""
    values = {}
    for raw in Path(path).read_text("utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.ClickException(f"bad config line in {path}: {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip().strip("'\"")
    return values


def _resolve(flag_value, key, config_file_values, default):
    """Flag > config file > environment > default."""
    if flag_value is not None:
        return flag_value
    if key in config_file_values:
        return config_file_values[key]
    env = os.environ.get(ENV_PREFIX + key.upper())
    if env is not None:
        return env
    return default


def _settings(params, config_path):
    file_values = _read_config_file(config_path) if config_path else {}
    out = {}
    defaults = {
        "backend": "oracle",
        "embedder": "scripted",
        "mode": "with_reference",
        "scene": "scene1",
        "store_dir": None,
        "seed": 0,
        "gap_px": baselines.DEFAULT_GAP_PX,
        "front_axis": "camera",
    }
    for key in CONFIG_KEYS:
        out[key] = _resolve(params.get(key), key, file_values, defaults[key])
    out["seed"] = int(out["seed"])
    out["gap_px"] = float(out["gap_px"])
    return out


def _thresholds(settings):
    return RelationThresholds(front_axis=settings["front_axis"])


def _open_store(settings, create=False):
    if settings["store_dir"]:
        return seed_store(settings["store_dir"]) if create else Store(settings["store_dir"])
    return Store(bundled_seed_dir())


@click.group()
def main():
    """Language-conditioned tabletop rearrangement toolkit."""


_common = [
    click.option("--backend", type=click.Choice(["scripted", "oracle", "remote"]), default=None),
    click.option("--embedder", type=click.Choice(["scripted", "remote"]), default=None),
    click.option("--config", "config_path", type=click.Path(exists=True), default=None),
    click.option("--seed", type=int, default=None),
    click.option("--gap-px", "gap_px", type=float, default=None),
    click.option("--front-axis", "front_axis", type=click.Choice(["camera", "robot"]), default=None),
]


def common_options(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@main.command()
@click.option("--scene", default=None, help="Fixture name or scene document path.")
@click.option("--instruction", required=True)
@click.option("--mode", type=click.Choice(["with_reference", "without_reference"]), default=None)
@click.option("--store-dir", "store_dir", default=None)
@common_options
def run(instruction, **params):
    """Execute one instruction; exit 0 iff its relations are satisfied."""
    settings = _settings(params, params.pop("config_path"))
    thresholds = _thresholds(settings)
    try:
        scene = load_scene_arg(settings["scene"])
        store = _open_store(settings)
        llm = make_backend(settings["backend"])
        result = run_pipeline(
            scene,
            instruction,
            store,
            llm,
            mode=settings["mode"],
            embedder=make_embedder(settings["embedder"]),
            thresholds=thresholds,
        )
    except RearrangeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    doc = transitions_to_doc(result.results)
    doc["final_scene"] = scene_to_dict(result.results[-1].scene) if result.results else scene_to_dict(scene)
    if result.reference is not None:
        doc["reference"] = {"id": result.reference.id, "instruction": result.reference.instruction}
    click.echo(json.dumps(doc, indent=2))
    specs = parse_relation(instruction, scene)
    scenes = [r.scene for r in result.results]
    satisfied = all(
        check(scenes[min(s.step_index, len(scenes) - 1)], s, thresholds) for s in specs
    )
    click.echo(f"satisfied: {satisfied}", err=True)
    sys.exit(0 if satisfied else 1)


@main.command()
@click.option("--methods", default=",".join(METHODS), show_default=True)
@click.option("--format", "fmt", type=click.Choice(["table", "csv", "doc"]), default="table")
@click.option("--out", type=click.Path(), default=None, help="Write the report here instead of stdout.")
@click.option("--store-dir", "store_dir", default=None)
@common_options
def bench(methods, fmt, out, **params):
    """Run the 15-instruction benchmark; the report carries the results."""
    settings = _settings(params, params.pop("config_path"))
    config = BenchConfig(
        methods=tuple(m.strip() for m in methods.split(",") if m.strip()),
        backend=settings["backend"],
        seed=settings["seed"],
        gap_px=settings["gap_px"],
        thresholds=_thresholds(settings),
        store_dir=settings["store_dir"],
    )
    try:
        report = run_benchmark(config)
    except RearrangeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if fmt == "table":
        text = report.to_table()
    elif fmt == "csv":
        text = report.to_csv()
    else:
        text = json.dumps(report.to_doc(), indent=2) + "\n"
    if out:
        Path(out).write_text(text, "utf-8")
        click.echo(f"report written to {out}", err=True)
    else:
        click.echo(text, nl=False)
    sys.exit(0)


@main.group()
def store():
    """Experience store management."""


@store.command("list")
@click.option("--store-dir", "store_dir", default=None)
def store_list(store_dir):
    try:
        st = Store(store_dir) if store_dir else Store(bundled_seed_dir())
    except RearrangeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    for exp in st:
        click.echo(f"{exp.id}\t{exp.source}\t{exp.created_at}\t{exp.instruction}")


@store.command("add")
@click.option("--store-dir", "store_dir", required=True)
@click.option("--scene", "scene_path", required=True, help="Scene document holding the arrangement.")
@click.option("--instruction", required=True)
@click.option("--source", type=click.Choice(["human", "robot"]), default="human")
def store_add(store_dir, scene_path, instruction, source):
    try:
        scene = load_scene(Path(scene_path).read_bytes())
        st = seed_store(store_dir)
        exp = st.add(instruction, scene.objects, scene.workspace, source)
    except RearrangeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(exp.id)


@store.command("export")
@click.option("--store-dir", "store_dir", default=None)
@click.option("--out", type=click.Path(), default=None)
def store_export(store_dir, out):
    try:
        st = Store(store_dir) if store_dir else Store(bundled_seed_dir())
    except RearrangeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    doc = json.dumps([e.to_dict() for e in st], indent=2)
    if out:
        Path(out).write_text(doc, "utf-8")
    else:
        click.echo(doc)


@main.command()
@click.option("--listen", default="127.0.0.1:7788", show_default=True)
@click.option("--scene", default=None)
@click.option("--mode", type=click.Choice(["with_reference", "without_reference", "random", "geometric"]), default=None)
@click.option("--store-dir", "store_dir", default=None)
@click.option("--with-console", "with_console", is_flag=True, default=False)
@common_options
def serve(listen, with_console, **params):
    """Start the control service (optionally serving the console assets)."""
    from .service import ServiceConfig
    from .service import serve as run_service

    settings = _settings(params, params.pop("config_path"))
    config = ServiceConfig(
        backend=settings["backend"],
        embedder=settings["embedder"],
        mode=settings["mode"],
        scene=settings["scene"],
        store_dir=settings["store_dir"],
        gap_px=settings["gap_px"],
        seed=settings["seed"],
        thresholds=_thresholds(settings),
    )
    console_dir = None
    if with_console:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if candidate.is_dir():
            console_dir = str(candidate)
        else:
            click.echo(f"console assets not found at {candidate}; serving API only", err=True)
    run_service(config, listen=listen, console_dir=console_dir)


if __name__ == "__main__":
    main()
