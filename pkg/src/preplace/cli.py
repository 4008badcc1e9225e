"""Command-line front door: gen-data, train, eval, study, serve.

Every run prints a single JSON line with the resolved config and seed
before doing any work, so any invocation can be replayed exactly.  Exit
codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from .config import AppConfig, resolve
from .grid import GridSpec
from .harness import (
    StudyReport,
    export_report,
    gen_dataset,
    load_dataset,
    run_study,
    to_training_sequences,
)
from .intent.evaluate import evaluate
from .intent.serial import load_model, save_model
from .intent.train import train
from .sim import MODES, OraclePredictor


def _parse_grid(value: str) -> tuple[int, int]:
    try:
        n, m = value.lower().split("x")
        n, m = int(n), int(m)
    except ValueError:
        raise click.UsageError(f"--grid must look like 5x10, got {value!r}")
    if n < 1 or m < 1:
        raise click.UsageError("--grid dimensions must be positive")
    return n, m


def _parse_cells(value: str, grid: GridSpec) -> list[tuple[int, int]]:
    """Either a count (spread over the grid) or explicit 'x,y;x,y' pairs."""
    value = value.strip()
    if ";" not in value and "," not in value:
        try:
            count = int(value)
        except ValueError:
            raise click.UsageError(f"--cells must be a count or x,y;x,y pairs, got {value!r}")
        if count < 1:
            raise click.UsageError("--cells count must be >= 1")
        return default_cells(grid, count)
    cells = []
    for part in value.split(";"):
        try:
            x, y = (int(v) for v in part.split(","))
        except ValueError:
            raise click.UsageError(f"bad cell {part!r} in --cells")
        if not grid.contains_cell((x, y)):
            raise click.UsageError(f"cell ({x},{y}) outside {grid.n}x{grid.m} grid")
        cells.append((x, y))
    return cells


def default_cells(grid: GridSpec, count: int = 11) -> list[tuple[int, int]]:
    """Deterministic spread: corners, edge midpoints, center, then off-center
    fills, then a row-major sweep of whatever remains."""
    fractions = [
        (0.0, 0.0), (0.0, 0.5), (0.0, 1.0),
        (0.5, 0.0), (0.5, 0.5), (0.5, 1.0),
        (1.0, 0.0), (1.0, 0.5), (1.0, 1.0),
        (0.25, 0.75), (0.75, 0.25),
    ]
    cells: list[tuple[int, int]] = []
    for fx, fy in fractions:
        c = (round(fx * (grid.n - 1)), round(fy * (grid.m - 1)))
        if c not in cells:
            cells.append(c)
    for c in grid.cells():
        if len(cells) >= count:
            break
        if c not in cells:
            cells.append(c)
    return cells[: min(count, grid.n * grid.m)]


def _resolved(config_path, grid_str, extra=None) -> AppConfig:
    overrides = dict(extra or {})
    if grid_str is not None:
        n, m = _parse_grid(grid_str)
        overrides["grid_n"] = n
        overrides["grid_m"] = m
    return resolve(config_path, overrides)


def _announce(command: str, seed: int, cfg: AppConfig, **extra) -> None:
    doc = {"command": command, "seed": seed, "config": cfg.flat()}
    doc.update(extra)
    click.echo(json.dumps(doc, sort_keys=True))


def _load_checked_model(path: str, grid: GridSpec):
    model = load_model(path)
    if model.grid != grid:
        raise ValueError(
            f"model grid {model.grid.n}x{model.grid.m} does not match "
            f"configured grid {grid.n}x{grid.m}"
        )
    return model


def _shared(f):
    f = click.option("--out", "out", type=click.Path(), default=None,
                     help="Output path.")(f)
    f = click.option("--grid", "grid_str", default=None, metavar="NxM",
                     help="Grid dimensions override.")(f)
    f = click.option("--config", "config_path",
                     type=click.Path(exists=False), default=None,
                     help="Flat JSON config file.")(f)
    f = click.option("--seed", type=int, default=0, show_default=True)(f)
    return f


@click.group()
def cli():
    """Preemptive indirect-handover toolkit."""


@cli.command("gen-data")
@_shared
@click.option("--count", type=int, default=100, show_default=True)
def gen_data_cmd(seed, config_path, grid_str, out, count):
    """Generate a synthetic trajectory dataset (JSON Lines)."""
    if out is None:
        raise click.UsageError("gen-data requires --out")
    if count < 1:
        raise click.UsageError("--count must be >= 1")
    cfg = _resolved(config_path, grid_str)
    _announce("gen-data", seed, cfg, count=count, out=str(out))
    records = gen_dataset(count, cfg.grid, cfg.sim, seed, out)
    click.echo(json.dumps({"written": str(out), "count": len(records)}))


@cli.command("train")
@_shared
@click.option("--data", "data_path", type=click.Path(), required=True)
@click.option("--epochs", type=int, default=None)
@click.option("--lr", type=float, default=None)
def train_cmd(seed, config_path, grid_str, out, data_path, epochs, lr):
    """Train the intent model on a dataset."""
    if out is None:
        raise click.UsageError("train requires --out (model file path)")
    extra = {}
    if epochs is not None:
        extra["train_epochs"] = epochs
    if lr is not None:
        extra["train_lr"] = lr
    cfg = _resolved(config_path, grid_str, extra)
    _announce("train", seed, cfg, data=str(data_path), out=str(out))
    records = load_dataset(data_path)
    seqs = to_training_sequences(records)
    tcfg = replace(cfg.train, seed=seed)
    model, losses = train(seqs, cfg.grid, tcfg, log=lambda e, l: click.echo(
        json.dumps({"epoch": e, "loss": l})))
    save_model(model, out)
    click.echo(json.dumps({"written": str(out), "final_loss": losses[-1]}))


@cli.command("eval")
@_shared
@click.option("--data", "data_path", type=click.Path(), required=True)
@click.option("--model", "model_path", type=click.Path(), required=True)
def eval_cmd(seed, config_path, grid_str, out, data_path, model_path):
    """Report prediction errors of a trained model on a dataset."""
    cfg = _resolved(config_path, grid_str)
    _announce("eval", seed, cfg, data=str(data_path), model=str(model_path))
    model = _load_checked_model(model_path, cfg.grid)
    records = load_dataset(data_path)
    seqs = to_training_sequences(records)
    report = evaluate(model, seqs, gamma=cfg.eval_gamma)
    summary = report.summary()
    click.echo(json.dumps(summary, sort_keys=True))
    if out is not None:
        Path(out).write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")


@cli.command("study")
@_shared
@click.option("--mode", type=click.Choice(["reactive", "preemptive", "both"]),
              default="both", show_default=True)
@click.option("--trials", type=int, default=15, show_default=True,
              help="Trials (distinct seeds) per cell.")
@click.option("--cells", "cells_str", default="11", show_default=True,
              help="Count or explicit x,y;x,y list.")
@click.option("--model", "model_path", type=click.Path(), default=None,
              help="Trained model; omitted = ideal predictor.")
def study_cmd(seed, config_path, grid_str, out, mode, trials, cells_str, model_path):
    """Run the paired reactive/preemptive study and write reports."""
    if out is None:
        raise click.UsageError("study requires --out (report directory)")
    if trials < 1:
        raise click.UsageError("--trials must be >= 1")
    cfg = _resolved(config_path, grid_str)
    cells = _parse_cells(cells_str, cfg.grid)
    modes = MODES if mode == "both" else (mode,)
    _announce("study", seed, cfg, mode=mode, trials=trials,
              cells=[list(c) for c in cells],
              model=str(model_path) if model_path else None, out=str(out))
    predictor = None
    if "preemptive" in modes:
        predictor = (_load_checked_model(model_path, cfg.grid)
                     if model_path else OraclePredictor(cfg.grid))
    report = run_study(cells, trials, predictor, modes=modes, seed=seed,
                       config=cfg.trial_config())
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [
        export_report(report, out_dir / "report.json", "json"),
        export_report(report, out_dir / "report.csv", "csv"),
    ]
    if len(modes) == 2:
        from .figures import render_study_figures

        paths += render_study_figures(report, out_dir)
    click.echo(json.dumps({
        "overall": report.overall(),
        "errors": len(report.errors),
        "files": [str(p) for p in paths],
    }, sort_keys=True))


@cli.command("serve")
@_shared
@click.option("--port", type=int, default=8765, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--model", "model_path", type=click.Path(), default=None,
              help="Trained model; omitted = reactive-only sessions.")
def serve_cmd(seed, config_path, grid_str, out, port, host, model_path):
    """Serve the realtime WebSocket loop for the browser client."""
    cfg = _resolved(config_path, grid_str)
    _announce("serve", seed, cfg, port=port, host=host,
              model=str(model_path) if model_path else None)
    model = _load_checked_model(model_path, cfg.grid) if model_path else None
    from .service import create_app

    app = create_app(model=model, config=cfg, seed=seed)
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="warning")


def entry(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as e:
        click.echo(f"error: {e.format_message()}", err=True)
        ctx = e.ctx
        click.echo(ctx.get_usage() if ctx is not None else cli.get_usage(
            click.Context(cli, info_name="preplace")), err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except click.Abort:
        return 1
    except Exception as e:  # runtime failure, diagnostic on stderr
        click.echo(f"error: {type(e).__name__}: {e}", err=True)
        return 2
    return 0


def main() -> None:
    sys.exit(entry())


if __name__ == "__main__":
    main()
