"""Command-line entry point: ``evfw fit | experiment | sweep-k | export-figures``."""

from __future__ import annotations

import functools
import logging
import sys
from pathlib import Path

import click

from .dataset import DatasetError
from .experiment import (
    EXTERNAL,
    ConfigError,
    ExperimentConfig,
    csv_text,
    dumps_json,
    export_figures,
    load_dataset,
    run_experiment,
    run_trial,
    sweep_k,
    write_atomic,
)

log = logging.getLogger("evfw")


def config_options(func):
    """Flags mirroring every config field; anything given overrides the file."""
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="YAML experiment config."),
        click.option("--dataset", help="CSV file to cluster."),
        click.option("--label-column", "label_column", help="Label column name or 0-based index."),
        click.option("--delimiter"),
        click.option("--scaling", type=click.Choice(["min-max", "z-score", "none"])),
        click.option("--method", type=click.Choice(["evfwfkm", "kmeans", "fcm"])),
        click.option("--k", "k", help="Cluster count, list '2,3' or range '2-6'."),
        click.option("--K1", "K1", help="K1 value or comma-separated grid."),
        click.option("--K2", "K2", help="K2 value or comma-separated grid."),
        click.option("--fuzzifier", type=float, help="FCM exponent."),
        click.option("--tol", type=float),
        click.option("--max-iter", "max_iter", type=int),
        click.option("--trials", type=int),
        click.option("--jobs", type=int, help="Concurrent trials."),
    ]
    for opt in reversed(opts):
        func = opt(func)

    @functools.wraps(func)
    def wrapper(ctx_obj, config_path, **fields):
        fields.update(ctx_obj)
        try:
            if config_path:
                cfg = ExperimentConfig.from_file(config_path, **fields)
            else:
                cfg = ExperimentConfig.from_mapping({}, **fields)
            return func(cfg.validate())
        except (ConfigError, DatasetError, ValueError) as exc:
            raise click.ClickException(str(exc)) from exc

    return click.pass_obj(wrapper)


@click.group()
@click.option("--seed", type=int, default=None, help="Base seed (trial t uses seed + t).")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("--quiet", is_flag=True, help="Only print warnings and errors.")
@click.pass_context
def main(ctx, seed, out, quiet):
    """Entropy-weighted fuzzy k-means experiments."""
    logging.basicConfig(level=logging.WARNING if quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    ctx.obj = {"seed": seed, "out": out}
    ctx.meta["quiet"] = quiet


def _echo(text):
    if not click.get_current_context().find_root().meta.get("quiet"):
        click.echo(text)


def _fmt_metric(name, value):
    if value is None:
        return f"{name}=null"
    return f"{name}={100 * value:.2f}%" if name in EXTERNAL else f"{name}={value:.4g}"


@main.command("fit")
@config_options
def fit_cmd(cfg: ExperimentConfig):
    """Single fit at the base seed and the first K1/K2 values."""
    if len(cfg.k) != 1:
        raise click.ClickException("fit takes a single k")
    data = load_dataset(cfg)
    report, model = run_trial(data, cfg, cfg.k[0], cfg.K1[0], cfg.K2[0], cfg.seed)
    out = Path(cfg.out)
    doc = {name: getattr(report, name) for name in report.__dataclass_fields__ if name != "wall_ms"}
    write_atomic(out / "fit.json", dumps_json(doc))
    write_atomic(out / "memberships.csv", csv_text(
        ("sample", "cluster") + tuple(f"u{j}" for j in range(model.k)),
        ([i, int(c)] + list(row) for i, (c, row) in enumerate(zip(model.labels, model.U)))))
    export_figures(model, data, out)
    _echo(" ".join([f"iterations={report.iterations}", f"converged={report.converged}"]
                   + [_fmt_metric(n, getattr(report, n)) for n in ("ar", "ri", "nmi", "pc", "ce", "xb", "di")]))


@main.command("experiment")
@config_options
def experiment_cmd(cfg: ExperimentConfig):
    """Run the multi-trial protocol and write summary/trials/figure data."""
    report = run_experiment(cfg)
    best = report.best
    s = best["summary"]
    _echo(f"selected K1={best['K1']:g} K2={best['K2']:g} over {s['n_trials']} trials "
          f"({s['n_converged']} converged)")
    for name in ("ar", "ri", "nmi", "pc", "ce", "xb", "di"):
        mean, std = s[name]["mean"], s[name]["std"]
        _echo(f"  {name:>3}: " + ("null" if mean is None else f"{mean:.4g} +/- {std:.3g}"))
    _echo(f"reports written to {cfg.out}")


@main.command("sweep-k")
@config_options
def sweep_cmd(cfg: ExperimentConfig):
    """Run the protocol for each k and tabulate PC, CE, XB, DI."""
    report = sweep_k(cfg)
    for row in report.rows:
        _echo(f"k={row['k']}: pc={row['pc']:.4g} ce={row['ce']:.4g} "
              f"xb={row['xb'] if row['xb'] is None else format(row['xb'], '.4g')} "
              f"di={row['di'] if row['di'] is None else format(row['di'], '.4g')}")
    _echo("optimal k: " + ", ".join(f"{n}={report.best_k(n)}" for n in ("pc", "ce", "xb", "di")))


@main.command("export-figures")
@config_options
def export_cmd(cfg: ExperimentConfig):
    """Fit once and write weights, lambda trace and objective trace."""
    if len(cfg.k) != 1:
        raise click.ClickException("export-figures takes a single k")
    data = load_dataset(cfg)
    _, model = run_trial(data, cfg, cfg.k[0], cfg.K1[0], cfg.K2[0], cfg.seed)
    for name, path in export_figures(model, data, cfg.out).items():
        _echo(f"{name}: {path}")


if __name__ == "__main__":
    main()
