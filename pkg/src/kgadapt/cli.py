"""Command-line entry point; one subcommand per pipeline stage.

Exit codes: 0 on success, 1 for configuration or input validation errors
(including missing upstream artifacts, which name the stage to run first),
2 for unexpected runtime failures.
"""

from __future__ import annotations

import sys
import traceback

import click
import yaml

from . import pipeline
from .config import ConfigError, PipelineConfig, config_from_dict, load_config
from .corpus import CorpusFormatError
from .clustering import LabelFileError
from .pipeline import MissingArtifactError

_VALIDATION_ERRORS = (ConfigError, CorpusFormatError, LabelFileError,
                      MissingArtifactError, FileNotFoundError, ValueError)


def _parse_override(pair: str) -> tuple[str, object]:
    if "=" not in pair:
        raise ConfigError(f"override must look like key=value, got {pair!r}")
    key, raw = pair.split("=", 1)
    return key, yaml.safe_load(raw)


def _load(config_path, seed, overrides) -> PipelineConfig:
    parsed = dict(_parse_override(p) for p in overrides)
    if seed is not None:
        parsed["seed"] = seed
    if config_path is not None:
        return load_config(config_path, overrides=parsed)
    raw: dict = {}
    for dotted, value in parsed.items():
        node = raw
        *parents, leaf = dotted.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    cfg = config_from_dict(raw)
    errors = cfg.validate()
    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
    return cfg


def _run(stage_fn, cfg, *args) -> None:
    try:
        out = stage_fn(cfg, *args)
    except _VALIDATION_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except Exception as exc:
        click.echo(f"runtime failure: {exc}", err=True)
        traceback.print_exc()
        sys.exit(2)
    click.echo(f"wrote {out}")


_config_option = click.option(
    "-c", "--config", "config_path", type=click.Path(exists=True),
    default=None, help="YAML configuration file.")
_seed_option = click.option("--seed", type=int, default=None,
                            help="Override the pipeline seed.")
_set_option = click.option(
    "-s", "--set", "overrides", multiple=True, metavar="KEY=VALUE",
    help="Dotted-key config override, e.g. -s clustering.k=8.")


def _stage_command(name: str, stage_fn):
    @main.command(name=name)
    @_config_option
    @_seed_option
    @_set_option
    def command(config_path, seed, overrides):
        try:
            cfg = _load(config_path, seed, overrides)
        except _VALIDATION_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        _run(stage_fn, cfg)
    command.__doc__ = stage_fn.__doc__
    return command


@click.group()
def main():
    """Knowledge acquisition, adapter infusion and distillation pipeline."""


for _name, _fn in [
    ("synth", pipeline.stage_synth),
    ("mine", pipeline.stage_mine),
    ("cluster", pipeline.stage_cluster),
    ("annotate", pipeline.stage_annotate),
    ("build-kg", pipeline.stage_build_kg),
    ("pretrain-adapter", pipeline.stage_pretrain_adapter),
    ("finetune", pipeline.stage_finetune),
    ("distill", pipeline.stage_distill),
    ("eval", pipeline.stage_eval),
    ("bench", pipeline.stage_bench),
]:
    _stage_command(_name, _fn)


@main.command(name="label-apply")
@_config_option
@_seed_option
@_set_option
@click.option("--labels", "labels_path", required=True,
              type=click.Path(), help="TSV file of cluster -> relation names.")
def label_apply(config_path, seed, overrides, labels_path):
    """Apply operator-provided cluster names to the clustered sample."""
    try:
        cfg = _load(config_path, seed, overrides)
    except _VALIDATION_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    _run(pipeline.stage_label_apply, cfg, labels_path)


if __name__ == "__main__":
    main()
