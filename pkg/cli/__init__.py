"""Command-line front end: run documents, subcommands and report writers."""

from cli.commands import main
from cli.config import ConfigError, RunConfig, load_config, parse_config
from cli.emit import emit, render

__all__ = ["ConfigError", "RunConfig", "emit", "load_config", "main", "parse_config", "render"]
