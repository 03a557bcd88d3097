"""Shared plumbing of the run commands.

Configuration resolves as built-in defaults < `--config` file < flags, is
validated by the command's serializer and snapshotted next to the outputs.
Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

import argparse
import logging
import sys
from pathlib import Path

import yaml
from django.core.management.base import BaseCommand, CommandError, handle_default_options

from core.exceptions import ConfigError, UpliftError
from core.validation import validate_with
from runs.artifacts import write_config

logger = logging.getLogger(__name__)

USAGE_ERROR = 1
DATA_ERROR = 2


def comma_list(value):
    return [item.strip() for item in value.split(",") if item.strip()]


def int_list(value):
    try:
        return [int(item) for item in comma_list(value)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{value}'")


def float_list(value):
    try:
        return [float(item) for item in comma_list(value)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{value}'")


def load_config_file(path):
    """Read a YAML or JSON run config; it must hold a mapping."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file {path} not found")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"Config file {path} is not valid YAML/JSON: {exc}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must contain a mapping of keys to values")
    return data


class RunCommand(BaseCommand):
    """Base class of the run commands. Subclasses set `config_serializer` and implement `run`."""

    config_serializer = None
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument('--out', help='Output directory')
        parser.add_argument('--seed', type=int, help='Run seed')
        parser.add_argument('--config', help='YAML or JSON run config; flags take precedence')
        self.add_run_arguments(parser)

    def add_run_arguments(self, parser):
        pass

    def resolve_config(self, options):
        data = load_config_file(options['config']) if options.get('config') else {}
        fields = self.config_serializer().fields
        data.update({key: value for key, value in options.items() if key in fields and value is not None})
        return validate_with(self.config_serializer, data)

    def run(self, config, out):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            config = self.resolve_config(options)
            out = Path(config['out'])
            out.mkdir(parents=True, exist_ok=True)
            logger.info(f"'{self.command_name()}' writing to {out}")
            write_config(out, {'command': self.command_name(), **config})
            self.run(config, out)
        except ConfigError as exc:
            raise CommandError(str(exc), returncode=USAGE_ERROR)
        except (UpliftError, OSError) as exc:
            raise CommandError(f"{exc.__class__.__name__}: {exc}", returncode=DATA_ERROR)

    def command_name(self):
        return self.__module__.rsplit(".", 1)[-1]

    def run_from_argv(self, argv):
        """Like BaseCommand.run_from_argv, but argparse usage errors exit with 1."""
        self._called_from_command_line = True
        parser = self.create_parser(argv[0], argv[1])
        try:
            options = parser.parse_args(argv[2:])
        except SystemExit as exc:
            sys.exit(USAGE_ERROR if exc.code else 0)
        cmd_options = vars(options)
        args = cmd_options.pop('args', ())
        handle_default_options(options)
        try:
            self.execute(*args, **cmd_options)
        except CommandError as exc:
            self.stderr.write(f"{exc.__class__.__name__}: {exc}")
            sys.exit(exc.returncode)

    def success(self, message):
        self.stdout.write(self.style.SUCCESS(message))


def add_training_arguments(parser):
    group = parser.add_argument_group('training')
    group.add_argument('--iterations', type=int, help='Adam steps')
    group.add_argument('--lr', type=float, help='Adam learning rate')
    group.add_argument('--hidden-layers', type=int_list, help='Comma-separated hidden widths; empty for linear')
    group.add_argument('--reg', type=float, help='L2 weight on the scorer parameters')
    group.add_argument('--batch-size', type=int, help='Mini-batch size (default full batch)')
    group.add_argument('--form', help='Ranking objective form')
    group.add_argument('--alpha', type=float, help='Cost weight of the linear objective form')
    group.add_argument('--percentage', type=float, help='Constrained ranking target fraction P')
    group.add_argument('--budget', type=float, help='Constrained ranking cost budget B')
    group.add_argument('--budget-order', help="Budget threshold order: 'probability' or 'cost'")
    group.add_argument('--lambda-strategy', help="Duality lambda strategy: 'grid' or 'dual'")
    group.add_argument('--lambda-grid', type=float_list, help='Comma-separated lambda grid')
    group.add_argument('--propensity', help="Propensity model: 'constant' or 'logistic'")
    group.add_argument('--propensity-mode', help="DRM-with-propensity objective: 'linear' or 'ratio'")
    group.add_argument('--ridge-reg', type=float, help='Ridge penalty of the R-learner regressions')
