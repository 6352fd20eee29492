"""
Shared flags and error mapping for the V&V management commands

Exit codes: 0 ok, 1 other toolkit error, 2 config error, 3 experiment
failed, 4 I/O error. On success stdout carries the primary artifact path
(or a JSON document with --json); progress lines appear at -v 2.
"""
import json
import logging

from django.core.management.base import BaseCommand, CommandError

from vnv.config import ExperimentConfig, load_config
from vnv.exceptions import ConfigError, ExperimentFailedError, VnvError
from vnv.persistence import json_safe

logger = logging.getLogger(__name__)

EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_EXPERIMENT_FAILED = 3
EXIT_IO = 4


class VnvCommand(BaseCommand):
    """Base for commands that resolve an ExperimentConfig"""
    config_flags = True

    def add_arguments(self, parser):
        if self.config_flags:
            parser.add_argument(
                '--config',
                help='JSON config file overlaid on the defaults'
            )
            parser.add_argument(
                '--preset',
                help='Named settings preset applied before --config (desk, paper, oracle)'
            )
            parser.add_argument(
                '--set',
                dest='overrides',
                action='append',
                default=[],
                metavar='KEY=VALUE',
                help='Dotted config override, e.g. --set abcde.epsilon=4.94 (repeatable)'
            )
            parser.add_argument(
                '--workers',
                type=int,
                help='Worker processes for simulation and fitting (1 = in-process)'
            )
        parser.add_argument(
            '--json',
            action='store_true',
            help='Print a machine-readable JSON document instead of the artifact path'
        )
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def load_config(self, options) -> ExperimentConfig:
        overrides = list(options['overrides'])
        if options.get('workers') is not None:
            overrides.append(f"workers={options['workers']}")
        return load_config(options.get('config'), options.get('preset'), overrides)

    def progress(self, message: str, style=None):
        if self.verbosity >= 2:
            self.stdout.write(style(message) if style else message)

    def emit(self, path, document=None):
        """Primary output: the artifact path, or `document` as JSON with --json"""
        if self.as_json:
            self.stdout.write(json.dumps(json_safe(document or {'path': str(path)}), sort_keys=True, indent=2))
        else:
            self.stdout.write(str(path))

    def handle(self, *args, **options):
        self.verbosity = options['verbosity']
        self.as_json = options['json']
        try:
            self.run(options)
        except ConfigError as e:
            raise CommandError(f"config error: {e}", returncode=EXIT_CONFIG)
        except ExperimentFailedError as e:
            raise CommandError(f"experiment failed: {e}", returncode=EXIT_EXPERIMENT_FAILED)
        except VnvError as e:
            raise CommandError(f"{e.code}: {e}", returncode=EXIT_ERROR)
        except OSError as e:
            raise CommandError(f"I/O error: {e}", returncode=EXIT_IO)

    def run(self, options):
        raise NotImplementedError
