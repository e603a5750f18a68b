import logging

from django.core.management.base import BaseCommand, CommandError

from anatomy.exceptions import AnatomyError, ConfigurationError

from ..config import CliConfig

logger = logging.getLogger(__name__)


class AnalysisCommand(BaseCommand):
    """
    Base of the analysis commands.

    Subclasses implement ``run(config, **options)`` and return the data
    product as text; it is written to stdout. Diagnostics go to stderr, and an
    ``AnatomyError`` becomes a ``CommandError`` carrying the error's exit code.
    """

    formats = ("text", "json")
    default_format = "text"

    def add_arguments(self, parser):
        parser.add_argument("--config", help="YAML file overriding the settings defaults.")
        parser.add_argument(
            "--format",
            choices=self.formats,
            help=f"Output format (default: {self.default_format}).",
        )
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        try:
            config = CliConfig.from_options(options, self.default_format)
            if config.output_format not in self.formats:
                raise ConfigurationError(
                    f"{self.command_name()} writes {', '.join(self.formats)}, not {config.output_format}"
                )
            # ``--config`` (the YAML path) is consumed above; it would clash with run()'s ``config``.
            run_options = {key: value for key, value in options.items() if key != "config"}
            output = self.run(config, **run_options)
        except AnatomyError as e:
            logger.info(f"{self.command_name()} failed with exit code {e.exit_code}: {e.detail}")
            raise CommandError(e.detail, returncode=e.exit_code) from e
        self.stdout.write(output)

    def run(self, config, **options):
        raise NotImplementedError("subclasses of AnalysisCommand must provide a run() method")

    def command_name(self):
        return self.__module__.rsplit(".", 1)[-1]

    def warn(self, message):
        self.stderr.write(message)

