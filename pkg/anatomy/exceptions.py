"""
Error hierarchy shared by every app.

Each error carries an ``exit_code`` (used by the management commands) and a
``default_detail`` message, the same way DRF's ``APIException`` carries a
status code and a default detail.
"""


class AnatomyError(Exception):
    exit_code = 1
    default_detail = "The analysis could not be completed."

    def __init__(self, detail=None):
        self.detail = detail if detail is not None else self.default_detail
        super().__init__(self.detail)


class InputError(AnatomyError):
    """An input file is missing, unreadable or malformed."""

    exit_code = 2
    default_detail = "The input could not be read."


class ConfigurationError(AnatomyError):
    """A ruleset, reference architecture, config file or flag is invalid."""

    exit_code = 3
    default_detail = "The configuration is invalid."
