from anatomy.exceptions import ConfigurationError, InputError


class InvalidDotOptionsError(ConfigurationError):
    default_detail = "Invalid DOT rendering options."


class DocumentError(InputError):
    """A JSON document does not follow the documented schema."""

    default_detail = "The JSON document is not a valid anatomy document."
