from anatomy.exceptions import AnatomyError, ConfigurationError


class UnknownEntryError(AnatomyError):
    default_detail = "The entry point is not part of the graph."


class ReferenceFileError(ConfigurationError):
    default_detail = "The reference architecture file could not be loaded."
