from anatomy.exceptions import ConfigurationError


class InvalidPatternError(ConfigurationError):
    """
    A ruleset pattern is not a valid regular expression.

    Attributes:
        rule_index (int): 0-based position of the rule in the ruleset.
    """

    default_detail = "Invalid pattern in category ruleset."

    def __init__(self, rule_index, pattern, reason):
        self.rule_index = rule_index
        self.pattern = pattern
        super().__init__(f"rule {rule_index}: invalid pattern {pattern!r}: {reason}")


class RulesetFileError(ConfigurationError):
    default_detail = "The category ruleset file could not be loaded."
