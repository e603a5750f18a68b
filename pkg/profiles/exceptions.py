from anatomy.exceptions import InputError


class CallgrindSyntaxError(InputError):
    """
    A line of a Callgrind file does not follow the accepted grammar.

    Attributes:
        line_number (int): 1-based line number in the input.
        token (str): the offending token.
    """

    default_detail = "Malformed Callgrind profile."

    def __init__(self, line_number, token, message):
        self.line_number = line_number
        self.token = token
        self.message = message
        super().__init__(f"line {line_number}: {message} (near {token!r})")


class EmptyProfileError(InputError):
    default_detail = "No 'events:' line found; this is not a Callgrind profile."


class EventMismatchError(InputError):
    default_detail = "Profile parts declare different events and cannot be merged."


class UnwritableNameError(InputError):
    default_detail = "A name cannot be written as a Callgrind line."
