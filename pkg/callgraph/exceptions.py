from anatomy.exceptions import AnatomyError


class UnknownFunctionError(AnatomyError):
    default_detail = "The function is not part of this call graph."


class EmptyGraphError(AnatomyError):
    default_detail = "The call graph has no nodes."
