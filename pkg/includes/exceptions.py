from anatomy.exceptions import InputError


class ScanRootError(InputError):
    default_detail = "The source tree to scan does not exist or is not a directory."
