"""Exception hierarchy.

Every error raised by this package derives from :class:`CwcError`.  The two
intermediate classes map onto the CLI's stable exit codes: bad input or a
malformed file is an :class:`InputError` (exit 2), a failed factorization or
other numerical breakdown is a :class:`NumericalError` (exit 3).
"""


class CwcError(Exception):
    exit_code = 1


class InputError(CwcError):
    """Invalid user input: shapes, values, labels, or file contents."""

    exit_code = 2


class NumericalError(CwcError):
    """Numerical failure inside a solver."""

    exit_code = 3


class NonFiniteInput(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class ZeroColumn(InputError):
    def __init__(self, index: int):
        super().__init__(f"column {index} has (near-)zero l2 norm")
        self.index = index


class ZeroQuery(InputError):
    pass


class SingularSystem(NumericalError):
    pass


class EmptyClass(InputError):
    def __init__(self, label):
        super().__init__(f"class {label!r} has no samples")
        self.label = label


class SingleClass(InputError):
    pass


class BadMagic(InputError):
    pass


class UnsupportedVersion(InputError):
    pass


class TruncatedFile(InputError):
    pass


class ShapeOverflow(InputError):
    pass


class CountMismatch(InputError):
    pass


class EmptyFile(InputError):
    pass


class ClassTooSmall(InputError):
    def __init__(self, label, message: str = ""):
        super().__init__(message or f"class {label!r} is too small for the requested split")
        self.label = label


class LabelMismatch(InputError):
    def __init__(self, index: int):
        super().__init__(f"paired views disagree on the label of sample {index}")
        self.index = index
