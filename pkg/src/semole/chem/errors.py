"""Exceptions raised by the chemistry layer."""


class ChemError(ValueError):
    """Base class for molecule construction and validation failures."""


class SmilesError(ChemError):
    """A SMILES string could not be parsed.

    ``offset`` is the 0-based character position that triggered the error.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnbalancedBranch(SmilesError):
    pass


class UnmatchedRingClosure(SmilesError):
    pass


class UnknownAtomSymbol(SmilesError):
    pass


class MultiFragmentInput(SmilesError):
    pass


class ValenceViolation(ChemError):
    def __init__(self, message, atom=None, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.atom = atom
        self.offset = offset


class AromaticityError(ChemError):
    def __init__(self, message, atom=None, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.atom = atom
        self.offset = offset


class DisconnectedGraph(ChemError):
    pass
