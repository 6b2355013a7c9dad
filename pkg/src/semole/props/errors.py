class PropertyError(ValueError):
    pass


class UntypedAtom(PropertyError):
    def __init__(self, atom: int, symbol: str = "?"):
        super().__init__(f"atom {atom} ({symbol}) matches no atom type")
        self.atom = atom


class MalformedRow(PropertyError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class NonFiniteValue(MalformedRow):
    pass
