class MiniJError(Exception):
    pass


class MiniJSyntaxError(MiniJError):
    def __init__(self, message: str, line: int, col: int, expected=()):
        self.line = line
        self.col = col
        self.expected = tuple(sorted(set(expected)))
        detail = f"{line}:{col}: {message}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class BindingError(MiniJError):
    pass


class UnknownCallee(BindingError):
    pass


class PreconditionViolated(MiniJError):
    def __init__(self, step, reason: str, index=None):
        self.step = step
        self.reason = reason
        self.index = index
        where = f"step {index}: " if index is not None else ""
        super().__init__(f"{where}{type(step).__name__}: {reason}")
