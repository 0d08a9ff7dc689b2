"""Exception types shared across the package."""


class WasmTaintError(Exception):
    """Base class for all errors raised by this package."""


class DecodeError(WasmTaintError):
    """Malformed or unsupported binary input. Carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class ValidationError(WasmTaintError):
    """Module uses opcodes outside the supported subset or fails type-checking."""

    def __init__(self, message: str, func_index: int | None = None):
        if func_index is not None:
            message = f"{message} (in function {func_index})"
        super().__init__(message)
        self.func_index = func_index


class LinkError(WasmTaintError):
    """Instantiation failure: unresolved import, bad data segment, start trap."""


class TaintEncodingError(WasmTaintError):
    """Flag bits do not fit the flag field of a probabilistic label."""


class Trap(WasmTaintError):
    """Runtime trap. ``kind`` is a short stable string; ``offset`` is the
    byte offset of the faulting opcode inside the module, once known."""

    def __init__(self, kind: str, offset: int | None = None, func_index: int | None = None):
        super().__init__(kind)
        self.kind = kind
        self.offset = offset
        self.func_index = func_index

    def __str__(self) -> str:
        where = ""
        if self.func_index is not None:
            where = f" in function {self.func_index}"
        if self.offset is not None:
            where += f" at offset {self.offset}"
        return self.kind + where


# Stable trap kind strings (wasm spec wording).
TRAP_UNREACHABLE = "unreachable"
TRAP_OOB = "out of bounds memory access"
TRAP_DIV_ZERO = "integer divide by zero"
TRAP_INT_OVERFLOW = "integer overflow"
TRAP_BAD_CONVERSION = "invalid conversion to integer"
TRAP_STACK_EXHAUSTED = "call stack exhausted"
