"""Sparse shadow map carrying one taint label per linear-memory byte.

Storage is proportional to the number of tainted bytes, never to memory
size. A zero label is never stored: storing untainted data over a range
deletes any stale entries there.
"""

from __future__ import annotations

from .taint import LABEL_BITS, PropagationConfig, TaintLabel, TaintMode


class ShadowMemory:
    __slots__ = ("entries",)

    def __init__(self):
        self.entries: dict[int, int] = {}

    def taint_range(self, addr: int, width: int, label: TaintLabel) -> None:
        """Set every byte in [addr, addr+width) to ``label``, or delete the
        bytes' entries when ``label`` is zero."""
        entries = self.entries
        if label:
            for a in range(addr, addr + width):
                entries[a] = label
        elif entries:
            for a in range(addr, addr + width):
                entries.pop(a, None)

    def read_range(self, addr: int, width: int, cfg: PropagationConfig) -> TaintLabel:
        """Combined label of the bytes in [addr, addr+width): flags are ORed;
        in probabilistic mode the probability field is the max over the
        entries present. Absent bytes contribute nothing."""
        entries = self.entries
        if not entries:
            return 0
        if cfg.mode is TaintMode.BASIC:
            out = 0
            for a in range(addr, addr + width):
                out |= entries.get(a, 0)
            return out
        shift = LABEL_BITS - cfg.probability_bits
        fmask = (1 << shift) - 1
        flags = 0
        m = 0
        for a in range(addr, addr + width):
            lab = entries.get(a, 0)
            if lab:
                flags |= lab & fmask
                mm = lab >> shift
                if mm > m:
                    m = mm
        if not flags:
            return 0
        return (m << shift) | flags

    def clear(self) -> None:
        self.entries.clear()

    def dump(self) -> list[tuple[int, int]]:
        """Sorted (address, label) pairs for post-run inspection."""
        return sorted(self.entries.items())

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)
