"""Taint labels and the propagation algebra.

A label is a 32-bit word attached to every runtime value. In basic mode all
32 bits are taint flags, combined by bitwise OR at non-comparison binary
operations. In probabilistic mode the top ``probability_bits`` bits hold a
propagation-probability numerator ``m`` (the encoded probability is
``m / (2**n - 1)``) and the remaining low bits are the flags; each operand's
flags then survive a binary operation only with its encoded probability.

Untainted data never carries a probability: a label whose flag bits are all
zero is the all-zero word, and every operation here preserves that.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum

from .errors import TaintEncodingError

# Labels are plain ints holding a 32-bit word.
TaintLabel = int

LABEL_BITS = 32
WORD_MASK = 0xFFFFFFFF


class TaintMode(Enum):
    BASIC = "basic"
    PROBABILISTIC = "probabilistic"


@dataclass(frozen=True)
class PropagationConfig:
    """How labels are interpreted and combined for one instance.

    ``probability_bits`` is ignored in basic mode; in probabilistic mode it
    is fixed for the lifetime of an instance.
    """

    mode: TaintMode = TaintMode.BASIC
    probability_bits: int = 8
    rng_seed: int = 0

    def __post_init__(self):
        if not 1 <= self.probability_bits <= 16:
            raise ValueError(f"probability_bits must be in [1, 16], got {self.probability_bits}")

    @property
    def flag_mask(self) -> int:
        if self.mode is TaintMode.BASIC:
            return WORD_MASK
        return (1 << (LABEL_BITS - self.probability_bits)) - 1

    @property
    def max_numerator(self) -> int:
        return (1 << self.probability_bits) - 1


class RandomSource:
    """Deterministic uniform-[0,1) source owned by a single instance.

    The same seed and the same draw sequence reproduce identical outputs.
    Probabilistic propagation draws once per flagged operand, first operand
    first.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self.draw = random.Random(seed).random


def flags_of(label: TaintLabel, cfg: PropagationConfig) -> int:
    """Flag bits of ``label``: the whole word in basic mode, the low
    ``32 - probability_bits`` bits otherwise."""
    return label & cfg.flag_mask


def probability_of(label: TaintLabel, cfg: PropagationConfig) -> float:
    """Decoded propagation probability ``m / (2**n - 1)`` of ``label``.

    Untainted labels (no flag bits) have probability 0. Meaningless in basic
    mode, where it is a caller error.
    """
    if cfg.mode is not TaintMode.PROBABILISTIC:
        raise ValueError("probability_of is only defined in probabilistic mode")
    if label & cfg.flag_mask == 0:
        return 0.0
    m = label >> (LABEL_BITS - cfg.probability_bits)
    return m / cfg.max_numerator


def with_probability(flags: int, p: float, cfg: PropagationConfig) -> TaintLabel:
    """Encode ``flags`` with propagation probability ``p``.

    Uses round-to-nearest for the numerator. Zero flags encode to the zero
    label regardless of ``p`` (no orphan probability).
    """
    if cfg.mode is not TaintMode.PROBABILISTIC:
        raise ValueError("with_probability is only defined in probabilistic mode")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {p}")
    if flags & ~cfg.flag_mask:
        raise TaintEncodingError(
            f"flags 0x{flags:x} overflow the {LABEL_BITS - cfg.probability_bits}-bit flag field"
        )
    if flags == 0:
        return 0
    m = round(p * cfg.max_numerator)
    return (m << (LABEL_BITS - cfg.probability_bits)) | flags


def normalize_label(raw: int, cfg: PropagationConfig) -> TaintLabel:
    """Clamp a caller-supplied word to 32 bits and zero it when it carries
    no flags, restoring the no-orphan-probability invariant."""
    raw &= WORD_MASK
    if raw & cfg.flag_mask == 0:
        return 0
    return raw


def propagate_unop(t: TaintLabel) -> TaintLabel:
    """Unary operations pass the operand's label through unchanged."""
    return t


def propagate_binop(
    t1: TaintLabel,
    t2: TaintLabel,
    is_comparison: bool,
    cfg: PropagationConfig,
    rng: RandomSource,
) -> TaintLabel:
    """Label of a binary operation's result.

    Comparisons never propagate taint. Non-comparison results get the OR of
    both labels in basic mode; in probabilistic mode each operand's flags are
    included independently with that operand's encoded probability, and a
    nonzero result carries max(p1, p2).
    """
    if is_comparison:
        return 0
    if cfg.mode is TaintMode.BASIC:
        return (t1 | t2) & WORD_MASK
    return _combine_prob(
        t1, t2, LABEL_BITS - cfg.probability_bits, cfg.max_numerator, rng.draw
    )


def _combine_prob(t1: int, t2: int, shift: int, top: int, draw) -> int:
    # Hot path shared with the interpreter: one uniform draw per flagged
    # operand, operand 1 first. Unflagged operands neither draw nor carry
    # probability into the max.
    fmask = (1 << shift) - 1
    f1 = t1 & fmask
    f2 = t2 & fmask
    m1 = t1 >> shift if f1 else 0
    m2 = t2 >> shift if f2 else 0
    flags = 0
    if f1 and draw() * top < m1:
        flags = f1
    if f2 and draw() * top < m2:
        flags |= f2
    if not flags:
        return 0
    return ((m1 if m1 >= m2 else m2) << shift) | flags
