"""Sparsity constraints: fixed prune count per row, or N:M blocks.

Both variants fix the number of kept weights in every row, which is what
decouples the rows and lets the engine refine them independently.
"""

from dataclasses import dataclass

import numpy as np

from .errors import IncompatibleConstraint, InfeasibleWarmstart


@dataclass(frozen=True)
class PerRow:
    """Prune exactly `prune_count` weights in every row."""

    prune_count: int


@dataclass(frozen=True)
class BlockNM:
    """Keep exactly `n_keep` weights in every contiguous block of `m_block`."""

    n_keep: int
    m_block: int


SparsityConstraint = PerRow | BlockNM


def validate_constraint(constraint, d_in: int) -> None:
    if isinstance(constraint, PerRow):
        if not 0 <= constraint.prune_count <= d_in:
            raise IncompatibleConstraint(
                f"prune_count {constraint.prune_count} outside [0, {d_in}]"
            )
    elif isinstance(constraint, BlockNM):
        if not 0 < constraint.n_keep <= constraint.m_block:
            raise IncompatibleConstraint(
                f"need 0 < n_keep <= m_block, got {constraint.n_keep}:{constraint.m_block}"
            )
        if d_in % constraint.m_block != 0:
            raise IncompatibleConstraint(
                f"d_in {d_in} not divisible by m_block {constraint.m_block}"
            )
    else:
        raise IncompatibleConstraint(f"unknown constraint {constraint!r}")


def block_size(constraint) -> int:
    """Swap-locality granularity: 0 means any-column swaps (per-row)."""
    return constraint.m_block if isinstance(constraint, BlockNM) else 0


def keep_count_per_row(constraint, d_in: int) -> int:
    if isinstance(constraint, PerRow):
        return d_in - constraint.prune_count
    return constraint.n_keep * (d_in // constraint.m_block)


def row_is_feasible(m_row, constraint) -> bool:
    m_row = np.asarray(m_row, dtype=np.float64).ravel()
    d_in = m_row.shape[0]
    if isinstance(constraint, PerRow):
        return int(np.count_nonzero(m_row == 1.0)) == d_in - constraint.prune_count
    blocks = m_row.reshape(d_in // constraint.m_block, constraint.m_block)
    return bool(np.all((blocks == 1.0).sum(axis=1) == constraint.n_keep))


def check_mask(mask, constraint) -> None:
    """Raise InfeasibleWarmstart naming the first offending row."""
    mask = np.asarray(mask, dtype=np.float64)
    if mask.ndim != 2:
        raise InfeasibleWarmstart(f"expected a 2-D mask, got ndim={mask.ndim}")
    validate_constraint(constraint, mask.shape[1])
    for i in range(mask.shape[0]):
        if not row_is_feasible(mask[i], constraint):
            raise InfeasibleWarmstart(
                f"row {i} violates {format_constraint(constraint)}", row=i
            )


def parse_constraint(text: str):
    """Parse "perrow:<p>" or "nm:<N>:<M>" command-line constraint specs."""
    parts = text.split(":")
    try:
        if parts[0] == "perrow" and len(parts) == 2:
            return PerRow(prune_count=int(parts[1]))
        if parts[0] == "nm" and len(parts) == 3:
            return BlockNM(n_keep=int(parts[1]), m_block=int(parts[2]))
    except ValueError:
        pass
    raise IncompatibleConstraint(
        f"unrecognized constraint spec {text!r} (want perrow:<p> or nm:<N>:<M>)"
    )


def format_constraint(constraint) -> str:
    if isinstance(constraint, PerRow):
        return f"perrow:{constraint.prune_count}"
    return f"nm:{constraint.n_keep}:{constraint.m_block}"
