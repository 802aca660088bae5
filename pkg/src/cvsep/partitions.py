"""Set partitions of subsystem indices and the block-swap action on probes.

A k-partition of {0, ..., n-1} splits the subsystems into k disjoint
non-empty blocks.  Partitions drive the permutation operators of the
separability inequality: swapping the coordinates of one block between
the two probe points produces the "mixed" points whose diagonal kernel
values enter each partition term.

Partitions are kept in canonical form (blocks ordered by their smallest
element, indices ascending inside a block) and enumeration order is the
lexicographic order of the corresponding restricted growth strings, so
scans and reports are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Sequence

import numpy as np

from .errors import SizeLimitError

MAX_N = 12


@dataclass(frozen=True)
class SetPartition:
    """A k-partition of the n subsystem indices, in canonical form."""

    blocks: tuple[tuple[int, ...], ...]
    n: int

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for block in self.blocks:
            if not block:
                raise ValueError("empty block in partition")
            if list(block) != sorted(block):
                raise ValueError("block indices must be ascending")
            if seen & set(block):
                raise ValueError("blocks must be disjoint")
            seen |= set(block)
        if seen != set(range(self.n)):
            raise ValueError("blocks must cover exactly {0, ..., n-1}")
        firsts = [block[0] for block in self.blocks]
        if firsts != sorted(firsts):
            raise ValueError("blocks must be ordered by smallest element")

    @property
    def k(self) -> int:
        return len(self.blocks)

    def __str__(self) -> str:
        return "|".join("".join(str(i) for i in block) for block in self.blocks)


def canonical_partition(blocks: Iterable[Iterable[int]], n: int) -> SetPartition:
    """Bring an arbitrary block list into canonical form."""
    norm = tuple(sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0]))
    return SetPartition(norm, n)


def enumerate_partitions(n: int, k: int) -> list[SetPartition]:
    """All k-partitions of {0, ..., n-1} in canonical (RGS-lexicographic) order.

    Enumeration walks restricted growth strings: element 0 always opens
    block 0, and element i may join any existing block or open the next
    one.  Pruning keeps only strings that can still reach exactly k blocks.
    """
    _check_args(n, k)
    if n > MAX_N:
        raise SizeLimitError(f"n={n} exceeds the supported maximum {MAX_N}")
    result: list[SetPartition] = []
    assignment = [0] * n

    def extend(i: int, used: int) -> None:
        if i == n:
            if used == k:
                blocks: list[list[int]] = [[] for _ in range(k)]
                for idx, lab in enumerate(assignment):
                    blocks[lab].append(idx)
                result.append(SetPartition(tuple(tuple(b) for b in blocks), n))
            return
        # remaining elements must be able to open the still-missing blocks
        if used + (n - i) < k:
            return
        top = min(used, k - 1)
        for lab in range(top + 1):
            assignment[i] = lab
            extend(i + 1, used if lab < used else used + 1)

    extend(0, 0)
    return result


@lru_cache(maxsize=None)
def _stirling(n: int, k: int) -> int:
    if k == 0:
        return 1 if n == 0 else 0
    if k > n:
        return 0
    if k == n:
        return 1
    return k * _stirling(n - 1, k) + _stirling(n - 1, k - 1)


def partition_count(n: int, k: int) -> int:
    """Number of k-partitions of an n-set (Stirling number of the second kind)."""
    _check_args(n, k)
    return _stirling(n, k)


def bell_number(n: int) -> int:
    """Total number of partitions of an n-set, via B(n+1) = sum C(n,i) B(i)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    bells = [1]
    for m in range(n):
        bells.append(sum(comb(m, i) * bells[i] for i in range(m + 1)))
    return bells[n]


def partition_count_alternating_sum(n: int, k: int) -> float:
    """Alternating-sum form of the k-partition count.

    sum_{i=1}^{k} (-1)^(k-i) i^(n-1) / ((i-1)! (k-i)!), which equals the
    Stirling number of the second kind exactly (checked in the tests).
    """
    _check_args(n, k)
    return sum(
        (-1) ** (k - i) * i ** (n - 1) / (factorial(i - 1) * factorial(k - i))
        for i in range(1, k + 1)
    )


def block_swap(
    phi1: Sequence[float], phi2: Sequence[float], block: Iterable[int]
) -> tuple[np.ndarray, np.ndarray]:
    """Exchange the coordinates of `block` between the two probe points.

    Returns (chi, chi') where chi carries phi2's coordinates on the block
    and phi1's elsewhere, and chi' is the complementary exchange.  Applying
    the same swap twice is the identity.
    """
    a = np.asarray(phi1, dtype=float)
    b = np.asarray(phi2, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("probe points must be 1-d and of equal dimension")
    idx = list(block)
    if any(i < 0 or i >= a.size for i in idx):
        raise ValueError("block index out of range")
    chi = a.copy()
    chi_p = b.copy()
    chi[idx] = b[idx]
    chi_p[idx] = a[idx]
    return chi, chi_p


def _check_args(n: int, k: int) -> None:
    if n < 1:
        raise ValueError("n must be a positive integer")
    if k < 1 or k > n:
        raise ValueError(f"k must satisfy 1 <= k <= n, got k={k}, n={n}")
