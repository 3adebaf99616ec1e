"""Enumeration and counting of admissible symmetry configurations.

A configuration in dimension n picks a pinwheel level alpha and block
multiplicities (m_1, ..., m_k), k = floor(n/2) - 1, subject to the budget
0 < 2*(2*chi + sum m_j (j+1)) <= n with chi = 1 exactly when alpha > 0.
Regimes with a nonzero shared weight exponent additionally forbid a
one-dimensional leftover tail.  Counting is done two ways on purpose: a
partition-style dynamic program for the count alone, and explicit
enumeration for the configurations themselves; tests pin them together.

``max_distinct_family`` extracts a largest family of configurations that
are pairwise guaranteed distinct (a max clique in the pairwise verdict
graph; exact for small enumerations, greedy beyond that).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

from .codes import DistinctVerdict, distinct_guaranteed
from .kvdoc import format_kv, parse_kv, require_keys
from .symmetry import REGIMES, InvalidConfigError, SymmetryConfig, k_of

EXACT_CLIQUE_LIMIT = 20


def _multiplicity_tuples(k: int, budget: int) -> Iterator[tuple[int, ...]]:
    """All (m_1..m_k) >= 0 with sum m_j (j+1) <= budget, lexicographic."""
    def rec(slot: int, remaining: int, prefix: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if slot == k:
            yield prefix
            return
        width = slot + 2
        for count in range(remaining // width + 1):
            yield from rec(slot + 1, remaining - count * width, prefix + (count,))
    yield from rec(0, budget, ())


def _admissible(n: int, alpha: int, m: tuple[int, ...], regime: str) -> bool:
    chi = 1 if alpha > 0 else 0
    s = 2 * chi + sum(mj * (j + 2) for j, mj in enumerate(m))
    if not 0 < 2 * s <= n:
        return False
    if regime == "a_eq_b_nonzero" and n - 2 * s == 1:
        return False
    return True


def enumerate_configs(n: int, regime: str = "a_less_b",
                      alpha_max: int = 0) -> tuple[SymmetryConfig, ...]:
    """All admissible configurations, ordered by (alpha, m) lexicographically."""
    if regime not in REGIMES:
        raise InvalidConfigError(f"unknown regime {regime!r}")
    if n < 4:
        raise InvalidConfigError(f"need n >= 4, got n={n}")
    if alpha_max < 0:
        raise InvalidConfigError(f"alpha_max must be >= 0, got {alpha_max}")
    k = k_of(n)
    out: list[SymmetryConfig] = []
    for alpha in range(alpha_max + 1):
        chi = 1 if alpha > 0 else 0
        budget = n // 2 - 2 * chi
        if budget < 0:
            continue
        for m in _multiplicity_tuples(k, budget):
            if _admissible(n, alpha, m, regime):
                out.append(SymmetryConfig(n, alpha, m, regime=regime))
    return tuple(out)


@lru_cache(maxsize=None)
def _partition_counts(k: int, budget: int) -> tuple[int, ...]:
    """ways[s] = number of (m_1..m_k) with sum m_j (j+1) = s, parts 2..k+1."""
    ways = [0] * (budget + 1)
    ways[0] = 1
    for width in range(2, k + 2):
        for s in range(width, budget + 1):
            ways[s] += ways[s - width]
    return tuple(ways)


def count_configs(n: int, regime: str = "a_less_b", alpha_max: int = 0) -> int:
    """Same count as len(enumerate_configs(...)), via the partition DP."""
    if regime not in REGIMES:
        raise InvalidConfigError(f"unknown regime {regime!r}")
    if n < 4:
        raise InvalidConfigError(f"need n >= 4, got n={n}")
    k = k_of(n)
    total = 0
    for alpha in range(alpha_max + 1):
        chi = 1 if alpha > 0 else 0
        budget = n // 2 - 2 * chi
        if budget < 0:
            continue
        ways = _partition_counts(k, budget)
        for s_blocks, w in enumerate(ways):
            s = 2 * chi + s_blocks
            if s == 0:
                continue
            if regime == "a_eq_b_nonzero" and n - 2 * s == 1:
                continue
            total += w
    return total


def _prime_widths(k: int) -> tuple[int, ...]:
    def is_prime(v: int) -> bool:
        if v < 2:
            return False
        return all(v % d for d in range(2, int(math.isqrt(v)) + 1))
    return tuple(w for w in range(2, k + 2) if is_prime(w))


def prime_restricted_count(n: int) -> int:
    """Count level-zero configurations whose blocks all have prime width.

    The half-dimension budget applies as usual, and the single excluded
    total is the one that would leave a one-dimensional tail.
    """
    if n < 4:
        raise InvalidConfigError(f"need n >= 4, got n={n}")
    k = k_of(n)
    widths = _prime_widths(k)
    budget = n // 2
    ways = [0] * (budget + 1)
    ways[0] = 1
    for width in widths:
        for s in range(width, budget + 1):
            ways[s] += ways[s - width]
    total = 0
    for s, w in enumerate(ways):
        if s == 0:
            continue
        if 2 * s == n - 1:
            continue
        total += w
    return total


def prime_restricted_asymptotic(n: int) -> float:
    """Leading-order growth of the prime-width count as n -> infinity."""
    if n <= 2 or n / 2 <= 1:
        raise ValueError("asymptotic needs n large enough that ln(n/2) > 0")
    return math.exp(math.pi * math.sqrt(2.0 * n) / math.sqrt(3.0 * math.log(n / 2.0)))


@dataclass(frozen=True)
class ConfigFamily:
    """A family of same-dimension configurations with its pairwise verdicts."""

    configs: tuple[SymmetryConfig, ...]

    def __post_init__(self) -> None:
        dims = {c.n for c in self.configs}
        if len(dims) > 1:
            raise InvalidConfigError(f"family mixes dimensions {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.configs)

    def pairwise_verdicts(self) -> dict[tuple[int, int], DistinctVerdict]:
        out = {}
        for i in range(len(self.configs)):
            for j in range(i + 1, len(self.configs)):
                out[(i, j)] = distinct_guaranteed(self.configs[i], self.configs[j])
        return out

    def all_pairwise_distinct(self) -> bool:
        return all(v.guaranteed for v in self.pairwise_verdicts().values())

    def describe(self) -> str:
        lines = []
        for c in self.configs:
            lines.append(f"alpha={c.alpha} m=({', '.join(str(v) for v in c.m)})")
        return "\n".join(lines)


def _max_clique_exact(adj: list[set[int]]) -> tuple[int, ...]:
    n = len(adj)
    best: tuple[int, ...] = ()

    def grow(clique: tuple[int, ...], candidates: tuple[int, ...]) -> None:
        nonlocal best
        if len(clique) > len(best):
            best = clique
        for idx, v in enumerate(candidates):
            if len(clique) + len(candidates) - idx <= len(best):
                return  # bound: not enough candidates left
            grow(clique + (v,), tuple(u for u in candidates[idx + 1:] if u in adj[v]))

    grow((), tuple(range(n)))
    return best


def _max_clique_greedy(adj: list[set[int]]) -> tuple[int, ...]:
    order = sorted(range(len(adj)), key=lambda v: (-len(adj[v]), v))
    clique: list[int] = []
    for v in order:
        if all(u in adj[v] for u in clique):
            clique.append(v)
    return tuple(sorted(clique))


def max_distinct_family(n: int, regime: str = "a_less_b",
                        alpha_max: int = 0) -> ConfigFamily:
    """Largest family of pairwise guaranteed-distinct configurations.

    Exact branch-and-bound when at most EXACT_CLIQUE_LIMIT configurations
    are in play (ties resolved toward the lexicographically earliest
    family), greedy by descending degree beyond that.
    """
    configs = enumerate_configs(n, regime, alpha_max)
    adj: list[set[int]] = [set() for _ in configs]
    for i in range(len(configs)):
        for j in range(i + 1, len(configs)):
            if distinct_guaranteed(configs[i], configs[j]).guaranteed:
                adj[i].add(j)
                adj[j].add(i)
    if len(configs) <= EXACT_CLIQUE_LIMIT:
        picked = _max_clique_exact(adj)
    else:
        picked = _max_clique_greedy(adj)
    return ConfigFamily(tuple(configs[i] for i in sorted(picked)))


def family_to_doc(family: ConfigFamily, n: int | None = None,
                  regime: str | None = None) -> str:
    if family.configs:
        n = family.configs[0].n
        regime = family.configs[0].regime
    if n is None or regime is None:
        raise ValueError("empty family needs explicit n and regime")
    pairs = {"n": str(n), "regime": regime, "count": str(len(family))}
    for i, c in enumerate(family.configs):
        pairs[f"config {i}"] = f"alpha={c.alpha} m={','.join(str(v) for v in c.m)}"
    return format_kv(pairs)


def family_from_doc(text: str) -> ConfigFamily:
    pairs = parse_kv(text)
    count = int(pairs["count"])
    require_keys(pairs, ("n", "regime", "count"),
                 optional=tuple(f"config {i}" for i in range(count)))
    n = int(pairs["n"])
    regime = pairs["regime"]
    configs = []
    for i in range(count):
        raw = pairs[f"config {i}"]
        fields = dict(part.split("=", 1) for part in raw.split())
        alpha = int(fields["alpha"])
        m = tuple(int(v) for v in fields["m"].split(",")) if fields["m"] else ()
        configs.append(SymmetryConfig(n, alpha, m, regime=regime))
    return ConfigFamily(tuple(configs))
