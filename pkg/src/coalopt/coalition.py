"""Agents, coalitions and coalition structures.

A coalition structure is a set partition of the agents. Structures are
enumerated as restricted-growth strings (RGS): ``key[i]`` is the block index
of agent ``i``, with ``key[0] == 0`` and ``key[i] <= 1 + max(key[:i])``.
Iterating RGS in lexicographic order visits every partition exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

DEFAULT_MAX_AGENTS = 12


class CoalitionError(ValueError):
    """Invalid agent set, coalition or structure."""


class CapacityError(CoalitionError):
    """Enumeration request exceeds the configured agent cap."""


@dataclass(frozen=True)
class AgentSet:
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) < 1:
            raise CoalitionError("an agent set needs at least one agent")
        if len(set(self.labels)) != len(self.labels):
            raise CoalitionError(f"agent labels must be distinct: {list(self.labels)}")

    @classmethod
    def of_size(cls, count: int, prefix: str = "W") -> "AgentSet":
        if count < 1:
            raise CoalitionError(f"agent count must be >= 1, got {count}")
        return cls(tuple(f"{prefix}{i + 1}" for i in range(count)))

    @property
    def count(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise CoalitionError(f"unknown agent {label!r}") from None


@dataclass(frozen=True, order=True)
class Coalition:
    members: tuple[int, ...]

    def __post_init__(self):
        if not self.members:
            raise CoalitionError("a coalition cannot be empty")
        if any(b <= a for a, b in zip(self.members, self.members[1:])):
            raise CoalitionError(f"coalition members must be strictly increasing: {self.members}")
        if self.members[0] < 0:
            raise CoalitionError(f"negative agent index in {self.members}")

    def __contains__(self, agent: int) -> bool:
        return agent in self.members

    def __len__(self) -> int:
        return len(self.members)

    def label(self, agents: AgentSet) -> str:
        return "{" + ",".join(agents.labels[i] for i in self.members) + "}"


@dataclass(frozen=True)
class CoalitionStructure:
    """A partition of ``range(n_agents)`` into coalitions ordered by smallest member."""

    coalitions: tuple[Coalition, ...]
    canonical_key: tuple[int, ...] = field(compare=False)

    @classmethod
    def from_key(cls, key: Sequence[int]) -> "CoalitionStructure":
        key = tuple(int(k) for k in key)
        if not is_restricted_growth(key):
            raise CoalitionError(f"not a restricted-growth string: {key}")
        return cls._from_valid_key(key)

    @classmethod
    def _from_valid_key(cls, key: tuple[int, ...]) -> "CoalitionStructure":
        blocks: list[list[int]] = [[] for _ in range(max(key) + 1)]
        for agent, block in enumerate(key):
            blocks[block].append(agent)
        return cls(tuple(Coalition(tuple(b)) for b in blocks), key)

    @classmethod
    def from_coalitions(cls, coalitions: Iterable[Iterable[int]], n_agents: int) -> "CoalitionStructure":
        """Build a structure from member lists, validating that they partition the agents."""
        blocks = sorted(tuple(sorted(set(c))) for c in coalitions)
        seen: set[int] = set()
        for block in blocks:
            if not block:
                raise CoalitionError("a coalition cannot be empty")
            overlap = seen.intersection(block)
            if overlap:
                raise CoalitionError(f"agents {sorted(overlap)} appear in more than one coalition")
            seen.update(block)
        if seen != set(range(n_agents)):
            missing = sorted(set(range(n_agents)) - seen)
            extra = sorted(seen - set(range(n_agents)))
            raise CoalitionError(f"coalitions do not partition {n_agents} agents (missing {missing}, unknown {extra})")
        key = [0] * n_agents
        for b, block in enumerate(blocks):
            for agent in block:
                key[agent] = b
        return cls(tuple(Coalition(b) for b in blocks), tuple(key))

    @classmethod
    def parse(cls, text: str, agents: AgentSet) -> "CoalitionStructure":
        """Parse the brace notation, e.g. ``"{W1,W2}|{W3}"``."""
        coalitions = []
        for part in text.split("|"):
            part = part.strip()
            if not (part.startswith("{") and part.endswith("}")):
                raise CoalitionError(f"malformed coalition {part!r} in {text!r}")
            names = [s.strip() for s in part[1:-1].split(",") if s.strip()]
            coalitions.append([agents.index(n) for n in names])
        return cls.from_coalitions(coalitions, agents.count)

    @property
    def n_agents(self) -> int:
        return len(self.canonical_key)

    @property
    def m(self) -> int:
        return len(self.coalitions)

    def coalition_of(self, agent: int) -> int:
        if not 0 <= agent < self.n_agents:
            raise CoalitionError(f"agent index {agent} out of range for {self.n_agents} agents")
        return self.canonical_key[agent]

    def label(self, agents: AgentSet) -> str:
        return "|".join(c.label(agents) for c in self.coalitions)

    def __len__(self) -> int:
        return len(self.coalitions)

    def __iter__(self) -> Iterator[Coalition]:
        return iter(self.coalitions)


def is_restricted_growth(key: Sequence[int]) -> bool:
    if not key or key[0] != 0:
        return False
    top = 0
    for k in key[1:]:
        if k < 0 or k > top + 1:
            return False
        top = max(top, k)
    return True


def iter_restricted_growth(n: int) -> Iterator[tuple[int, ...]]:
    """Yield all restricted-growth strings of length ``n`` in lexicographic order."""
    if n < 1:
        return
    key = [0] * n
    # prefix_max[i] = max(key[:i + 1])
    prefix_max = [0] * n
    while True:
        yield tuple(key)
        # rightmost position that can still be incremented
        i = n - 1
        while i > 0 and key[i] > prefix_max[i - 1]:
            i -= 1
        if i == 0:
            return
        key[i] += 1
        prefix_max[i] = max(prefix_max[i - 1], key[i])
        for j in range(i + 1, n):
            key[j] = 0
            prefix_max[j] = prefix_max[i]


def bell_number(n: int) -> int:
    """Bell number via the Bell triangle."""
    if n < 0:
        raise ValueError("n must be non-negative")
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def enumerate_structures(
    agents: AgentSet | int,
    max_agents: int = DEFAULT_MAX_AGENTS,
    allow: Iterable[Coalition] | None = None,
    deny: Iterable[Coalition] | None = None,
) -> list[CoalitionStructure]:
    """All coalition structures over ``agents`` in lexicographic key order.

    ``allow`` restricts the result to structures whose coalitions are all in
    the given collection; ``deny`` drops structures containing any of the
    given coalitions.
    """
    n = agents if isinstance(agents, int) else agents.count
    if n < 1:
        raise CoalitionError(f"agent count must be >= 1, got {n}")
    if n > max_agents:
        raise CapacityError(
            f"{n} agents exceed the enumeration cap of {max_agents} "
            f"(Bell({n}) = {bell_number(n)} structures); raise the cap or filter coalitions"
        )
    allowed = None if allow is None else set(allow)
    denied = set(deny or ())
    out = []
    for key in iter_restricted_growth(n):
        cs = CoalitionStructure._from_valid_key(key)
        if allowed is not None and not all(c in allowed for c in cs.coalitions):
            continue
        if denied and any(c in denied for c in cs.coalitions):
            continue
        out.append(cs)
    return out


def count_coalitions(agents: AgentSet | int) -> int:
    n = agents if isinstance(agents, int) else agents.count
    if n < 1:
        raise CoalitionError(f"agent count must be >= 1, got {n}")
    return 2**n - 1


def is_grand_coalition(cs: CoalitionStructure) -> bool:
    return len(cs.coalitions) == 1


def grand_coalition(n_agents: int) -> CoalitionStructure:
    return CoalitionStructure._from_valid_key((0,) * n_agents)


def singletons(n_agents: int) -> CoalitionStructure:
    return CoalitionStructure._from_valid_key(tuple(range(n_agents)))
