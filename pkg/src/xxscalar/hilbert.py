"""Excitation-restricted basis of an N-qubit chain and subsystem bookkeeping.

Sites are 0-based throughout the package. A basis state is an occupation
pattern (1 = spin excited). Bases are ordered by excitation count first and
then lexicographically by the positions of the excited sites, so for four
sites the two-excitation block reads 1100, 1010, 1001, 0110, 0101, 0011.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError, LayoutError, StateLookupError

MAX_EXCITATIONS = 2


@dataclass(frozen=True)
class BasisState:
    occupations: tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(b) for b in self.occupations)
        if any(b not in (0, 1) for b in occ):
            raise ArgumentError(f"occupations must be 0/1, got {self.occupations!r}")
        object.__setattr__(self, "occupations", occ)

    @classmethod
    def from_sites(cls, n_sites: int, excited: Iterable[int]) -> "BasisState":
        occ = [0] * n_sites
        for s in excited:
            if not 0 <= s < n_sites:
                raise ArgumentError(f"site {s} outside a {n_sites}-site register")
            occ[s] = 1
        return cls(tuple(occ))

    @classmethod
    def from_string(cls, bits: str) -> "BasisState":
        return cls(tuple(int(c) for c in bits))

    @classmethod
    def vacuum(cls, n_sites: int) -> "BasisState":
        return cls((0,) * n_sites)

    @property
    def n_sites(self) -> int:
        return len(self.occupations)

    @property
    def excitation_count(self) -> int:
        return sum(self.occupations)

    @property
    def excited_sites(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.occupations) if b)

    def __str__(self):
        return "".join(map(str, self.occupations))


@dataclass(frozen=True, eq=False)
class SectorBasis:
    n_sites: int
    max_excitations: int
    states: tuple[BasisState, ...]
    index_of: dict = field(repr=False)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, ordinal: int) -> BasisState:
        return self.states[ordinal]

    def __eq__(self, other):
        if not isinstance(other, SectorBasis):
            return NotImplemented
        return (self.n_sites, self.max_excitations, self.states) == (
            other.n_sites,
            other.max_excitations,
            other.states,
        )

    def __hash__(self):
        return hash((self.n_sites, self.max_excitations))

    def sector_slice(self, excitations: int) -> slice:
        """Ordinals of the block with the given excitation count."""
        if not 0 <= excitations <= self.max_excitations:
            raise ArgumentError(f"sector {excitations} not in this basis")
        start = sum(comb(self.n_sites, k) for k in range(excitations))
        return slice(start, start + comb(self.n_sites, excitations))

    def excitation_counts(self) -> np.ndarray:
        return np.array([s.excitation_count for s in self.states], dtype=int)

    def occupation_matrix(self) -> np.ndarray:
        return np.array([s.occupations for s in self.states], dtype=np.int8)


def enumerate_basis(n_sites: int, max_excitations: int) -> SectorBasis:
    if n_sites < 1:
        raise ArgumentError(f"n_sites must be >= 1, got {n_sites}")
    if not 0 <= max_excitations <= n_sites:
        raise ArgumentError(
            f"max_excitations must lie in [0, {n_sites}], got {max_excitations}"
        )
    states = []
    for k in range(max_excitations + 1):
        for sites in combinations(range(n_sites), k):
            states.append(BasisState.from_sites(n_sites, sites))
    states = tuple(states)
    index_of = {s: i for i, s in enumerate(states)}
    return SectorBasis(n_sites, max_excitations, states, index_of)


def state_index(basis: SectorBasis, state: BasisState) -> int:
    if state.n_sites != basis.n_sites:
        raise StateLookupError(
            f"state {state} has {state.n_sites} sites, basis has {basis.n_sites}"
        )
    try:
        return basis.index_of[state]
    except KeyError:
        raise StateLookupError(
            f"state {state} has {state.excitation_count} excitations; "
            f"basis holds at most {basis.max_excitations}"
        ) from None


@dataclass(frozen=True)
class SubsystemLayout:
    """Geometry of the two-channel line.

    Channel 1 is sites ``0..L1-1`` with sender S1 at its left end, channel 2
    is ``L1..N-1`` with S2 at its right end. The receiver is the pair of
    channel end-nodes ``(L1-1, L1)``; the extended receiver takes ``K1``
    sites from channel 1 and ``K2`` from channel 2 around the junction.
    """

    n_sites: int
    K: int
    channel1_length: int
    K1: int
    K2: int

    def __post_init__(self):
        L1, L2 = self.channel1_length, self.n_sites - self.channel1_length
        if self.K < 1:
            raise LayoutError(f"sender size K must be >= 1, got {self.K}")
        if L1 < self.K or L2 < self.K:
            raise LayoutError(
                f"channels of length {L1} and {L2} cannot hold {self.K}-qubit senders"
            )
        if not (1 <= self.K1 <= L1 and 1 <= self.K2 <= L2):
            raise LayoutError(
                f"extended receiver share ({self.K1}, {self.K2}) does not fit "
                f"channels of length ({L1}, {L2})"
            )

    @classmethod
    def symmetric(cls, K: int, channel_length: int, er_per_channel: int | None = None):
        k_er = K if er_per_channel is None else er_per_channel
        return cls(2 * channel_length, K, channel_length, k_er, k_er)

    @property
    def channel2_length(self) -> int:
        return self.n_sites - self.channel1_length

    @property
    def sender1(self) -> range:
        return range(0, self.K)

    @property
    def sender2(self) -> range:
        return range(self.n_sites - self.K, self.n_sites)

    @property
    def receiver(self) -> range:
        return range(self.channel1_length - 1, self.channel1_length + 1)

    @property
    def extended_receiver(self) -> range:
        return range(self.channel1_length - self.K1, self.channel1_length + self.K2)

    @property
    def line1(self) -> range:
        """Transmission line of channel 1: sites strictly between S1 and R."""
        return range(self.K, max(self.K, self.channel1_length - 1))

    @property
    def line2(self) -> range:
        return range(self.channel1_length + 1, max(self.channel1_length + 1, self.n_sites - self.K))

    @property
    def line1_outside_er(self) -> range:
        return range(self.K, max(self.K, self.extended_receiver.start))

    @property
    def line2_outside_er(self) -> range:
        stop = self.n_sites - self.K
        return range(min(self.extended_receiver.stop, stop), stop)

    @property
    def n_er(self) -> int:
        return self.K1 + self.K2

    @property
    def senders_only(self) -> bool:
        """True for the 2K-site line where the extended receiver is the whole system."""
        er = self.extended_receiver
        return er.start == 0 and er.stop == self.n_sites

    def subsystem(self, name: str) -> range:
        try:
            return {
                "S1": self.sender1,
                "TL1": self.line1,
                "TL1'": self.line1_outside_er,
                "ER": self.extended_receiver,
                "R": self.receiver,
                "TL2": self.line2,
                "TL2'": self.line2_outside_er,
                "S2": self.sender2,
            }[name]
        except KeyError:
            raise LayoutError(f"unknown subsystem {name!r}") from None

    def sender_sites(self, which: int) -> list[int]:
        """Global site carrying vector component i (0-based) of sender ``which``.

        Local sender site n (1-based) holds amplitude a_{K-n+1}, so component
        0 sits on the last local site of either sender.
        """
        rng = self.sender1 if which == 1 else self.sender2
        return [rng[self.K - 1 - i] for i in range(self.K)]


def embed_subsystem_state(
    layout: SubsystemLayout, parts: Sequence[tuple[str, BasisState]]
) -> BasisState:
    occ = [None] * layout.n_sites
    for name, state in parts:
        sites = layout.subsystem(name)
        if state.n_sites != len(sites):
            raise LayoutError(
                f"{name} spans {len(sites)} sites but got a {state.n_sites}-site state"
            )
        for site, bit in zip(sites, state.occupations):
            if occ[site] is not None:
                raise LayoutError(f"site {site} covered twice (again by {name})")
            occ[site] = bit
    gaps = [i for i, b in enumerate(occ) if b is None]
    if gaps:
        raise LayoutError(f"sites {gaps} not covered by any part")
    return BasisState(tuple(occ))


def factorize(
    basis: SectorBasis, sites: Sequence[int], sub_basis: SectorBasis
) -> tuple[np.ndarray, np.ndarray, int]:
    """Split every basis state into (rest pattern, pattern on ``sites``).

    Returns ``(rest_id, inner_ordinal, n_rest)``: ``rest_id[g]`` labels the
    occupation of the sites not in ``sites`` and ``inner_ordinal[g]`` is the
    ordinal of the restricted pattern in ``sub_basis``. A state vector can
    then be laid out as an ``(n_rest, len(sub_basis))`` table.
    """
    sites = list(sites)
    if sub_basis.n_sites != len(sites):
        raise ArgumentError("sub-basis size does not match the site list")
    inner_set = set(sites)
    rest = [i for i in range(basis.n_sites) if i not in inner_set]
    occ = basis.occupation_matrix()
    rest_id = np.empty(len(basis), dtype=np.intp)
    inner = np.empty(len(basis), dtype=np.intp)
    rest_keys: dict[bytes, int] = {}
    for g in range(len(basis)):
        key = occ[g, rest].tobytes()
        rest_id[g] = rest_keys.setdefault(key, len(rest_keys))
        inner[g] = state_index(sub_basis, BasisState(tuple(occ[g, sites])))
    return rest_id, inner, len(rest_keys)
