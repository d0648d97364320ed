"""Distributed optical token-ring arbitration.

Each crossbar channel owns one token wavelength and the broadcast bus one
more.  A token circulates the arbitration waveguide at one cluster position
per phase (eight positions per cycle, the same speed as data).  A cluster
that wants a channel diverts the token the next time it passes and owns the
channel until it re-injects the token at the tail of its message.

Grants are computed analytically from the token's last injection point, so
an idle token costs no events.
"""

from __future__ import annotations

from typing import Callable, Dict, Optional

from .kernel import SimulationError, Simulator

IN_FLIGHT = "in-flight"
HELD = "held"
PENDING = "pending-reinjection"


class Token:
    __slots__ = ("channel", "pos", "t0", "holder", "held_since", "mask",
                 "callbacks", "grant_time", "grant_to", "version", "grants")

    def __init__(self, channel: int, pos: int):
        self.channel = channel
        # (pos, t0): the token is at ring position ``pos`` at time ``t0``
        self.pos = pos
        self.t0 = 0
        self.holder: Optional[int] = None
        self.held_since = 0
        self.mask = 0  # bit c set when cluster c is waiting
        self.callbacks: Dict[int, Callable[[int], None]] = {}
        self.grant_time: Optional[int] = None
        self.grant_to = -1
        self.version = 0
        self.grants = 0


def _first_after(mask: int, pos: int, n: int) -> int:
    """First set bit met when walking the ring from ``pos + 1``; ``pos`` last."""
    s = (pos + 1) % n
    rot = ((mask >> s) | (mask << (n - s))) & ((1 << n) - 1)
    return (s + (rot & -rot).bit_length() - 1) % n


class TokenRing:
    """Token arbiter for ``positions`` clusters and ``channels`` tokens.

    Token ``c < positions`` starts at its home position ``c``; extra tokens
    (the broadcast token) start at position 0.  Every token starts as if it
    had just been injected there, so it is seen by the next position first.
    """

    def __init__(self, sim: Simulator, positions: int = 64,
                 channels: Optional[int] = None):
        self.sim = sim
        self.n = positions
        nchan = positions + 1 if channels is None else channels
        self.tokens = [Token(c, c if c < positions else 0) for c in range(nchan)]
        self.on_grant_hook: Optional[Callable[[int, int, int], None]] = None
        self.on_release_hook: Optional[Callable[[int, int, int], None]] = None

    def pass_time(self, channel: int, cluster: int, after: int) -> int:
        """Earliest time > ``after`` the token reaches ``cluster`` (token not held).

        A re-injected token is invisible at its injector until it has gone
        once around, which is what the ``or n`` below encodes.
        """
        tok = self.tokens[channel]
        n = self.n
        first = tok.t0 + ((cluster - tok.pos) % n or n)
        if first > after:
            return first
        return first + ((after - first) // n + 1) * n

    def request(self, cluster: int, channel: int, on_grant: Callable[[int], None]) -> None:
        """Register interest; ``on_grant(channel)`` fires when the token is diverted."""
        tok = self.tokens[channel]
        bit = 1 << cluster
        if tok.holder == cluster:
            raise SimulationError(f"cluster {cluster} requested token {channel} it already holds")
        if tok.mask & bit:
            raise SimulationError(f"cluster {cluster} already waiting for token {channel}")
        tok.mask |= bit
        tok.callbacks[cluster] = on_grant
        if tok.holder is None:
            p = self.pass_time(channel, cluster, self.sim.now)
            if tok.grant_time is None or p < tok.grant_time:
                self._arm(tok, cluster, p)

    def _arm(self, tok: Token, cluster: int, when: int) -> None:
        tok.grant_time = when
        tok.grant_to = cluster
        tok.version += 1
        self.sim.schedule(when, self._grant, tok, tok.version)

    def _grant(self, tok: Token, version: int) -> None:
        if version != tok.version:
            return
        cluster = tok.grant_to
        tok.mask &= ~(1 << cluster)
        tok.holder = cluster
        tok.held_since = self.sim.now
        tok.grant_time = None
        tok.grants += 1
        cb = tok.callbacks.pop(cluster)
        if self.on_grant_hook is not None:
            self.on_grant_hook(tok.channel, cluster, self.sim.now)
        cb(tok.channel)

    def release(self, cluster: int, channel: int, tail_time: int) -> None:
        """Re-inject the token at ``cluster``'s position at ``tail_time``."""
        tok = self.tokens[channel]
        if tok.holder != cluster:
            raise SimulationError(f"cluster {cluster} released token {channel} held by {tok.holder}")
        if tail_time < self.sim.now:
            raise SimulationError("token released in the past")
        tok.holder = None
        tok.pos = cluster
        tok.t0 = tail_time
        if self.on_release_hook is not None:
            self.on_release_hook(channel, cluster, tail_time)
        if tok.mask:
            nxt = _first_after(tok.mask, cluster, self.n)
            self._arm(tok, nxt, self.pass_time(channel, nxt, self.sim.now))

    def state(self, channel: int, t: Optional[int] = None) -> str:
        tok = self.tokens[channel]
        t = self.sim.now if t is None else t
        if tok.holder is not None:
            return HELD
        return PENDING if tok.t0 > t else IN_FLIGHT

    def position(self, channel: int, t: Optional[int] = None) -> Optional[int]:
        """Ring position of an in-flight token, None while held or pending."""
        if self.state(channel, t) != IN_FLIGHT:
            return None
        tok = self.tokens[channel]
        t = self.sim.now if t is None else t
        return (tok.pos + t - tok.t0) % self.n

    def holder(self, channel: int) -> Optional[int]:
        return self.tokens[channel].holder

    def census(self, t: Optional[int] = None) -> Dict[str, int]:
        counts = {IN_FLIGHT: 0, HELD: 0, PENDING: 0}
        for c in range(len(self.tokens)):
            counts[self.state(c, t)] += 1
        return counts

    def waiting(self, channel: int) -> int:
        return bin(self.tokens[channel].mask).count("1")
