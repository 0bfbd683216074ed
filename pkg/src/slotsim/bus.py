"""Broadcast message bus with stochastic per-send latency.

Every send draws exactly one latency sample (determinism depends on a fixed
draw count per send), and the message becomes visible to every registered
receiver at the same deliver_at. Addressing and filtering happen at the
receiver; the bus itself has no notion of who needs what.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DelayModel:
    """Normal latency model; samples are raw, the bus clamps on send.

    Clamping (rather than resampling) keeps one RNG draw per send. The
    lower clamp at zero preserves causality.
    """

    mean: float = 0.040   # s
    std: float = 0.0259   # s
    clamp_lo: float = 0.0
    clamp_hi: float = None

    def __post_init__(self):
        if self.std < 0:
            raise ValueError("std must be non-negative")
        if self.clamp_hi is None:
            object.__setattr__(self, "clamp_hi", self.mean + 4.0 * self.std)
        if self.clamp_hi < self.clamp_lo:
            raise ValueError("clamp_hi below clamp_lo")

    def sample(self, rng) -> float:
        """One raw (unclamped) latency draw."""
        return rng.normal(self.mean, self.std)

    def clamp(self, latency: float) -> float:
        return min(max(latency, self.clamp_lo), self.clamp_hi)


@dataclass(frozen=True)
class DelayedMessage:
    sender_id: int
    payload: object  # a VehicleState sample
    sent_at: float
    deliver_at: float


class MessageBus:
    """Pending heap plus one FIFO per registered receiver."""

    def __init__(self, model: DelayModel = DelayModel()):
        self.model = model
        self._pending = []  # (deliver_at, sender_id, seq, msg)
        self._queues = {}
        self._seq = 0

    def register(self, receiver_id: str):
        self._queues.setdefault(receiver_id, [])

    def send(self, payload, sender_id: int, t_now: float, rng) -> DelayedMessage:
        latency = self.model.clamp(self.model.sample(rng))
        msg = DelayedMessage(sender_id=sender_id, payload=payload,
                             sent_at=t_now, deliver_at=t_now + latency)
        heapq.heappush(self._pending, (msg.deliver_at, msg.sender_id, self._seq, msg))
        self._seq += 1
        return msg

    def poll(self, receiver_id: str, t_now: float):
        """Messages due by t_now for this receiver, ordered (deliver_at, sender_id).

        Delivered messages are removed from the receiver's queue; other
        receivers keep their own copies.
        """
        if receiver_id not in self._queues:
            raise KeyError(f"unregistered receiver {receiver_id!r}")
        while self._pending and self._pending[0][0] <= t_now:
            _, _, _, msg = heapq.heappop(self._pending)
            for q in self._queues.values():
                q.append(msg)
        out = self._queues[receiver_id]
        self._queues[receiver_id] = []
        return out

    def pending_count(self) -> int:
        return len(self._pending)


class SampleStore:
    """Latest delivered state sample per sender, by send time."""

    def __init__(self):
        self._latest = {}

    def update(self, messages):
        for m in messages:
            cur = self._latest.get(m.sender_id)
            if cur is None or m.sent_at >= cur.sent_at:
                self._latest[m.sender_id] = m

    def latest_sample(self, sender_id: int, t_now: float):
        """(payload, age) for the freshest delivered sample, or None."""
        m = self._latest.get(sender_id)
        if m is None:
            return None
        return (m.payload, t_now - m.sent_at)

    def drop(self, sender_id: int):
        self._latest.pop(sender_id, None)
