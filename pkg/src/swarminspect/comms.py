"""Ideal broadcast radio: lossless, unlimited range, same-step delivery."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .inference import Decision


class Kind(enum.IntEnum):
    OBSERVATION = 0
    DECISION = 1


@dataclass(frozen=True)
class Message:
    sender: int
    color_bit: int
    kind: Kind
    t_emit: int


def compose_broadcast(d_f: int, last_color: int, positive_feedback: bool) -> tuple[int, Kind]:
    """Payload bit and kind: the decision under positive feedback once one exists,
    otherwise the latest observed colour."""
    if last_color not in (0, 1):
        raise ValueError(f"last_color must be 0 or 1, got {last_color!r}")
    if positive_feedback and d_f != Decision.UNDECIDED:
        return int(d_f), Kind.DECISION
    return int(last_color), Kind.OBSERVATION


class Bus:
    """Per-robot inboxes. A message reaches every robot except its sender."""

    def __init__(self, n_robots: int):
        if n_robots < 1:
            raise ValueError("need at least one robot")
        self.n_robots = n_robots
        self._inboxes: list[list[Message]] = [[] for _ in range(n_robots)]

    def deliver(self, msg: Message) -> None:
        if not 0 <= msg.sender < self.n_robots:
            raise ValueError(f"unknown sender {msg.sender}")
        for k, box in enumerate(self._inboxes):
            if k != msg.sender:
                box.append(msg)

    def inbox(self, robot: int) -> list[Message]:
        return list(self._inboxes[robot])

    def drain(self, robot: int) -> list[Message]:
        """Pop every pending message for ``robot``, ordered by emit step then sender id."""
        box = self._inboxes[robot]
        self._inboxes[robot] = []
        return sorted(box, key=lambda m: (m.t_emit, m.sender))
