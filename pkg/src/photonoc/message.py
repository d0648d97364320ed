"""Network transaction units."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .config import HEADER_BYTES, LINE_BYTES

READ_REQ = "mem-read-req"
WRITE_REQ = "mem-write-req"
READ_RESP = "mem-read-resp"
WRITE_ACK = "mem-write-ack"
BCAST = "bcast-payload"

DATA_KINDS = frozenset({WRITE_REQ, READ_RESP})
REQUEST_KINDS = frozenset({READ_REQ, WRITE_REQ})
KINDS = (READ_REQ, WRITE_REQ, READ_RESP, WRITE_ACK, BCAST)


@dataclass(slots=True, eq=False)
class Message:
    kind: str
    src: int
    dst: int
    address: int = 0
    created: int = 0
    injected: Optional[int] = None
    delivered: Optional[int] = None
    hops: int = 0
    payload: object = None

    @property
    def size_bytes(self) -> int:
        return HEADER_BYTES + LINE_BYTES if self.kind in DATA_KINDS else HEADER_BYTES

    @property
    def is_request(self) -> bool:
        return self.kind in REQUEST_KINDS

    def response(self, now: int) -> "Message":
        """Reply travelling back to the requester; keeps the original creation stamp."""
        kind = READ_RESP if self.kind == READ_REQ else WRITE_ACK
        return Message(kind, self.dst, self.src, self.address, self.created, payload=self.payload)
