"""Wire protocol v1: framed messages over a reliable byte stream.

Every message starts with a one-byte tag; integers are big-endian.
"""

from __future__ import annotations

import select
import socket
import struct
from dataclasses import dataclass

from .errors import ConnectionLost, ProtocolViolation
from .store import ROOT_LAYOUT

MSG_ROOT = 0x01
MSG_FEAT = 0x02
ACK_HAVE = 0x03
ACK_NEED = 0x04
MSG_CHUNK = 0x05
MSG_DONE = 0x06
NAK = 0x07
ROOT_OK = 0x08
ROOT_MISMATCH = 0x09

TAG_NAMES = {MSG_ROOT: "ROOT", MSG_FEAT: "FEAT", ACK_HAVE: "ACK_HAVE", ACK_NEED: "ACK_NEED",
             MSG_CHUNK: "CHUNK", MSG_DONE: "DONE", NAK: "NAK", ROOT_OK: "ROOT_OK",
             ROOT_MISMATCH: "ROOT_MISMATCH"}

_IJ = struct.Struct(">HH")
_FEAT_HEAD = struct.Struct(">HH24sI")
_CHUNK_HEAD = struct.Struct(">HHI")
MAX_BODY = 1 << 30


@dataclass(frozen=True)
class Message:
    tag: int
    i: int = 0
    j: int = 0
    digest: bytes = b""
    payload: bytes = b""

    @property
    def name(self) -> str:
        return TAG_NAMES.get(self.tag, hex(self.tag))


def encode_feat(i: int, j: int, digest: bytes, feature: bytes) -> bytes:
    return _FEAT_HEAD.pack(i, j, digest, len(feature)) + feature


def encode_chunk(i: int, j: int, chunk: bytes) -> bytes:
    return _CHUNK_HEAD.pack(i, j, len(chunk)) + chunk


def encode_ij(i: int, j: int) -> bytes:
    return _IJ.pack(i, j)


class Channel:
    """Socket wrapper that frames messages and counts bytes in each direction.

    ``tamper`` is a test hook ``(tag, body) -> body`` applied to every
    outgoing message just before it hits the socket.
    """

    def __init__(self, sock: socket.socket, tamper=None, buffered: bool = False):
        self.sock = sock
        self.tamper = tamper
        self.buffered = buffered
        self.bytes_sent = 0
        self.bytes_received = 0
        self._rbuf = bytearray()
        self._wbuf = bytearray()

    # -- writing
    def send(self, tag: int, body: bytes = b"") -> int:
        if self.tamper is not None:
            body = self.tamper(tag, body)
        frame = bytes([tag]) + body
        self.bytes_sent += len(frame)
        if self.buffered:
            self._wbuf += frame
            if len(self._wbuf) >= 1 << 20:
                self.flush()
        else:
            self._sendall(frame)
        return len(frame)

    def flush(self) -> None:
        if self._wbuf:
            data = bytes(self._wbuf)
            self._wbuf.clear()
            self._sendall(data)

    def _sendall(self, data: bytes) -> None:
        try:
            self.sock.sendall(data)
        except OSError as exc:
            raise ConnectionLost(str(exc)) from exc

    # -- reading
    def _fill(self, n: int) -> bool:
        while len(self._rbuf) < n:
            try:
                got = self.sock.recv(max(65536, n - len(self._rbuf)))
            except OSError as exc:
                raise ConnectionLost(str(exc)) from exc
            if not got:
                return False
            self._rbuf += got
        return True

    def recv_exact(self, n: int) -> bytes:
        if not self._fill(n):
            raise ConnectionLost(f"stream ended while {n} bytes were expected")
        out = bytes(self._rbuf[:n])
        del self._rbuf[:n]
        self.bytes_received += n
        return out

    def pending(self) -> bool:
        """True if input is buffered or readable without blocking."""
        if self._rbuf:
            return True
        try:
            r, _, _ = select.select([self.sock], [], [], 0)
        except (OSError, ValueError):
            return True
        return bool(r)

    def recv(self) -> Message | None:
        """Read one message; None on a clean end of stream at a frame boundary."""
        if not self._fill(1):
            return None
        tag = self.recv_exact(1)[0]
        if tag == MSG_ROOT:
            return Message(tag, payload=self.recv_exact(ROOT_LAYOUT.size))
        if tag == MSG_FEAT:
            i, j, digest, flen = _FEAT_HEAD.unpack(self.recv_exact(_FEAT_HEAD.size))
            if flen > MAX_BODY:
                raise ProtocolViolation("feature record too large")
            return Message(tag, i, j, digest, self.recv_exact(flen))
        if tag == MSG_CHUNK:
            i, j, clen = _CHUNK_HEAD.unpack(self.recv_exact(_CHUNK_HEAD.size))
            if clen > MAX_BODY:
                raise ProtocolViolation("chunk too large")
            return Message(tag, i, j, payload=self.recv_exact(clen))
        if tag in (ACK_HAVE, ACK_NEED, NAK):
            i, j = _IJ.unpack(self.recv_exact(_IJ.size))
            return Message(tag, i, j)
        if tag in (MSG_DONE, ROOT_OK, ROOT_MISMATCH):
            return Message(tag)
        raise ProtocolViolation(f"unknown message tag {tag:#04x}")

    def close(self) -> None:
        try:
            self.flush()
        except ConnectionLost:
            pass
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()
