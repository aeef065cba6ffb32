"""The 15-byte application-layer packet header.

Big-endian layout, 15 bytes total (see PROTOCOL.md for the normative spec):

    StartP   uint32   first packet number of the window
    WSize    uint16   window length in packets
    SlopeF   float32  slope factor of the window's sampling distribution
    PacketID uint24   coded packet counter, also the sampling seed
    P        uint16   payload length in bytes

A datagram is the header followed by exactly P payload bytes.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

from .errors import ProtocolError

HEADER_LEN = 15
_HEAD = struct.Struct(">IHf")
_TAIL = struct.Struct(">H")
MAX_PACKET_ID = (1 << 24) - 1


def _to_f32(x: float) -> float:
    return struct.unpack(">f", struct.pack(">f", x))[0]


@dataclass(frozen=True)
class DafHeader:
    start_packet: int      # StartP
    window_packets: int    # WSize
    slope_factor: float    # SlopeF (stored at exactly float32 precision)
    packet_id: int         # PacketID
    payload_bytes: int     # P

    def __post_init__(self):
        if not 1 <= self.start_packet <= 0xFFFFFFFF:
            raise ProtocolError(f"StartP {self.start_packet} outside 1..2^32-1")
        if not 1 <= self.window_packets <= 0xFFFF:
            raise ProtocolError(f"WSize {self.window_packets} outside 1..65535")
        if not 0 <= self.packet_id <= MAX_PACKET_ID:
            raise ProtocolError(f"PacketID {self.packet_id} outside 0..2^24-1")
        if not 1 <= self.payload_bytes <= 0xFFFF:
            raise ProtocolError(f"P {self.payload_bytes} outside 1..65535")
        slope = _to_f32(float(self.slope_factor))
        if math.isnan(slope) or not -1.0 <= slope <= 1.0:
            raise ProtocolError(f"SlopeF {self.slope_factor} outside [-1, 1]")
        object.__setattr__(self, "slope_factor", slope)


def encode_header(header: DafHeader) -> bytes:
    buf = _HEAD.pack(header.start_packet, header.window_packets, header.slope_factor)
    buf += header.packet_id.to_bytes(3, "big")
    buf += _TAIL.pack(header.payload_bytes)
    return buf


def decode_header(data: bytes) -> DafHeader:
    if len(data) < HEADER_LEN:
        raise ProtocolError(f"truncated header: {len(data)} bytes, need {HEADER_LEN}")
    start_packet, window_packets, slope = _HEAD.unpack_from(data, 0)
    packet_id = int.from_bytes(data[10:13], "big")
    (payload_bytes,) = _TAIL.unpack_from(data, 13)
    return DafHeader(start_packet=start_packet, window_packets=window_packets,
                     slope_factor=slope, packet_id=packet_id,
                     payload_bytes=payload_bytes)


def encode_packet(header: DafHeader, payload: bytes) -> bytes:
    if len(payload) != header.payload_bytes:
        raise ProtocolError(
            f"payload is {len(payload)} bytes but header says {header.payload_bytes}")
    return encode_header(header) + bytes(payload)


def decode_packet(datagram: bytes) -> tuple[DafHeader, bytes]:
    header = decode_header(datagram)
    payload = datagram[HEADER_LEN:]
    if len(payload) != header.payload_bytes:
        raise ProtocolError(
            f"framing error: {len(payload)} payload bytes, header says {header.payload_bytes}")
    return header, payload


#: Committed reference vector; must never change across releases.
GOLDEN_HEADER = DafHeader(start_packet=1, window_packets=1, slope_factor=0.0,
                          packet_id=1, payload_bytes=1024)
GOLDEN_BYTES = bytes.fromhex("000000010001000000000000010400")
