import math
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dafstream.errors import ProtocolError
from dafstream.protocol import (GOLDEN_BYTES, GOLDEN_HEADER, HEADER_LEN,
                                DafHeader, decode_header, decode_packet,
                                encode_header, encode_packet)

valid_headers = st.builds(
    DafHeader,
    start_packet=st.integers(1, 0xFFFFFFFF),
    window_packets=st.integers(1, 0xFFFF),
    slope_factor=st.floats(-1.0, 1.0, allow_nan=False, width=32),
    packet_id=st.integers(0, 0xFFFFFF),
    payload_bytes=st.integers(1, 0xFFFF),
)


class TestGolden:
    def test_committed_vector(self):
        assert encode_header(GOLDEN_HEADER) == GOLDEN_BYTES
        assert len(GOLDEN_BYTES) == HEADER_LEN == 15
        assert decode_header(GOLDEN_BYTES) == GOLDEN_HEADER

    def test_layout_assembled_by_hand(self):
        h = DafHeader(start_packet=0x01020304, window_packets=0x0506,
                      slope_factor=0.5, packet_id=0x0A0B0C,
                      payload_bytes=0x0D0E)
        raw = encode_header(h)
        assert raw[0:4] == bytes.fromhex("01020304")
        assert raw[4:6] == bytes.fromhex("0506")
        assert raw[6:10] == struct.pack(">f", 0.5)
        assert raw[10:13] == bytes.fromhex("0a0b0c")
        assert raw[13:15] == bytes.fromhex("0d0e")

    def test_negative_one_slope_encoding(self):
        h = DafHeader(1, 1, -1.0, 1, 1024)
        assert encode_header(h)[6:10] == bytes.fromhex("bf800000")


class TestRoundTrip:
    @given(valid_headers)
    @settings(max_examples=300, deadline=None)
    def test_decode_encode_identity(self, header):
        assert decode_header(encode_header(header)) == header

    def test_slope_stored_at_wire_precision(self):
        h = DafHeader(1, 1, 0.1234567890123, 1, 64)
        assert h.slope_factor == struct.unpack(">f", struct.pack(">f", 0.1234567890123))[0]
        assert decode_header(encode_header(h)).slope_factor == h.slope_factor

    def test_packet_round_trip(self):
        h = DafHeader(7, 3, 0.25, 99, 8)
        datagram = encode_packet(h, b"\x01\x02\x03\x04\x05\x06\x07\x08")
        h2, payload = decode_packet(datagram)
        assert h2 == h
        assert payload == b"\x01\x02\x03\x04\x05\x06\x07\x08"


class TestErrors:
    def test_truncated_buffer(self):
        with pytest.raises(ProtocolError, match="truncated"):
            decode_header(GOLDEN_BYTES[:14])

    def test_framing_mismatch(self):
        h = DafHeader(1, 1, 0.0, 1, 1024)
        with pytest.raises(ProtocolError, match="framing"):
            decode_packet(encode_header(h) + b"x" * 512)
        with pytest.raises(ProtocolError, match="payload"):
            encode_packet(h, b"x" * 512)

    def test_field_range_validation(self):
        with pytest.raises(ProtocolError, match="PacketID"):
            DafHeader(1, 1, 0.0, 1 << 24, 1024)
        with pytest.raises(ProtocolError, match="WSize"):
            DafHeader(1, 0, 0.0, 1, 1024)
        with pytest.raises(ProtocolError, match="WSize"):
            DafHeader(1, 0x10000, 0.0, 1, 1024)
        with pytest.raises(ProtocolError, match="P "):
            DafHeader(1, 1, 0.0, 1, 0)
        with pytest.raises(ProtocolError, match="StartP"):
            DafHeader(0, 1, 0.0, 1, 1024)

    def test_slope_out_of_range_rejected_on_decode(self):
        raw = bytearray(GOLDEN_BYTES)
        raw[6:10] = struct.pack(">f", 1.5)
        with pytest.raises(ProtocolError, match="SlopeF"):
            decode_header(bytes(raw))
        raw[6:10] = struct.pack(">f", math.nan)
        with pytest.raises(ProtocolError, match="SlopeF"):
            decode_header(bytes(raw))
