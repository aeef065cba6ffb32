"""LT coding: robust-soliton degree draws, seeded sampling, XOR, BP decoding.

Everything a coded packet needs beyond its payload is reproducible from the
header: the PRNG is seeded by PacketID alone, the degree is drawn first and
the neighbors second, so encoder and decoder always agree.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .prng import packet_rng


@dataclass(frozen=True)
class DegreeDistribution:
    """Robust-soliton degree distribution over 1..window_packets."""

    window_packets: int
    c: float
    delta: float
    pmf: tuple[float, ...]

    def __post_init__(self):
        cdf = np.cumsum(self.pmf)
        cdf[-1] = 1.0
        object.__setattr__(self, "_cdf", cdf.tolist())

    @property
    def cdf(self) -> list[float]:
        return self._cdf

    def mean_degree(self) -> float:
        return sum((d + 1) * p for d, p in enumerate(self.pmf))


@lru_cache(maxsize=4096)
def robust_soliton(window_packets: int, c: float = 0.4, delta: float = 0.02) -> DegreeDistribution:
    """Ideal soliton plus the spike term, normalized.

    The spike sits at ceil(k/R) where R = c * ln(k/delta) * sqrt(k).
    """
    k = window_packets
    if k < 1:
        raise ValueError("window must hold at least one packet")
    if c <= 0 or not 0 < delta < 1:
        raise ValueError(f"invalid robust-soliton parameters c={c}, delta={delta}")
    rho = np.zeros(k + 1)
    rho[1] = 1.0 / k
    for d in range(2, k + 1):
        rho[d] = 1.0 / (d * (d - 1))
    tau = np.zeros(k + 1)
    ripple = c * math.log(k / delta) * math.sqrt(k)
    spike = min(k, math.ceil(k / ripple))
    for d in range(1, spike):
        tau[d] = ripple / (d * k)
    if ripple > delta:
        tau[spike] = ripple * math.log(ripple / delta) / k
    mu = rho[1:] + tau[1:]
    mu /= mu.sum()
    return DegreeDistribution(window_packets=k, c=c, delta=delta, pmf=tuple(mu))


@dataclass(frozen=True)
class CodedPacketMeta:
    """Reconstructible description of one coded packet's composition."""

    packet_id: int
    degree: int
    neighbors: tuple[int, ...]   # distinct native packet numbers, sorted
    start_packet: int
    window_packets: int
    slope_factor: float


def draw(packet_id: int, start_packet: int, window_cdf, dist: DegreeDistribution,
         slope_factor: float = 0.0) -> CodedPacketMeta:
    """Draw the degree, then the distinct neighbors, from the packet-id seed.

    `window_cdf` is the cumulative per-packet sampling distribution over the
    window (list of floats ending in 1.0). The degree is clamped to the
    window size. Identical inputs give identical output on both ends.
    """
    rng = packet_rng(packet_id)
    deg_cdf = dist.cdf
    wsize = len(window_cdf)
    d = bisect_right(deg_cdf, rng.next_float()) + 1
    if d > wsize:
        d = wsize
    chosen = set()
    while len(chosen) < d:
        j = bisect_right(window_cdf, rng.next_float())
        if j >= wsize:  # guard against fp roundoff at the top end
            j = wsize - 1
        chosen.add(start_packet + j)
    return CodedPacketMeta(packet_id=packet_id, degree=d,
                           neighbors=tuple(sorted(chosen)),
                           start_packet=start_packet, window_packets=wsize,
                           slope_factor=slope_factor)


def uniform_cdf(window_packets: int) -> list[float]:
    cdf = (np.arange(1, window_packets + 1) / window_packets)
    cdf[-1] = 1.0
    return cdf.tolist()


def xor_payload(neighbors, buffer: np.ndarray) -> np.ndarray:
    """XOR of the native packets (1-based numbers) in a (k, P) uint8 buffer."""
    idx = np.asarray(neighbors, dtype=np.intp) - 1
    if np.any(idx < 0) or np.any(idx >= buffer.shape[0]):
        raise ValueError("neighbor outside the native packet buffer")
    return np.bitwise_xor.reduce(buffer[idx], axis=0)


class DecoderState:
    """Belief-propagation (peeling) decoder over one session.

    Packets listed in `pseudo_decoded` (the warm-up/cool-down padding) start
    out decoded with all-zero content; they help the ripple but are reported
    separately from real decodes.
    """

    def __init__(self, total_packets: int, pseudo_decoded=(), payload_bytes: int | None = None):
        self.total_packets = total_packets
        self.payload_bytes = payload_bytes
        self.pseudo = frozenset(pseudo_decoded)
        self._decoded = bytearray(total_packets + 1)
        self._payloads: dict[int, np.ndarray | None] = {}
        self._pending: dict[int, dict] = {}
        self._waiting: dict[int, list[int]] = {}
        self._seen: set[int] = set()
        for p in self.pseudo:
            if not 1 <= p <= total_packets:
                raise ValueError(f"pseudo-decoded packet {p} outside 1..{total_packets}")
            self._decoded[p] = 1

    def is_decoded(self, packet: int) -> bool:
        return bool(self._decoded[packet])

    def decoded_payload(self, packet: int) -> np.ndarray | None:
        """Recovered bytes; zeros for pseudo-decoded packets."""
        if not self._decoded[packet]:
            raise KeyError(f"packet {packet} not decoded")
        got = self._payloads.get(packet)
        if got is None and self.payload_bytes is not None:
            return np.zeros(self.payload_bytes, dtype=np.uint8)
        return got

    def decoded_packets(self) -> list[int]:
        """All decoded packet numbers excluding the pseudo-decoded padding."""
        return [p for p in range(1, self.total_packets + 1)
                if self._decoded[p] and p not in self.pseudo]

    def ingest(self, meta: CodedPacketMeta, payload: np.ndarray | None = None) -> list[int]:
        """Absorb one coded packet; returns every native packet it released.

        Duplicate PacketIDs and packets carrying no new information are
        ignored. Payloads may be omitted in structure-only simulations.
        """
        if meta.packet_id in self._seen:
            return []
        self._seen.add(meta.packet_id)

        residual = None if payload is None else np.array(payload, dtype=np.uint8)
        unknown = set()
        for n in meta.neighbors:
            if self._decoded[n]:
                if residual is not None:
                    known = self._payloads.get(n)
                    if known is not None:
                        np.bitwise_xor(residual, known, out=residual)
            else:
                unknown.add(n)
        if not unknown:
            return []
        if len(unknown) == 1:
            return self._cascade(unknown.pop(), residual)
        entry = {"neighbors": unknown, "payload": residual}
        self._pending[meta.packet_id] = entry
        for n in unknown:
            self._waiting.setdefault(n, []).append(meta.packet_id)
        return []

    def _cascade(self, packet: int, payload: np.ndarray | None) -> list[int]:
        released = []
        queue = [(packet, payload)]
        while queue:
            n, pl = queue.pop()
            if self._decoded[n]:
                continue
            self._decoded[n] = 1
            if pl is not None:
                self._payloads[n] = pl
            released.append(n)
            for pid in self._waiting.pop(n, []):
                entry = self._pending.get(pid)
                if entry is None or n not in entry["neighbors"]:
                    continue
                entry["neighbors"].discard(n)
                if entry["payload"] is not None and pl is not None:
                    np.bitwise_xor(entry["payload"], pl, out=entry["payload"])
                if len(entry["neighbors"]) == 1:
                    del self._pending[pid]
                    queue.append((entry["neighbors"].pop(), entry["payload"]))
        released.sort()
        return released
