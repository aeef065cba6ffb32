"""Full coding sessions, IDR/FDR metrics, and parameter sweeps.

A session walks the window schedule at a constant data rate (coded packet n
leaves at n * P / R seconds), pushes every packet through the erasure
channel, and feeds survivors to the BP decoder after an honest trip through
the wire header. A native packet decoded by the send time of the last coded
packet of the last window covering its frame counts as in-time; decoded ever,
toward the file ratio. Warm-up/cool-down padding is excluded from both.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .channel import ChannelModel, transmit_many
from .errors import ConfigError
from .ltcode import CodedPacketMeta, DecoderState, draw, robust_soliton, uniform_cdf, xor_payload
from .protocol import DafHeader, decode_packet, encode_packet
from .sampling import SlopePlan, optimize_slopes, slope_pdf
from .trace import FrameIndex, VideoTrace, packetize
from .windowing import (CodingParams, Mode, WindowSchedule, build_schedule,
                        derive_params, wcp_packets)


@dataclass(frozen=True)
class Metrics:
    idr: float
    fdr: float

    def __post_init__(self):
        if not 0.0 <= self.idr <= self.fdr <= 1.0:
            raise ValueError(f"need 0 <= IDR <= FDR <= 1, got idr={self.idr}, fdr={self.fdr}")


class SessionCodec:
    """Window sampling machinery shared verbatim by encoder and decoder.

    Distributions are derived only from header fields plus the trace and
    coding parameters both ends hold, so reconstruction is exact.
    """

    def __init__(self, trace: VideoTrace, params: CodingParams):
        self.trace = trace
        self.params = params
        self.index = FrameIndex(trace)
        self._cdfs: dict[tuple[int, int, float], list[float]] = {}

    def window_cdf(self, start_packet: int, window_packets: int, slope: float) -> list[float]:
        key = (start_packet, window_packets, slope)
        got = self._cdfs.get(key)
        if got is None:
            got = self._build_cdf(start_packet, window_packets, slope)
            self._cdfs[key] = got
        return got

    def _build_cdf(self, start_packet: int, window_packets: int, slope: float) -> list[float]:
        if slope == 0.0:
            return uniform_cdf(window_packets)
        start_frame = self.index.frame_of(start_packet)
        step = self.params.step_frames
        counts = []
        t = start_frame
        remaining = window_packets
        while remaining > 0:
            group = self.index.packets_in_frames(t, min(step, self.trace.num_frames - t + 1))
            if group > remaining:
                raise ValueError("window does not end on a step boundary")
            counts.append(group)
            remaining -= group
            t += step
        pdf = slope_pdf(counts, slope)
        cdf = np.cumsum(pdf)
        cdf[-1] = 1.0
        return cdf.tolist()

    def meta_from_header(self, header: DafHeader) -> CodedPacketMeta:
        """Decoder-side reconstruction of a packet's composition."""
        cdf = self.window_cdf(header.start_packet, header.window_packets,
                              header.slope_factor)
        dist = robust_soliton(header.window_packets)
        return draw(header.packet_id, header.start_packet, cdf, dist,
                    header.slope_factor)


def iter_coded_packets(trace: VideoTrace, params: CodingParams,
                       schedule: WindowSchedule, buffer: np.ndarray | None = None,
                       codec: SessionCodec | None = None):
    """Yield (header, meta, payload) for every coded packet of a session."""
    codec = codec or SessionCodec(trace, params)
    P = trace.payload_bytes
    pid = 0
    for entry in schedule.entries:
        if entry.budget == 0:
            continue
        cdf = codec.window_cdf(entry.start_packet, entry.window_packets, entry.slope)
        dist = robust_soliton(entry.window_packets)
        for _ in range(entry.budget):
            pid += 1
            meta = draw(pid, entry.start_packet, cdf, dist, entry.slope)
            header = DafHeader(start_packet=entry.start_packet,
                               window_packets=entry.window_packets,
                               slope_factor=entry.slope, packet_id=pid,
                               payload_bytes=P)
            payload = None if buffer is None else xor_payload(meta.neighbors, buffer)
            yield header, meta, payload


@lru_cache(maxsize=32)
def cached_slope_plan(trace: VideoTrace, window: int, step: int) -> SlopePlan:
    return optimize_slopes(trace, window, step)


def session_slopes(trace: VideoTrace, params: CodingParams) -> np.ndarray | None:
    """Slope factors per schedule entry; only the DAF mode optimizes them."""
    if params.mode is not Mode.DAF:
        return None
    plan = cached_slope_plan(trace, params.window_frames, params.step_frames)
    return plan.slopes


@dataclass
class SessionResult:
    seed: int
    config: dict
    decode_time: np.ndarray     # seconds per native packet (index 0 unused), inf if never
    frame_deadline: np.ndarray  # seconds per frame (index 0 unused)
    wcp: frozenset
    in_time: int
    late: int
    never: int

    def metrics(self) -> Metrics:
        eligible = self.in_time + self.late + self.never
        if eligible == 0:
            return Metrics(idr=0.0, fdr=0.0)
        return Metrics(idr=self.in_time / eligible,
                       fdr=(self.in_time + self.late) / eligible)

    def canonical_bytes(self) -> bytes:
        head = json.dumps(
            {"seed": self.seed, "config": self.config, "in_time": self.in_time,
             "late": self.late, "never": self.never, "wcp": sorted(self.wcp)},
            sort_keys=True).encode()
        return head + self.decode_time.tobytes() + self.frame_deadline.tobytes()


def run_session(trace: VideoTrace, params: CodingParams, channel: ChannelModel,
                seed: int, payloads=None, slopes=None) -> SessionResult:
    """Encode, transmit and decode one full session.

    `payloads` may carry real frame bytes; without them the session is
    structure-only (all-zero packets), which decodes identically. `slopes`
    overrides the per-entry slope factors (defaults: optimized for DAF,
    zero elsewhere).
    """
    if trace.payload_bytes > 0xFFFF:
        raise ConfigError("payload size does not fit the wire header")
    if slopes is None:
        slopes = session_slopes(trace, params)
    schedule = build_schedule(params, trace, slopes=slopes)
    index = FrameIndex(trace)
    k = trace.total_packets
    T = trace.num_frames
    N = params.total_coded
    interval = params.send_interval_s(trace)

    wcp = wcp_packets(params, trace)
    buffer = None
    if payloads is not None:
        buffer = packetize(trace, payloads)
        for p in wcp:  # padding periods carry no data
            buffer[p - 1] = 0

    eff_channel = replace(channel, seed=channel.seed + seed)
    send_times = np.arange(1, N + 1, dtype=np.float64) * interval
    delivered = transmit_many(eff_channel, np.arange(1, N + 1), send_times)

    codec = SessionCodec(trace, params)
    decoder = DecoderState(k, pseudo_decoded=wcp,
                           payload_bytes=trace.payload_bytes if buffer is not None else None)
    decode_time = np.full(k + 1, np.inf)

    for header, meta, payload in iter_coded_packets(trace, params, schedule,
                                                    buffer=buffer, codec=codec):
        pid = header.packet_id
        if not delivered[pid - 1]:
            continue
        # honest trip through the wire format
        datagram = encode_packet(header, payload.tobytes() if payload is not None
                                 else bytes(trace.payload_bytes))
        rx_header, rx_payload = decode_packet(datagram)
        rx_meta = codec.meta_from_header(rx_header)
        arrival = send_times[pid - 1]
        released = decoder.ingest(rx_meta,
                                  np.frombuffer(rx_payload, dtype=np.uint8)
                                  if buffer is not None else None)
        for n in released:
            decode_time[n] = arrival

    last_entry = schedule.last_covering_entry(T)
    frame_deadline = np.zeros(T + 1)
    for t in range(1, T + 1):
        entry = schedule.entries[last_entry[t] - 1]
        frame_deadline[t] = entry.cum_sent * interval

    in_time = late = never = 0
    frame_of = [0] * (k + 1)
    for t in range(1, T + 1):
        first = index.first_packet(t)
        for p in range(first, first + trace.packets_per_frame[t - 1]):
            frame_of[p] = t
    for p in range(1, k + 1):
        if p in wcp:
            continue
        dt = decode_time[p]
        if math.isinf(dt):
            never += 1
        elif dt <= frame_deadline[frame_of[p]]:
            in_time += 1
        else:
            late += 1

    config = {
        "mode": params.mode.value,
        "window_frames": params.window_frames,
        "step_frames": params.step_frames,
        "delay_frames": params.delay_frames,
        "data_rate": params.data_rate,
        "code_rate": params.code_rate,
        "total_coded": params.total_coded,
        "native_packets": k,
        "frames": T,
        "payload_bytes": trace.payload_bytes,
        "channel": channel.describe(),
    }
    return SessionResult(seed=seed, config=config, decode_time=decode_time,
                         frame_deadline=frame_deadline, wcp=wcp,
                         in_time=in_time, late=late, never=never)


@dataclass(frozen=True)
class SweepRow:
    mode: str
    code_rate: float
    delay_s: float
    channel: str
    idr: float
    fdr: float


def delay_to_frames(delay_s: float, frame_rate: float) -> int:
    return int(math.floor(delay_s * frame_rate + 1e-9))


def sweep(trace: VideoTrace, modes, code_rates, delays_s, channels,
          repetitions: int = 20, base_seed: int = 0,
          step_frames: int = 1) -> list[SweepRow]:
    """Median IDR/FDR per (mode, code rate, delay, channel) grid cell."""
    cells = [(m, c, d, ch) for m in modes for c in code_rates
             for d in delays_s for ch in channels]
    if not cells:
        raise ConfigError("empty sweep grid")
    rows = []
    for mode, code_rate, delay_s, ch in cells:
        params = derive_params(trace, mode, delay_to_frames(delay_s, trace.frame_rate),
                               step_frames=step_frames, code_rate=code_rate)
        idrs, fdrs = [], []
        for rep in range(repetitions):
            result = run_session(trace, params, ch, base_seed + rep)
            m = result.metrics()
            idrs.append(m.idr)
            fdrs.append(m.fdr)
        rows.append(SweepRow(mode=Mode.parse(mode).value, code_rate=code_rate,
                             delay_s=delay_s, channel=ch.describe(),
                             idr=statistics.median(idrs),
                             fdr=statistics.median(fdrs)))
    return rows


CSV_HEADER = "mode,code_rate,delay_s,channel,idr,fdr"

#: Below this decoding ratio a result is reported as N/A (no visible video).
NA_THRESHOLD = 0.10


def rows_to_csv(rows) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(f"{r.mode},{r.code_rate:g},{r.delay_s:g},{r.channel},"
                     f"{r.idr:.6f},{r.fdr:.6f}")
    return "\n".join(lines) + "\n"


def summarize(rows) -> str:
    """Human-readable matrix of the sweep results."""
    if not rows:
        raise ConfigError("nothing to report")
    out = [f"{'code rate':>9}  {'delay(s)':>8}  {'channel':<34}  {'scheme':<7}  "
           f"{'IDR':>7}  {'FDR':>7}"]

    def fmt(x):
        return "N/A" if x < NA_THRESHOLD else f"{100 * x:.2f}%"

    for r in rows:
        out.append(f"{r.code_rate:>9g}  {r.delay_s:>8g}  {r.channel:<34}  "
                   f"{r.mode:<7}  {fmt(r.idr):>7}  {fmt(r.fdr):>7}")
    return "\n".join(out) + "\n"


def report(rows, csv_path=None) -> tuple[str, str]:
    """Plot-ready CSV plus the text summary; optionally writes the CSV."""
    csv_text = rows_to_csv(rows)
    summary = summarize(rows)
    if csv_path is not None:
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    return csv_text, summary
