"""Window sampling distributions and the accumulated-sampling-probability math.

Each sliding window samples packets from a per-window distribution. Summing a
packet's sampling probability over every window that covers its frame gives
the accumulated sampling probability (ASP); flat ASP means every packet gets
an equal share of coding effort. Two optimizers flatten the ASP over the
stable frame range: a per-frame scheme (one probability per frame per window,
solved as a simplex-constrained least squares) and a slope-only scheme (one
linear-tilt factor per window, solved as a box-constrained least squares).

All math here runs at step granularity 1; callers with a larger step
downsample the trace first (the optimizers do this internally).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverError
from .trace import VideoTrace, downsample

ROW_SUM_TOL = 1e-9


def slope_pdf(frame_packets, slope: float) -> np.ndarray:
    """Per-packet sampling probabilities for one window.

    `frame_packets` holds the packet count of each frame in the window, in
    order. The underlying density over [0, w] is linear with tilt `slope`
    in [-1, 1]; each packet gets the average density over its unit interval,
    so packets of one frame share one probability. slope=0 is uniform,
    slope=1 tilts all the way toward the window's end.
    """
    if not -1.0 <= slope <= 1.0:
        raise ValueError(f"slope factor {slope} outside [-1, 1]")
    s = np.asarray(frame_packets, dtype=np.float64)
    if s.ndim != 1 or len(s) == 0 or np.any(s < 1):
        raise ValueError("frame_packets must be a non-empty sequence of counts >= 1")
    w = s.sum()
    cum = np.cumsum(s)
    per_frame = (2.0 * slope / w**2) * (cum - s / 2.0) + (1.0 - slope) / w
    return np.repeat(per_frame, s.astype(int))


def slope_frame_probs(frame_packets, slope: float) -> np.ndarray:
    """Per-frame sampling probabilities (packet probability times frame size)."""
    s = np.asarray(frame_packets, dtype=np.float64)
    if not -1.0 <= slope <= 1.0:
        raise ValueError(f"slope factor {slope} outside [-1, 1]")
    w = s.sum()
    cum = np.cumsum(s)
    return ((2.0 * slope / w**2) * (cum - s / 2.0) + (1.0 - slope) / w) * s


@dataclass(frozen=True)
class AspProfile:
    """Accumulated sampling probability per frame, with its stable range."""

    values: tuple[float, ...]     # P(t) for frames 1..T
    window_frames: int
    packets_per_frame: tuple[int, ...]

    @property
    def num_frames(self) -> int:
        return len(self.values)

    @property
    def stable_range(self) -> tuple[int, int]:
        """Inclusive 1-based frame range covered by the full number of windows."""
        return self.window_frames, self.num_frames - self.window_frames + 1

    def stable_values(self) -> np.ndarray:
        lo, hi = self.stable_range
        if hi < lo:
            raise ValueError("no stable frames: trace shorter than twice the window")
        return np.asarray(self.values[lo - 1:hi], dtype=np.float64)

    def normalized(self) -> np.ndarray:
        """Full profile scaled so the stable range averages to 1."""
        return np.asarray(self.values) / self.stable_values().mean()

    def stable_variance(self, normalized: bool = True) -> float:
        v = self.stable_values()
        if normalized:
            v = v / v.mean()
        return float(np.mean((v - v.mean()) ** 2))

    def objective(self) -> float:
        """Sum of squared deviations from the stable-range mean (unnormalized)."""
        v = self.stable_values()
        return float(np.sum((v - v.mean()) ** 2))

    def total_mass(self) -> float:
        """Sum of s(t) * P(t); equals the window count for any valid plan."""
        s = np.asarray(self.packets_per_frame, dtype=np.float64)
        return float(np.dot(s, np.asarray(self.values)))


def _check_window(trace: VideoTrace, window: int):
    if not 1 <= window <= trace.num_frames:
        raise ValueError(f"window of {window} frames invalid for a {trace.num_frames}-frame trace")


def uniform_matrix(trace: VideoTrace, window: int) -> np.ndarray:
    """Sampling matrix assigning every frame of every window probability 1/W."""
    _check_window(trace, window)
    rows = trace.num_frames - window + 1
    return np.full((rows, window), 1.0 / window)


def slope_matrix(trace: VideoTrace, window: int, slopes) -> np.ndarray:
    """Sampling matrix induced by one slope factor per window."""
    _check_window(trace, window)
    s = np.asarray(trace.packets_per_frame, dtype=np.float64)
    rows = trace.num_frames - window + 1
    slopes = np.asarray(slopes, dtype=np.float64)
    if slopes.shape != (rows,):
        raise ValueError(f"expected {rows} slope factors, got {slopes.shape}")
    A = np.empty((rows, window))
    for t0 in range(rows):
        A[t0] = slope_frame_probs(s[t0:t0 + window], slopes[t0])
    return A


def asp_from_matrix(A, trace: VideoTrace, window: int) -> AspProfile:
    """Accumulate a sampling matrix into the per-frame ASP."""
    _check_window(trace, window)
    A = np.asarray(A, dtype=np.float64)
    T = trace.num_frames
    rows = T - window + 1
    if A.shape != (rows, window):
        raise ValueError(f"matrix shape {A.shape} does not match {rows} windows x {window} frames")
    if np.any(A < -ROW_SUM_TOL):
        raise ValueError("sampling probabilities must be nonnegative")
    if np.any(np.abs(A.sum(axis=1) - 1.0) > ROW_SUM_TOL):
        raise ValueError("every window's probabilities must sum to 1")
    s = np.asarray(trace.packets_per_frame, dtype=np.float64)
    P = np.zeros(T)
    for t0 in range(rows):
        P[t0:t0 + window] += A[t0]
    P /= s
    return AspProfile(values=tuple(P), window_frames=window,
                      packets_per_frame=trace.packets_per_frame)


@dataclass(frozen=True)
class SlopeCoefficients:
    """Affine decomposition of the ASP as a function of the slope vector.

    P(t) = d1[t] . slopes + d2[t], where d1[t, i] is nonzero only for the
    windows covering frame t. Depends on the trace and window only.
    """

    d1: np.ndarray   # shape (T, num_windows)
    d2: np.ndarray   # shape (T,)
    window_frames: int
    packets_per_frame: tuple[int, ...]

    @property
    def num_windows(self) -> int:
        return self.d1.shape[1]


def slope_coeffs(trace: VideoTrace, window: int) -> SlopeCoefficients:
    _check_window(trace, window)
    s = np.asarray(trace.packets_per_frame, dtype=np.float64)
    T = trace.num_frames
    rows = T - window + 1
    w = np.array([s[t0:t0 + window].sum() for t0 in range(rows)])
    cum = np.concatenate([[0.0], np.cumsum(s)])
    d1 = np.zeros((T, rows))
    d2 = np.zeros(T)
    for t in range(T):
        lo = max(0, t - window + 1)
        hi = min(t, rows - 1)
        for t0 in range(lo, hi + 1):
            pkt = cum[t + 1] - cum[t0]  # packets in frames t0..t of window t0
            d1[t, t0] = (2.0 * pkt - s[t]) / w[t0] ** 2 - 1.0 / w[t0]
            d2[t] += 1.0 / w[t0]
    return SlopeCoefficients(d1=d1, d2=d2, window_frames=window,
                             packets_per_frame=trace.packets_per_frame)


def asp_from_slopes(coeffs: SlopeCoefficients, slopes) -> AspProfile:
    slopes = np.asarray(slopes, dtype=np.float64)
    if slopes.shape != (coeffs.num_windows,):
        raise ValueError(f"expected {coeffs.num_windows} slopes, got {slopes.shape}")
    P = coeffs.d1 @ slopes + coeffs.d2
    return AspProfile(values=tuple(P), window_frames=coeffs.window_frames,
                      packets_per_frame=coeffs.packets_per_frame)


class PerFramePlan:
    """Result of the per-frame optimization on the (possibly downsampled) domain."""

    def __init__(self, matrix: np.ndarray, trace: VideoTrace, window: int,
                 step: int, iterations: int):
        self.matrix = matrix
        self.domain_trace = trace    # downsampled when step > 1
        self.window = window         # in domain frames
        self.step = step             # original step factor
        self.iterations = iterations

    def asp(self) -> AspProfile:
        return asp_from_matrix(self.matrix, self.domain_trace, self.window)

    @property
    def objective(self) -> float:
        return self.asp().objective()


class SlopePlan:
    """Result of the slope-only optimization; one factor per window entry."""

    def __init__(self, slopes: np.ndarray, trace: VideoTrace, window: int,
                 step: int, iterations: int):
        self.slopes = slopes
        self.domain_trace = trace
        self.window = window
        self.step = step
        self.iterations = iterations

    def asp(self) -> AspProfile:
        return asp_from_slopes(slope_coeffs(self.domain_trace, self.window), self.slopes)

    @property
    def objective(self) -> float:
        return self.asp().objective()


def _optimizer_domain(trace: VideoTrace, window: int, step: int):
    if step < 1:
        raise ValueError("step must be >= 1")
    if window % step != 0:
        raise ValueError(f"window {window} is not a multiple of step {step}")
    ds = downsample(trace, step)
    w = window // step
    if ds.num_frames < 2 * w:
        raise ValueError(
            f"need at least {2 * window} frames for window {window} (got {trace.num_frames})")
    return ds, w


def optimize_per_frame(trace: VideoTrace, window: int, step: int = 1,
                       tol: float = 1e-13, max_iter: int = 200_000) -> PerFramePlan:
    """Flatten the ASP by optimizing every frame's probability in every window.

    Accelerated projected gradient on the simplex-constrained least squares;
    deterministic (fixed iteration order, no randomness).
    """
    ds, w = _optimizer_domain(trace, window, step)
    s = np.asarray(ds.packets_per_frame, dtype=np.float64)
    T = ds.num_frames
    rows = T - w + 1
    n = rows * w

    # E maps flattened matrix entries to stable-range ASP values.
    stable = np.arange(w - 1, T - w + 1)
    m = len(stable)
    E = np.zeros((m, n))
    for t0 in range(rows):
        for i in range(w):
            t = t0 + i
            if w - 1 <= t <= T - w:
                E[t - (w - 1), t0 * w + i] = 1.0 / s[t]
    Ec = E - E.mean(axis=0, keepdims=True)

    sigma = np.linalg.svd(Ec, compute_uv=False)
    lip = 2.0 * sigma[0] ** 2
    if lip <= 0:
        # nothing to optimize; any feasible matrix is optimal
        x = np.vstack([slope_frame_probs(s[t0:t0 + w], 0.0) for t0 in range(rows)])
        return PerFramePlan(x, ds, w, step, 0)
    lr = 1.0 / lip

    def objective(xf):
        r = Ec @ xf
        return float(r @ r)

    def gradient(xf):
        return 2.0 * (Ec.T @ (Ec @ xf))

    # start from uniform packet sampling (slope 0) so the objective can only improve
    x = np.vstack([slope_frame_probs(s[t0:t0 + w], 0.0) for t0 in range(rows)]).ravel()
    y = x.copy()
    t_acc = 1.0
    j_prev = objective(x)
    scale = max(1.0, j_prev)
    stall = 0
    iterations = 0
    for iterations in range(1, max_iter + 1):
        x_new = _project_rows(y - lr * gradient(y), rows, w)
        j_new = objective(x_new)
        if j_new > j_prev:  # restart the momentum when it overshoots
            y = x.copy()
            t_acc = 1.0
            x_new = _project_rows(y - lr * gradient(y), rows, w)
            j_new = objective(x_new)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_acc * t_acc))
        y = x_new + ((t_acc - 1.0) / t_next) * (x_new - x)
        x = x_new
        t_acc = t_next
        if abs(j_prev - j_new) < tol * scale:
            stall += 1
            if stall >= 10:
                j_prev = j_new
                break
        else:
            stall = 0
        j_prev = j_new
    else:
        raise SolverError(
            f"per-frame optimizer did not converge in {max_iter} iterations "
            f"(last objective {j_prev:.3e})")
    return PerFramePlan(x.reshape(rows, w), ds, w, step, iterations)


def _project_rows(x: np.ndarray, rows: int, w: int) -> np.ndarray:
    """Euclidean projection of every row onto the probability simplex."""
    X = x.reshape(rows, w)
    U = -np.sort(-X, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    ind = np.arange(1, w + 1, dtype=np.float64)
    cond = U - css / ind > 0
    rho = w - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(rows), rho] / (rho + 1.0)
    return np.maximum(X - theta[:, None], 0.0).ravel()


def optimize_slopes(trace: VideoTrace, window: int, step: int = 1,
                    tol: float = 1e-10, max_iter: int = 100_000) -> SlopePlan:
    """Flatten the ASP with one slope factor per window.

    Exact cyclic coordinate minimization with clipping to [-1, 1], iterated
    until the objective change per sweep falls below `tol`.
    """
    ds, w = _optimizer_domain(trace, window, step)
    coeffs = slope_coeffs(ds, w)
    T = ds.num_frames
    stable = slice(w - 1, T - w + 1)
    D = coeffs.d1[stable]
    e = coeffs.d2[stable]
    Dc = D - D.mean(axis=0, keepdims=True)
    ec = e - e.mean()

    H = Dc.T @ Dc
    b = Dc.T @ ec
    c0 = float(ec @ ec)
    rows = coeffs.num_windows
    a = np.zeros(rows)
    r = np.zeros(rows)  # H @ a, maintained incrementally
    diag = np.diag(H).copy()

    def objective():
        return float(a @ r + 2.0 * (b @ a) + c0)

    j_prev = objective()
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        for j in range(rows):
            if diag[j] < 1e-30:
                continue
            target = a[j] - (r[j] + b[j]) / diag[j]
            new = min(1.0, max(-1.0, target))
            delta = new - a[j]
            if delta != 0.0:
                a[j] = new
                r += H[:, j] * delta
        j_new = objective()
        if abs(j_prev - j_new) < tol:
            j_prev = j_new
            break
        j_prev = j_new
    else:
        raise SolverError(
            f"slope optimizer did not converge in {max_iter} sweeps "
            f"(last objective {j_prev:.3e})")
    return SlopePlan(a, ds, w, step, sweeps)
