"""Signal ingestion, equilibrium shift and delay embedding.

A recorded decay experiment arrives as one or more uniformly sampled scalar
observable sequences sharing a sampling period T. Before fitting, the
equilibrium offset is removed (the fitted map must fix the origin) and each
signal is unrolled into 2*nu-dimensional delay vectors together with their
one-step successors.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError

#: relative tolerance on time-step uniformity when a time column is present
UNIFORM_RTOL = 1e-6

#: minimum trajectory length for the tail-mean equilibrium estimate
MIN_TAIL_SAMPLES = 100

#: fraction of trailing samples pooled into the equilibrium estimate
TAIL_FRACTION = 0.1


@dataclass(eq=False)
class SignalSet:
    """Uniformly sampled scalar observable trajectories with period T."""

    trajectories: list
    period_T: float
    labels: list = None

    def __post_init__(self):
        if not self.period_T > 0:
            raise DataError(f"sampling period must be positive, got {self.period_T}")
        self.trajectories = [np.asarray(t, dtype=float).ravel() for t in self.trajectories]
        for i, t in enumerate(self.trajectories):
            if not np.all(np.isfinite(t)):
                raise DataError(f"trajectory {i} contains non-finite samples")
        if self.labels is not None and len(self.labels) != len(self.trajectories):
            raise DataError("labels length does not match trajectory count")

    @property
    def lengths(self):
        return [len(t) for t in self.trajectories]


@dataclass(eq=False)
class DelayDataset:
    """One-step training pairs of delay-embedded states.

    Row k of `states` holds 2*nu consecutive observations; the matching row of
    `successors` is the same window shifted by one sample (the two overlap in
    2*nu - 1 entries). Trajectory p of length M_p contributes M_p - 2*nu pairs.
    """

    nu: int
    states: np.ndarray
    successors: np.ndarray
    pair_counts: np.ndarray
    source_lengths: np.ndarray
    period_T: float = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.successors = np.asarray(self.successors, dtype=float)
        self.pair_counts = np.asarray(self.pair_counts, dtype=int)
        self.source_lengths = np.asarray(self.source_lengths, dtype=int)

    @property
    def dim(self):
        return 2 * self.nu

    @property
    def n_pairs(self):
        return self.states.shape[0]


def _parse_rows(path):
    """Read a CSV, skipping '#' comments; return (header or None, float array)."""
    header = None
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if header is None and rows == []:
                try:
                    rows.append([float(c) for c in cells])
                    continue
                except ValueError:
                    header = cells
                    continue
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric cell")
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DataError(f"{path}: inconsistent column counts (row {i + 1})")
    return header, np.array(rows, dtype=float)


def load_signals(path, period=None):
    """Load a signal CSV into a SignalSet.

    Two layouts are accepted: a header row ``t,v1,...,vP`` whose time column
    must be uniform (the period is inferred from it), or a headerless single
    value column, in which case `period` must be supplied.
    """
    header, data = _parse_rows(path)
    if header is not None and header[0].lower() in ("t", "time"):
        t = data[:, 0]
        if len(t) < 2:
            raise DataError(f"{path}: need at least two samples")
        dt = np.diff(t)
        dt0 = np.median(dt)
        if dt0 <= 0 or np.any(np.abs(dt - dt0) > UNIFORM_RTOL * abs(dt0)):
            raise DataError(f"{path}: non-uniform sampling")
        trajectories = [data[:, j] for j in range(1, data.shape[1])]
        labels = header[1:]
        return SignalSet(trajectories, float(dt0), labels)
    if header is not None:
        # header without a time column: every column is a trajectory
        if period is None:
            raise ConfigError(f"{path}: no time column; a sampling period is required")
        return SignalSet([data[:, j] for j in range(data.shape[1])], float(period),
                         list(header))
    if period is None:
        raise ConfigError(f"{path}: headerless file; a sampling period is required")
    return SignalSet([data[:, j] for j in range(data.shape[1])], float(period))


def save_signals(signals, path):
    """Write a SignalSet in the loadable CSV layout (t plus one value column each)."""
    labels = signals.labels or [f"v{i + 1}" for i in range(len(signals.trajectories))]
    n = max(signals.lengths)
    if any(m != n for m in signals.lengths):
        raise DataError("cannot write trajectories of differing lengths to one file")
    t = np.arange(n) * signals.period_T
    with open(path, "w") as fh:
        fh.write("t," + ",".join(labels) + "\n")
        cols = [t] + list(signals.trajectories)
        for row in zip(*cols):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def shift_to_fixed_point(signals, offset=None):
    """Subtract the equilibrium offset so the fixed point sits at zero.

    When `offset` is not given it is estimated as the mean of the final 10% of
    samples pooled over all trajectories, on the assumption that the decaying
    signals end near equilibrium.

    Returns
    -------
    (SignalSet, float)
        The shifted signals and the offset that was removed.
    """
    if offset is None:
        tails = []
        for i, t in enumerate(signals.trajectories):
            if len(t) < MIN_TAIL_SAMPLES:
                raise DataError(
                    f"trajectory {i} too short ({len(t)} samples) for a tail "
                    f"estimate; pass the equilibrium offset explicitly"
                )
            tails.append(t[-max(1, int(TAIL_FRACTION * len(t))):])
        offset = float(np.mean(np.concatenate(tails)))
    shifted = SignalSet([t - offset for t in signals.trajectories],
                        signals.period_T, signals.labels)
    return shifted, float(offset)


def build_delay_dataset(signals, nu):
    """Build 2*nu-dimensional delay vectors and one-step training pairs.

    Takens' bound for a 2-D manifold asks for 2*nu >= 5; smaller nu is allowed
    (it suffices when the underlying state dimension is known to be small) but
    generic embedding is no longer guaranteed, so a warning is emitted.
    """
    if nu < 1:
        raise DataError(f"nu must be >= 1, got {nu}")
    if nu < 3:
        warnings.warn(
            f"nu={nu} is below the generic embedding bound nu >= 3 for "
            "two-dimensional manifolds; proceed only if the state dimension "
            "is known to be small",
            stacklevel=2,
        )
    dim = 2 * nu
    states, succs, counts, lengths = [], [], [], []
    for i, t in enumerate(signals.trajectories):
        m = len(t)
        if m <= dim:
            raise DataError(
                f"trajectory {i} has {m} samples; need more than 2*nu = {dim}"
            )
        windows = np.lib.stride_tricks.sliding_window_view(t, dim)
        states.append(windows[:-1])
        succs.append(windows[1:])
        counts.append(m - dim)
        lengths.append(m)
    return DelayDataset(
        nu=nu,
        states=np.vstack(states),
        successors=np.vstack(succs),
        pair_counts=np.array(counts),
        source_lengths=np.array(lengths),
        period_T=signals.period_T,
    )
