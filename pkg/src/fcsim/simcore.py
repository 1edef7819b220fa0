"""Fixed-step integration engine, run loop and waveform container.

Nothing in here knows about power electronics: a system is a derivative
function ``f(t, x) -> dx/dt`` plus, optionally, a per-step hook that updates
discrete state (switch positions, controller memory) at step boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

Derivative = Callable[[float, np.ndarray], np.ndarray]

METHODS = ("rk4", "euler")


class NonFiniteStateError(FloatingPointError):
    """Raised when an integration step produces a NaN or infinite value."""

    def __init__(self, index: int, t: float, name: Optional[str] = None):
        self.index = index
        self.t = t
        self.name = name
        label = f"{index} ({name})" if name else str(index)
        super().__init__(f"non-finite value in state index {label} at t={t:.9g} s")


@dataclass(frozen=True)
class SimState:
    """Dynamic state at time ``t``; ``layout`` maps state names to indices."""

    t: float
    x: np.ndarray
    layout: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"time must be nonnegative, got {self.t}")
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))

    def __getitem__(self, name: str) -> float:
        return float(self.x[self.layout[name]])

    def evolve(self, t: float, x: np.ndarray) -> "SimState":
        if len(x) != len(self.x):
            raise ValueError("state vector length changed during a run")
        return SimState(t, x, self.layout)

    def name_of(self, index: int) -> Optional[str]:
        for name, i in self.layout.items():
            if i == index:
                return name
        return None


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-6
    t_end: float = 0.5
    record_decimation: int = 10
    method: str = "rk4"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.t_end >= self.dt:
            raise ValueError(f"t_end must be >= dt, got t_end={self.t_end}, dt={self.dt}")
        if int(self.record_decimation) != self.record_decimation or self.record_decimation < 1:
            raise ValueError(
                f"record_decimation must be a positive integer, got {self.record_decimation}"
            )
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")

    @property
    def n_steps(self) -> int:
        """Step count, rounded down when ``t_end`` is not a multiple of ``dt``."""
        ratio = self.t_end / self.dt
        n = math.floor(ratio)
        # absorb representation error such as 0.5 / 1e-6 = 499999.99999999994
        if ratio - n > 1.0 - 1e-9:
            n += 1
        return int(n)

    @property
    def actual_t_end(self) -> float:
        return self.n_steps * self.dt

    @property
    def sample_period(self) -> float:
        return self.dt * self.record_decimation


@dataclass
class TimeSeries:
    """Uniformly sampled recorded channels.

    ``t`` holds the sample times; ``values`` maps channel name to an array of
    the same length. ``diverged`` marks a run cut short by a non-finite state.
    """

    t: np.ndarray
    values: dict
    units: dict
    sample_period: float
    diverged: bool = False
    message: str = ""

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        n = len(self.t)
        for name, arr in self.values.items():
            if len(arr) != n:
                raise ValueError(f"channel {name!r} has {len(arr)} samples, expected {n}")

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, name: str) -> np.ndarray:
        if name == "t":
            return self.t
        try:
            return self.values[name]
        except KeyError:
            raise KeyError(f"channel {name!r} not in series") from None

    def __contains__(self, name: str) -> bool:
        return name == "t" or name in self.values

    @property
    def channels(self) -> list:
        return list(self.values)

    @property
    def t_end(self) -> float:
        return float(self.t[-1]) if len(self.t) else 0.0

    def tail(self, n_samples: int) -> "TimeSeries":
        """Last ``n_samples`` samples as a new series."""
        sl = slice(max(len(self.t) - n_samples, 0), None)
        return TimeSeries(
            self.t[sl],
            {k: v[sl] for k, v in self.values.items()},
            dict(self.units),
            self.sample_period,
            self.diverged,
            self.message,
        )


def _check_finite(x: np.ndarray, t: float, state: Optional[SimState] = None) -> None:
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        index = int(bad[0])
        name = state.name_of(index) if state is not None else None
        raise NonFiniteStateError(index, t, name)


def step(state: SimState, dt: float, derivative: Derivative, method: str = "rk4") -> SimState:
    """Advance ``state`` by one fixed step of ``dt``.

    Classical four-stage RK4 or explicit Euler. Any discrete inputs the
    derivative closes over must stay frozen for the duration of the call.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    t = state.t
    x = state.x
    k1 = np.asarray(derivative(t, x), dtype=float)
    _check_finite(k1, t, state)
    if method == "rk4":
        h2 = 0.5 * dt
        k2 = np.asarray(derivative(t + h2, x + h2 * k1), dtype=float)
        _check_finite(k2, t + h2, state)
        k3 = np.asarray(derivative(t + h2, x + h2 * k2), dtype=float)
        _check_finite(k3, t + h2, state)
        k4 = np.asarray(derivative(t + dt, x + dt * k3), dtype=float)
        _check_finite(k4, t + dt, state)
        xn = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    elif method == "euler":
        xn = x + dt * k1
    else:
        raise ValueError(f"unknown method {method!r}")
    _check_finite(xn, t + dt, state)
    return state.evolve(t + dt, xn)


def run(
    derivative: Derivative,
    initial: SimState,
    solver: SolverConfig,
    probes: Mapping[str, Callable[[SimState], float]],
    units: Optional[Mapping[str, str]] = None,
    on_step: Optional[Callable[[SimState], None]] = None,
    on_finish: Optional[Callable[[SimState], None]] = None,
) -> TimeSeries:
    """Integrate from ``initial`` to ``solver.t_end`` and record ``probes``.

    ``on_step`` runs at every step boundary before the step is taken. A
    non-finite state stops the run and returns the partial series with
    ``diverged`` set. ``on_finish`` receives the last accepted state.
    """
    n_steps = solver.n_steps
    decim = int(solver.record_decimation)
    names = list(probes)
    n_rec = n_steps // decim + 1
    times = np.empty(n_rec)
    data = np.empty((n_rec, len(names)))
    units = dict(units or {})

    state = initial
    n = 0
    k = 0
    diverged = False
    message = ""
    if solver.actual_t_end != solver.t_end:
        message = f"t_end rounded down to {solver.actual_t_end:.9g} s"
    while True:
        if n % decim == 0:
            times[k] = state.t
            data[k] = [probes[name](state) for name in names]
            k += 1
        if n >= n_steps:
            break
        if on_step is not None:
            on_step(state)
        try:
            nxt = step(state, solver.dt, derivative, solver.method)
        except NonFiniteStateError as exc:
            diverged = True
            message = str(exc)
            break
        # step boundaries land on exact multiples of dt
        state = nxt.evolve((n + 1) * solver.dt, nxt.x)
        n += 1

    if on_finish is not None:
        on_finish(state)
    return TimeSeries(
        times[:k],
        {name: data[:k, j].copy() for j, name in enumerate(names)},
        {name: units.get(name, "") for name in names},
        solver.sample_period,
        diverged,
        message,
    )


def _window_samples(series: TimeSeries, duration: float) -> int:
    return int(round(duration / series.sample_period))


def detect_steady_state(
    series: TimeSeries,
    channel: str,
    window: float,
    rel_tol: float,
    kind: str = "dc",
    f_fundamental: Optional[float] = None,
) -> Optional[float]:
    """Earliest time after which ``channel`` stays flat for ``window`` seconds.

    DC channels: (max - min) / mean over the window must not exceed
    ``rel_tol``; when the window mean is below 1 V in magnitude the band is
    ``rel_tol`` times the channel's global peak magnitude instead. AC channels
    (``kind="ac"``, needs ``f_fundamental``) apply the same test to the
    sliding one-cycle RMS. Returns ``None`` if no such window exists.
    """
    x = series[channel]
    if not rel_tol > 0:
        raise ValueError("rel_tol must be > 0")
    if f_fundamental is not None and window < 2.0 / f_fundamental * (1 - 1e-9):
        raise ValueError("window must span at least two fundamental periods")
    if kind == "ac":
        if f_fundamental is None:
            raise ValueError("AC steady-state detection needs f_fundamental")
        m = _window_samples(series, 1.0 / f_fundamental)
        sq = np.concatenate(([0.0], np.cumsum(x * x)))
        cyc = np.sqrt(np.maximum((sq[m:] - sq[:-m]) / m, 0.0))
        w = _window_samples(series, window) - m + 1
        return _first_flat(series.t, cyc, w, rel_tol)
    if kind != "dc":
        raise ValueError(f"kind must be 'dc' or 'ac', got {kind!r}")
    return _first_flat(series.t, x, _window_samples(series, window) + 1, rel_tol)


def _first_flat(t: np.ndarray, x: np.ndarray, w: int, rel_tol: float) -> Optional[float]:
    if w < 1 or len(x) < w:
        return None
    view = np.lib.stride_tricks.sliding_window_view(x, w)
    span = view.max(axis=1) - view.min(axis=1)
    csum = np.concatenate(([0.0], np.cumsum(x)))
    mean = (csum[w:] - csum[:-w]) / w
    gmax = float(np.max(np.abs(x))) if len(x) else 0.0
    band = np.where(np.abs(mean) >= 1.0, rel_tol * np.abs(mean), rel_tol * gmax)
    ok = np.flatnonzero(span <= band)
    if ok.size == 0:
        return None
    return float(t[ok[0]])


def convergence_ratio(
    derivative: Derivative,
    x0: Sequence[float],
    t_final: float,
    dt: float,
    exact: np.ndarray,
    method: str = "rk4",
) -> float:
    """Global-error ratio err(dt) / err(dt/2) at ``t_final``."""
    errs = []
    for h in (dt, dt / 2):
        state = SimState(0.0, np.asarray(x0, dtype=float))
        for _ in range(int(round(t_final / h))):
            state = step(state, h, derivative, method)
        errs.append(float(np.max(np.abs(state.x - exact))))
    return errs[0] / errs[1]
