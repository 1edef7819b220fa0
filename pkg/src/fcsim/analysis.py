"""Post-processing of recorded station waveforms."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .simcore import TimeSeries, detect_steady_state

# settle criterion on the output voltage
SETTLE_REL_TOL = 0.005
SETTLE_PERIODS = 2
STEADY_PERIODS = 2


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class SteadyWindow:
    start: float
    duration: float
    f_fundamental: float

    def __post_init__(self):
        n = self.duration * self.f_fundamental
        if round(n) < 2 or abs(n - round(n)) > 1e-6:
            raise ValueError("steady window must span an integer number (>= 2) of periods")

    @property
    def periods(self) -> int:
        return int(round(self.duration * self.f_fundamental))


def _nonempty(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise AnalysisError("empty window")
    return x


def rms(x) -> float:
    x = _nonempty(x)
    return float(np.sqrt(np.mean(x * x)))


def harmonic_spectrum(x, sample_period: float, f_fundamental: float, n_harmonics: int = 40) -> np.ndarray:
    """Complex peak amplitudes of DC and harmonics 1..n of a whole-period window.

    Entry 0 is the mean; entry h is the phasor of harmonic h (its magnitude
    is the peak amplitude).
    """
    x = _nonempty(x)
    n = len(x)
    periods = n * sample_period * f_fundamental
    m = int(round(periods))
    if m < 1 or abs(periods - m) > 1e-6 * max(m, 1):
        raise AnalysisError("window must span an integer number of fundamental periods")
    if 1.0 / sample_period <= 2.0 * n_harmonics * f_fundamental:
        raise AnalysisError("sample rate too low for the requested harmonics")
    X = np.fft.rfft(x) / n
    out = np.empty(n_harmonics + 1, dtype=complex)
    out[0] = X[0]
    for h in range(1, n_harmonics + 1):
        out[h] = 2.0 * X[h * m]
    return out


def thd(x, sample_period: float, f_fundamental: float, n_harmonics: int = 40) -> float:
    """Total harmonic distortion in percent over harmonics 2..n."""
    spec = np.abs(harmonic_spectrum(x, sample_period, f_fundamental, n_harmonics))
    fund = spec[1]
    if fund <= 1e-12 * max(float(np.max(np.abs(x))), 1e-300):
        raise AnalysisError("no fundamental")
    return float(np.sqrt(np.sum(spec[2:] ** 2)) / fund * 100.0)


def displacement_power_factor(v, i, sample_period: float, f_fundamental: float) -> float:
    """cos of the angle between the fundamental phasors of ``v`` and ``i``."""
    V = harmonic_spectrum(v, sample_period, f_fundamental, 1)[1]
    I = harmonic_spectrum(i, sample_period, f_fundamental, 1)[1]
    if abs(V) == 0.0 or abs(I) == 0.0:
        raise AnalysisError("no fundamental")
    return float(math.cos(np.angle(I) - np.angle(V)))


def peak(t, x) -> tuple:
    """``(time, value)`` of the maximum, earliest occurrence."""
    x = _nonempty(x)
    k = int(np.argmax(x))
    return float(np.asarray(t)[k]), float(x[k])


def avg_power(v, i) -> float:
    v = _nonempty(v)
    i = _nonempty(i)
    if v.shape != i.shape:
        raise AnalysisError(f"channel length mismatch: {v.shape} vs {i.shape}")
    return float(np.mean(v * i))


@dataclass
class SummaryReport:
    v_dc_steady_mean: float
    v_dc_peak: float
    i_dc_steady_mean: float
    i_dc_peak: float
    p_dc_steady_mean: float
    p_dc_peak: float
    phase_current_thd: float
    midpoint_imbalance: float
    settle_time: Optional[float]
    power_balance_residual: float
    v_dc_peak_time: float = 0.0
    displacement_power_factor: float = 0.0
    midpoint_ripple: float = 0.0
    link_voltage_mean: float = 0.0
    p_src_steady_mean: float = 0.0
    p_loss_steady_mean: float = 0.0
    window_start: float = 0.0
    window_duration: float = 0.0
    flags: list = field(default_factory=list)

    @property
    def settled(self) -> bool:
        return self.settle_time is not None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SummaryReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def to_text(self) -> str:
        """Flat ``key = value`` listing."""
        lines = []
        for k, v in self.to_dict().items():
            if isinstance(v, list):
                v = ",".join(v) if v else "-"
            elif v is None:
                v = "none"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        rows = [
            ("DC output voltage, steady mean", self.v_dc_steady_mean, "V"),
            ("DC output voltage, peak", self.v_dc_peak, "V"),
            ("DC output current, steady mean", self.i_dc_steady_mean, "A"),
            ("DC output current, peak", self.i_dc_peak, "A"),
            ("DC output power, steady mean", self.p_dc_steady_mean / 1e3, "kW"),
            ("DC output power, peak", self.p_dc_peak / 1e3, "kW"),
            ("Phase current THD (2-40)", self.phase_current_thd, "%"),
            ("Displacement power factor", self.displacement_power_factor, ""),
            ("Midpoint imbalance", self.midpoint_imbalance, "%"),
            ("Midpoint ripple (pk-pk)", self.midpoint_ripple, "%"),
            ("Power balance residual", self.power_balance_residual, "%"),
        ]
        width = max(len(r[0]) for r in rows)
        out = [f"{name:<{width}}  {value:12.4f} {unit}" for name, value, unit in rows]
        settle = "not reached" if self.settle_time is None else f"{self.settle_time * 1e3:.2f} ms"
        out.append(f"{'Settle time':<{width}}  {settle:>12}")
        if self.flags:
            out.append(f"{'Flags':<{width}}  {', '.join(self.flags):>12}")
        return "\n".join(out) + "\n"

    def to_json(self, metadata: Optional[dict] = None) -> str:
        doc = {"summary": self.to_dict()}
        if metadata is not None:
            doc["metadata"] = metadata
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def summarize(
    series: TimeSeries,
    f_fundamental: float,
    r_phase: float = 0.0,
    r_filter: float = 0.0,
) -> SummaryReport:
    """Steady-state and peak metrics of a station run.

    The steady window is the final ``STEADY_PERIODS`` fundamental periods of
    the record. ``r_phase`` and ``r_filter`` are the series resistances used
    to account for conduction losses in the power balance.
    """
    flags = []
    if series.diverged:
        flags.append("diverged")
    t = series.t
    period = 1.0 / f_fundamental
    settle = detect_steady_state(
        series, "v_out", SETTLE_PERIODS * period, SETTLE_REL_TOL, "dc", f_fundamental
    )
    if settle is None:
        flags.append("unsettled")

    n_win = int(round(STEADY_PERIODS * period / series.sample_period))
    if len(t) < n_win:
        raise AnalysisError(
            f"record shorter than {STEADY_PERIODS} fundamental periods ({len(t)} samples)"
        )
    sl = slice(len(t) - n_win, None)
    dT = series.sample_period

    v_out = series["v_out"]
    i_load = series["i_load"]
    p_out = series["p_out"]
    v_c1 = series["v_c1"][sl]
    v_c2 = series["v_c2"][sl]
    link = v_c1 + v_c2

    t_vpk, v_pk = peak(t, v_out)
    p_src = float(np.mean(series["p_src"][sl]))
    i_ph = [series[c][sl] for c in ("i_ph_a", "i_ph_b", "i_ph_c")]
    v_ph = [series[c][sl] for c in ("v_src_a", "v_src_b", "v_src_c")]
    p_loss = float(
        np.mean(r_phase * (i_ph[0] ** 2 + i_ph[1] ** 2 + i_ph[2] ** 2)
                + r_filter * series["i_f"][sl] ** 2)
    )
    p_load = float(np.mean(p_out[sl]))

    try:
        thd_val = max(thd(i, dT, f_fundamental) for i in i_ph)
        dpf = min(displacement_power_factor(v, i, dT, f_fundamental) for v, i in zip(v_ph, i_ph))
    except AnalysisError:
        thd_val, dpf = 0.0, 0.0
        flags.append("no_fundamental")

    link_mean = float(np.mean(link))
    if link_mean > 0.0:
        imbalance = abs(float(np.mean(v_c1 - v_c2))) / link_mean * 100.0
        ripple = float(np.ptp(v_c1 - v_c2)) / link_mean * 100.0
    else:
        imbalance = ripple = 0.0
    residual_w = abs(p_src - p_load - p_loss)
    if p_load != 0.0:
        residual = residual_w / abs(p_load) * 100.0
    else:
        residual = 0.0 if residual_w == 0.0 else math.inf

    return SummaryReport(
        v_dc_steady_mean=float(np.mean(v_out[sl])),
        v_dc_peak=v_pk,
        i_dc_steady_mean=float(np.mean(i_load[sl])),
        i_dc_peak=float(np.max(i_load)),
        p_dc_steady_mean=p_load,
        p_dc_peak=float(np.max(p_out)),
        phase_current_thd=thd_val,
        midpoint_imbalance=imbalance,
        settle_time=settle,
        power_balance_residual=residual,
        v_dc_peak_time=t_vpk,
        displacement_power_factor=dpf,
        midpoint_ripple=ripple,
        link_voltage_mean=link_mean,
        p_src_steady_mean=p_src,
        p_loss_steady_mean=p_loss,
        window_start=float(t[sl][0]),
        window_duration=STEADY_PERIODS * period,
        flags=flags,
    )
