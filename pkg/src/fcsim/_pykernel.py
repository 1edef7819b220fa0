"""Pure-Python station kernel, used when the compiled extension is missing.

Mirrors ``_kernel.pyx`` statement for statement so both produce the same
floating-point results. Scalars only, no numpy inside the step loop.
"""

from __future__ import annotations

import math

import numpy as np

from ._layout import (
    INFO_BAD_INDEX,
    INFO_CP_CLAMPS,
    INFO_RECORDS,
    INFO_STATUS,
    INFO_STEPS,
    INFO_SWITCHES,
    N_CHANNELS,
    N_INFO,
)

TWO_PI_3 = 2.0 * math.pi / 3.0
FOUR_PI_3 = 4.0 * math.pi / 3.0

_sin = math.sin
_cos = math.cos
_floor = math.floor
_isfinite = math.isfinite


def load_current(v, soc, P):
    kind = P[10]
    if kind == 0.0:
        return v / P[11]
    if kind == 1.0:
        return P[11] / (v if v > P[12] else P[12])
    vocv = P[12] + soc * (P[13] - P[12])
    i = (v - vocv) / P[14]
    if i < 0.0:
        return 0.0
    if v > 0.0:
        lim = P[15] / v
        if i > lim:
            return lim
    return i


def derivative(t, x, a0, a1, a2, P):
    """State rates with per-phase attachment coefficients a_k in [-1, 1].

    a_k = +1, 0, -1 are the switched P, M, N attachments; fractional values
    are duty-averaged attachments.
    """
    vpk = P[0]
    th = P[1] * t + P[2]
    v0 = vpk * _sin(th)
    v1 = vpk * _sin(th - TWO_PI_3)
    v2 = vpk * _sin(th - FOUR_PI_3)
    i0 = x[0]
    i1 = x[1]
    i2 = x[2]
    vc1 = x[3]
    vc2 = x[4]
    i_f = x[5]
    vo = x[6]
    ip = 0.0
    im = 0.0
    if a0 > 0.0:
        u0 = a0 * vc1
        ip = ip + i0 * a0
    else:
        u0 = a0 * vc2
        im = im - i0 * a0
    if a1 > 0.0:
        u1 = a1 * vc1
        ip = ip + i1 * a1
    else:
        u1 = a1 * vc2
        im = im - i1 * a1
    if a2 > 0.0:
        u2 = a2 * vc1
        ip = ip + i2 * a2
    else:
        u2 = a2 * vc2
        im = im - i2 * a2
    vcm = (u0 + u1 + u2) / 3.0
    L = P[3]
    R = P[4]
    il = load_current(vo, x[7], P)
    if P[10] == 2.0:
        dsoc = il * (P[12] + x[7] * (P[13] - P[12])) / (P[11] * 3.6e6)
    else:
        dsoc = 0.0
    return (
        (v0 - (u0 - vcm) - R * i0) / L,
        (v1 - (u1 - vcm) - R * i1) / L,
        (v2 - (u2 - vcm) - R * i2) / L,
        (ip - i_f) / P[5],
        (-im - i_f) / P[6],
        ((vc1 + vc2) - vo - P[8] * i_f) / P[7],
        (i_f - il) / P[9],
        dsoc,
    )


def _sign_ref(i, iref, v, zband):
    s = i if (i >= zband or i <= -zband) else iref
    if s == 0.0:
        s = v
    return 1.0 if s >= 0.0 else -1.0


def run(P, x0, ctrl0, n_steps, decim, method, mode):
    """Integrate the closed-loop station for ``n_steps`` fixed steps.

    Returns ``(records, x, ctrl, info)``; ``records`` holds only the rows
    actually written.
    """
    P = [float(p) for p in P]
    x = [float(v) for v in x0]
    ctrl = [float(c) for c in ctrl0]
    n_rec_max = n_steps // decim + 1
    rec = np.zeros((n_rec_max, N_CHANNELS))
    info = np.zeros(N_INFO, dtype=np.int64)
    info[INFO_BAD_INDEX] = -1

    dt = P[25]
    h2 = 0.5 * dt
    h6 = dt / 6.0
    vpk = P[0]
    omega = P[1]
    phi = P[2]
    L = P[3]
    vref = P[16]
    kpv = P[17]
    kiv = P[18]
    imax = P[19]
    band = P[20]
    kbal = P[21]
    fcar = P[22]
    kpi = P[23]
    zband = P[24]
    is_cp = P[10] == 1.0
    nx = len(x)

    integ = ctrl[0]
    g0 = ctrl[1]
    g1 = ctrl[2]
    g2 = ctrl[3]
    n_rec = 0
    switches = 0
    clamps = 0
    status = 0
    n = 0
    while True:
        t = n * dt
        th = omega * t + phi
        v0 = vpk * _sin(th)
        v1 = vpk * _sin(th - TWO_PI_3)
        v2 = vpk * _sin(th - FOUR_PI_3)
        if n % decim == 0:
            il = load_current(x[6], x[7], P)
            row = rec[n_rec]
            row[:] = (
                t, v0, v1, v2, x[0], x[1], x[2], x[3], x[4], x[6], x[5], il,
                v0 * x[0] + v1 * x[1] + v2 * x[2], x[6] * il,
            )
            n_rec += 1
        if n >= n_steps:
            break

        # outer voltage loop with conditional integration
        vc1 = x[3]
        vc2 = x[4]
        e = vref - (vc1 + vc2)
        u = kpv * e + kiv * integ
        if u > imax:
            iamp = imax
        elif u < 0.0:
            iamp = 0.0
        else:
            iamp = u
        if not ((u > imax and e > 0.0) or (u < 0.0 and e < 0.0)):
            integ = integ + e * dt

        # midpoint balance, zero-sequence reference offset
        vsum = vc1 + vc2
        if vsum > 0.0:
            off = kbal * (vc1 - vc2) / vsum * iamp
            lim = 0.1 * iamp
            if off > lim:
                off = lim
            elif off < -lim:
                off = -lim
        else:
            off = 0.0

        r0 = iamp * _sin(th)
        r1 = iamp * _sin(th - TWO_PI_3)
        r2 = iamp * _sin(th - FOUR_PI_3)
        s0 = _sign_ref(x[0], r0, v0, zband)
        s1 = _sign_ref(x[1], r1, v1, zband)
        s2 = _sign_ref(x[2], r2, v2, zband)

        if mode == 0:
            e0 = (r0 + off) - x[0]
            e1 = (r1 + off) - x[1]
            e2 = (r2 + off) - x[2]
            q0 = e0 * (1.0 if v0 > 0.0 else (-1.0 if v0 < 0.0 else 0.0))
            q1 = e1 * (1.0 if v1 > 0.0 else (-1.0 if v1 < 0.0 else 0.0))
            q2 = e2 * (1.0 if v2 > 0.0 else (-1.0 if v2 < 0.0 else 0.0))
            n0 = 1.0 if q0 > band else (0.0 if q0 < -band else g0)
            n1 = 1.0 if q1 > band else (0.0 if q1 < -band else g1)
            n2 = 1.0 if q2 > band else (0.0 if q2 < -band else g2)
            switches += (n0 != g0) + (n1 != g1) + (n2 != g2)
            g0 = n0
            g1 = n1
            g2 = n2
            a0 = 0.0 if g0 == 1.0 else s0
            a1 = 0.0 if g1 == 1.0 else s1
            a2 = 0.0 if g2 == 1.0 else s2
        else:
            # proportional current control with inductive feed-forward
            wli = omega * L * iamp
            c0 = v0 - wli * _cos(th) - kpi * (r0 - x[0])
            c1 = v1 - wli * _cos(th - TWO_PI_3) - kpi * (r1 - x[1])
            c2 = v2 - wli * _cos(th - FOUR_PI_3) - kpi * (r2 - x[2])
            cmax = c0 if c0 > c1 else c1
            cmax = cmax if cmax > c2 else c2
            cmin = c0 if c0 < c1 else c1
            cmin = cmin if cmin < c2 else c2
            zp = -0.5 * (cmax + cmin) - kpi * off
            if s0 > 0.0:
                lo = -c0
                hi = vc1 - c0
            else:
                lo = -vc2 - c0
                hi = -c0
            if s1 > 0.0:
                lo1 = -c1
                hi1 = vc1 - c1
            else:
                lo1 = -vc2 - c1
                hi1 = -c1
            if lo1 > lo:
                lo = lo1
            if hi1 < hi:
                hi = hi1
            if s2 > 0.0:
                lo1 = -c2
                hi1 = vc1 - c2
            else:
                lo1 = -vc2 - c2
                hi1 = -c2
            if lo1 > lo:
                lo = lo1
            if hi1 < hi:
                hi = hi1
            if lo <= hi:
                if zp < lo:
                    zp = lo
                elif zp > hi:
                    zp = hi
            f0 = _fraction(c0 + zp, s0, vc1, vc2)
            f1 = _fraction(c1 + zp, s1, vc1, vc2)
            f2 = _fraction(c2 + zp, s2, vc1, vc2)
            if mode == 2:
                a0 = s0 * f0
                a1 = s1 * f1
                a2 = s2 * f2
            else:
                ph = fcar * t
                ph = ph - _floor(ph)
                car = 1.0 - abs(2.0 * ph - 1.0)
                n0 = 1.0 if car > f0 else 0.0
                n1 = 1.0 if car > f1 else 0.0
                n2 = 1.0 if car > f2 else 0.0
                switches += (n0 != g0) + (n1 != g1) + (n2 != g2)
                g0 = n0
                g1 = n1
                g2 = n2
                a0 = 0.0 if g0 == 1.0 else s0
                a1 = 0.0 if g1 == 1.0 else s1
                a2 = 0.0 if g2 == 1.0 else s2

        if is_cp and x[6] < P[12]:
            clamps += 1

        # fixed-step integration, attachments frozen across sub-stages
        k1 = derivative(t, x, a0, a1, a2, P)
        if method == 0:
            xs = [x[j] + h2 * k1[j] for j in range(nx)]
            k2 = derivative(t + h2, xs, a0, a1, a2, P)
            xs = [x[j] + h2 * k2[j] for j in range(nx)]
            k3 = derivative(t + h2, xs, a0, a1, a2, P)
            xs = [x[j] + dt * k3[j] for j in range(nx)]
            k4 = derivative(t + dt, xs, a0, a1, a2, P)
            xn = [
                x[j] + h6 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                for j in range(nx)
            ]
        else:
            xn = [x[j] + dt * k1[j] for j in range(nx)]
        bad = -1
        for j in range(nx):
            if not _isfinite(xn[j]):
                bad = j
                break
        if bad >= 0:
            status = 1
            info[INFO_BAD_INDEX] = bad
            break
        x = xn
        n += 1

    info[INFO_STATUS] = status
    info[INFO_STEPS] = n
    info[INFO_RECORDS] = n_rec
    info[INFO_CP_CLAMPS] = clamps
    info[INFO_SWITCHES] = switches
    ctrl_out = np.array([integ, g0, g1, g2])
    return rec[:n_rec], np.array(x), ctrl_out, info


def _fraction(u, s, vc1, vc2):
    # fraction of the period attached to the outer bus
    if s > 0.0:
        f = u / vc1 if vc1 > 0.0 else 1.0
    else:
        f = -u / vc2 if vc2 > 0.0 else 1.0
    if f < 0.0:
        return 0.0
    if f > 1.0:
        return 1.0
    return f
