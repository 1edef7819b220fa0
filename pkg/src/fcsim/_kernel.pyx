# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled station kernel.

Statement-for-statement twin of ``_pykernel.py``; parameter and state
indices follow ``_layout.py``. The step loop runs without the GIL so
independent scenarios can run on worker threads.
"""

import numpy as np

from libc.math cimport sin, cos, floor, fabs, isfinite, M_PI

cdef double TWO_PI_3 = 2.0 * M_PI / 3.0
cdef double FOUR_PI_3 = 4.0 * M_PI / 3.0

cdef enum:
    NX = 8
    NCH = 14


cdef inline double load_current(double v, double soc, double* P) noexcept nogil:
    cdef double kind = P[10]
    cdef double vocv, i, lim
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


cdef inline void derivative(double t, double* x, double a0, double a1, double a2,
                            double* P, double* out) noexcept nogil:
    cdef double vpk = P[0]
    cdef double th = P[1] * t + P[2]
    cdef double v0 = vpk * sin(th)
    cdef double v1 = vpk * sin(th - TWO_PI_3)
    cdef double v2 = vpk * sin(th - FOUR_PI_3)
    cdef double i0 = x[0]
    cdef double i1 = x[1]
    cdef double i2 = x[2]
    cdef double vc1 = x[3]
    cdef double vc2 = x[4]
    cdef double i_f = x[5]
    cdef double vo = x[6]
    cdef double ip = 0.0
    cdef double im = 0.0
    cdef double u0, u1, u2, vcm, L, R, il, dsoc
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
    out[0] = (v0 - (u0 - vcm) - R * i0) / L
    out[1] = (v1 - (u1 - vcm) - R * i1) / L
    out[2] = (v2 - (u2 - vcm) - R * i2) / L
    out[3] = (ip - i_f) / P[5]
    out[4] = (-im - i_f) / P[6]
    out[5] = ((vc1 + vc2) - vo - P[8] * i_f) / P[7]
    out[6] = (i_f - il) / P[9]
    out[7] = dsoc


cdef inline double sign_ref(double i, double iref, double v, double zband) noexcept nogil:
    cdef double s = i if (i >= zband or i <= -zband) else iref
    if s == 0.0:
        s = v
    return 1.0 if s >= 0.0 else -1.0


cdef inline double fraction(double u, double s, double vc1, double vc2) noexcept nogil:
    cdef double f
    if s > 0.0:
        f = u / vc1 if vc1 > 0.0 else 1.0
    else:
        f = -u / vc2 if vc2 > 0.0 else 1.0
    if f < 0.0:
        return 0.0
    if f > 1.0:
        return 1.0
    return f


cdef inline double sgn(double v) noexcept nogil:
    return 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)


def run(P_in, x0, ctrl0, long n_steps, long decim, int method, int mode):
    """Integrate the closed-loop station for ``n_steps`` fixed steps.

    Returns ``(records, x, ctrl, info)``; ``records`` holds only the rows
    actually written.
    """
    cdef double[::1] P = np.ascontiguousarray(P_in, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x0, dtype=np.float64).copy()
    cdef double[::1] cv = np.ascontiguousarray(ctrl0, dtype=np.float64).copy()
    cdef long n_rec_max = n_steps // decim + 1
    rec_arr = np.zeros((n_rec_max, NCH))
    info_arr = np.zeros(6, dtype=np.int64)
    cdef double[:, ::1] rec = rec_arr
    cdef long long[::1] info = info_arr

    cdef double x[NX]
    cdef double xs[NX]
    cdef double xn[NX]
    cdef double k1[NX]
    cdef double k2[NX]
    cdef double k3[NX]
    cdef double k4[NX]
    cdef int j
    for j in range(NX):
        x[j] = xv[j]

    cdef double* Pp = &P[0]
    cdef double dt = P[25]
    cdef double h2 = 0.5 * dt
    cdef double h6 = dt / 6.0
    cdef double vpk = P[0]
    cdef double omega = P[1]
    cdef double phi = P[2]
    cdef double L = P[3]
    cdef double vref = P[16]
    cdef double kpv = P[17]
    cdef double kiv = P[18]
    cdef double imax = P[19]
    cdef double band = P[20]
    cdef double kbal = P[21]
    cdef double fcar = P[22]
    cdef double kpi = P[23]
    cdef double zband = P[24]
    cdef bint is_cp = P[10] == 1.0

    cdef double integ = cv[0]
    cdef double g0 = cv[1]
    cdef double g1 = cv[2]
    cdef double g2 = cv[3]
    cdef long n_rec = 0
    cdef long long switches = 0
    cdef long long clamps = 0
    cdef int status = 0
    cdef int bad = -1
    cdef long n = 0
    cdef double t, th, v0, v1, v2, il, vc1, vc2, e, u, iamp, vsum, off, lim
    cdef double r0, r1, r2, s0, s1, s2, e0, e1, e2, q0, q1, q2, n0, n1, n2
    cdef double a0, a1, a2, wli, c0, c1, c2, cmax, cmin, zp, lo, hi, lo1, hi1
    cdef double f0, f1, f2, ph, car

    with nogil:
        while True:
            t = n * dt
            th = omega * t + phi
            v0 = vpk * sin(th)
            v1 = vpk * sin(th - TWO_PI_3)
            v2 = vpk * sin(th - FOUR_PI_3)
            if n % decim == 0:
                il = load_current(x[6], x[7], Pp)
                rec[n_rec, 0] = t
                rec[n_rec, 1] = v0
                rec[n_rec, 2] = v1
                rec[n_rec, 3] = v2
                rec[n_rec, 4] = x[0]
                rec[n_rec, 5] = x[1]
                rec[n_rec, 6] = x[2]
                rec[n_rec, 7] = x[3]
                rec[n_rec, 8] = x[4]
                rec[n_rec, 9] = x[6]
                rec[n_rec, 10] = x[5]
                rec[n_rec, 11] = il
                rec[n_rec, 12] = v0 * x[0] + v1 * x[1] + v2 * x[2]
                rec[n_rec, 13] = x[6] * il
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

            r0 = iamp * sin(th)
            r1 = iamp * sin(th - TWO_PI_3)
            r2 = iamp * sin(th - FOUR_PI_3)
            s0 = sign_ref(x[0], r0, v0, zband)
            s1 = sign_ref(x[1], r1, v1, zband)
            s2 = sign_ref(x[2], r2, v2, zband)

            if mode == 0:
                e0 = (r0 + off) - x[0]
                e1 = (r1 + off) - x[1]
                e2 = (r2 + off) - x[2]
                q0 = e0 * sgn(v0)
                q1 = e1 * sgn(v1)
                q2 = e2 * sgn(v2)
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
                c0 = v0 - wli * cos(th) - kpi * (r0 - x[0])
                c1 = v1 - wli * cos(th - TWO_PI_3) - kpi * (r1 - x[1])
                c2 = v2 - wli * cos(th - FOUR_PI_3) - kpi * (r2 - x[2])
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
                f0 = fraction(c0 + zp, s0, vc1, vc2)
                f1 = fraction(c1 + zp, s1, vc1, vc2)
                f2 = fraction(c2 + zp, s2, vc1, vc2)
                if mode == 2:
                    a0 = s0 * f0
                    a1 = s1 * f1
                    a2 = s2 * f2
                else:
                    ph = fcar * t
                    ph = ph - floor(ph)
                    car = 1.0 - fabs(2.0 * ph - 1.0)
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
            derivative(t, x, a0, a1, a2, Pp, k1)
            if method == 0:
                for j in range(NX):
                    xs[j] = x[j] + h2 * k1[j]
                derivative(t + h2, xs, a0, a1, a2, Pp, k2)
                for j in range(NX):
                    xs[j] = x[j] + h2 * k2[j]
                derivative(t + h2, xs, a0, a1, a2, Pp, k3)
                for j in range(NX):
                    xs[j] = x[j] + dt * k3[j]
                derivative(t + dt, xs, a0, a1, a2, Pp, k4)
                for j in range(NX):
                    xn[j] = x[j] + h6 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            else:
                for j in range(NX):
                    xn[j] = x[j] + dt * k1[j]
            bad = -1
            for j in range(NX):
                if not isfinite(xn[j]):
                    bad = j
                    break
            if bad >= 0:
                status = 1
                break
            for j in range(NX):
                x[j] = xn[j]
            n += 1

    info[0] = status
    info[1] = n
    info[2] = n_rec
    info[3] = clamps
    info[4] = switches
    info[5] = bad
    for j in range(NX):
        xv[j] = x[j]
    ctrl_out = np.array([integ, g0, g1, g2])
    return rec_arr[:n_rec], np.asarray(xv), ctrl_out, info_arr
