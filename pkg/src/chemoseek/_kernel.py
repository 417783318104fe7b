"""Compiled fixed-step integrators.

The closed-loop simulator advances a 15-component state

    y = [p(3), R(9, row-major), zeta1, zeta2, rho]

with the classic explicit 4th-order one-step method over the joint
right-hand side (pose kinematics + signaling filter), the stimulus being
the concentration at the current position plus a per-step noise value held
constant across the four stages. The rotation block is repaired onto the
nearest rotation every `renorm_stride` steps; the adaptive gain is capped
at rho_max.

Two auxiliary 12-state integrators (position + rotation only) drive the
exactness verification of the averaged-frame dynamics: one integrates the
raw kinematics under a prescribed feedback signal, the other integrates the
averaged-frame form of the same motion. The feedback signal is a sum of
sinusoids given by coefficient arrays, eta(t) = sum_i amp[i] *
sin(freq[i] * t + phase[i]).

Field parameter packing (code, fp[8]):
    0 uniform         fp[0]=level
    1 radial-inverse  fp[0]=l0, fp[1:4]=source, fp[4]=clamp_radius
    2 linear          fp[0]=offset, fp[1:4]=source, fp[4]=slope, fp[5:8]=unit direction
    3 gaussian        fp[0]=peak, fp[1:4]=source, fp[4]=width
"""
from __future__ import annotations

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_NONFINITE = 1


@njit(cache=True, nogil=True)
def _conc(code, fp, x, y, z):
    if code == 0:
        return fp[0]
    dx, dy, dz = x - fp[1], y - fp[2], z - fp[3]
    if code == 1:
        r = np.sqrt(dx * dx + dy * dy + dz * dz)
        if r < fp[4]:
            r = fp[4]
        return fp[0] / r
    if code == 2:
        val = fp[0] + fp[4] * (fp[5] * dx + fp[6] * dy + fp[7] * dz)
        return val if val > 0.0 else 0.0
    r2 = dx * dx + dy * dy + dz * dz
    return fp[0] * np.exp(-r2 / (2.0 * fp[4] * fp[4]))


@njit(cache=True, nogil=True)
def _rhs(y, s, v, wpar0, wperp0, wpar1, wperp1, sig1, sig2, mu, rho_max):
    zeta = y[13] - y[12]
    eta = y[14] * zeta
    wpar = wpar0 + wpar1 * eta
    wperp = wperp0 + wperp1 * eta
    d = np.empty(15)
    # dp = v * (first column of R)
    d[0] = v * y[3]
    d[1] = v * y[6]
    d[2] = v * y[9]
    # dR = R @ hat((wpar, 0, wperp))
    d[3] = y[4] * wperp
    d[4] = -y[3] * wperp + y[5] * wpar
    d[5] = -y[4] * wpar
    d[6] = y[7] * wperp
    d[7] = -y[6] * wperp + y[8] * wpar
    d[8] = -y[7] * wpar
    d[9] = y[10] * wperp
    d[10] = -y[9] * wperp + y[11] * wpar
    d[11] = -y[10] * wpar
    d[12] = zeta / sig1
    d[13] = (s - y[13]) / sig2
    drho = y[14] * (1.0 - eta * eta) / mu
    if y[14] >= rho_max and drho > 0.0:
        drho = 0.0
    d[14] = drho
    return d


@njit(cache=True, nogil=True)
def _repair_rotation(y, lo):
    """Newton polar projection of the 3x3 block y[lo:lo+9], in place."""
    for _ in range(8):
        r0, r1, r2 = y[lo], y[lo + 1], y[lo + 2]
        r3, r4, r5 = y[lo + 3], y[lo + 4], y[lo + 5]
        r6, r7, r8 = y[lo + 6], y[lo + 7], y[lo + 8]
        # G = R^T R
        g00 = r0 * r0 + r3 * r3 + r6 * r6
        g01 = r0 * r1 + r3 * r4 + r6 * r7
        g02 = r0 * r2 + r3 * r5 + r6 * r8
        g11 = r1 * r1 + r4 * r4 + r7 * r7
        g12 = r1 * r2 + r4 * r5 + r7 * r8
        g22 = r2 * r2 + r5 * r5 + r8 * r8
        e00, e11, e22 = g00 - 1.0, g11 - 1.0, g22 - 1.0
        err2 = e00 * e00 + e11 * e11 + e22 * e22 + 2.0 * (g01 * g01 + g02 * g02 + g12 * g12)
        if err2 <= 1e-26:
            break
        # R <- 1.5 R - 0.5 R G
        y[lo] = 1.5 * r0 - 0.5 * (r0 * g00 + r1 * g01 + r2 * g02)
        y[lo + 1] = 1.5 * r1 - 0.5 * (r0 * g01 + r1 * g11 + r2 * g12)
        y[lo + 2] = 1.5 * r2 - 0.5 * (r0 * g02 + r1 * g12 + r2 * g22)
        y[lo + 3] = 1.5 * r3 - 0.5 * (r3 * g00 + r4 * g01 + r5 * g02)
        y[lo + 4] = 1.5 * r4 - 0.5 * (r3 * g01 + r4 * g11 + r5 * g12)
        y[lo + 5] = 1.5 * r5 - 0.5 * (r3 * g02 + r4 * g12 + r5 * g22)
        y[lo + 6] = 1.5 * r6 - 0.5 * (r6 * g00 + r7 * g01 + r8 * g02)
        y[lo + 7] = 1.5 * r7 - 0.5 * (r6 * g01 + r7 * g11 + r8 * g12)
        y[lo + 8] = 1.5 * r8 - 0.5 * (r6 * g02 + r7 * g12 + r8 * g22)


@njit(cache=True, nogil=True)
def integrate(y0, nsteps, dt, record_stride, renorm_stride,
              v, wpar0, wperp0, wpar1, wperp1,
              sig1, sig2, mu, rho_max,
              field_code, field_params, noise,
              out_t, out_state, out_stim):
    """Closed-loop run. Fills the out arrays; returns (status, rows, abort_step).

    noise has length nsteps + 1: noise[k] is added to every stimulus
    evaluation during step k and to the recorded stimulus at step index k.
    On a non-finite state the run stops after the last good recorded row.
    """
    y = y0.copy()
    out_t[0] = 0.0
    out_state[0] = y
    out_stim[0] = _conc(field_code, field_params, y[0], y[1], y[2]) + noise[0]
    rows = 1
    for k in range(nsteps):
        nz = noise[k]
        s1 = _conc(field_code, field_params, y[0], y[1], y[2]) + nz
        k1 = _rhs(y, s1, v, wpar0, wperp0, wpar1, wperp1, sig1, sig2, mu, rho_max)
        y2 = y + 0.5 * dt * k1
        s2 = _conc(field_code, field_params, y2[0], y2[1], y2[2]) + nz
        k2 = _rhs(y2, s2, v, wpar0, wperp0, wpar1, wperp1, sig1, sig2, mu, rho_max)
        y3 = y + 0.5 * dt * k2
        s3 = _conc(field_code, field_params, y3[0], y3[1], y3[2]) + nz
        k3 = _rhs(y3, s3, v, wpar0, wperp0, wpar1, wperp1, sig1, sig2, mu, rho_max)
        y4 = y + dt * k3
        s4 = _conc(field_code, field_params, y4[0], y4[1], y4[2]) + nz
        k4 = _rhs(y4, s4, v, wpar0, wperp0, wpar1, wperp1, sig1, sig2, mu, rho_max)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if y[14] > rho_max:
            y[14] = rho_max
        if (k + 1) % renorm_stride == 0:
            _repair_rotation(y, 3)
        if (k + 1) % record_stride == 0:
            ok = True
            for i in range(15):
                if not np.isfinite(y[i]):
                    ok = False
            if not ok:
                return STATUS_NONFINITE, rows, k + 1
            out_t[rows] = (k + 1) * dt
            out_state[rows] = y
            out_stim[rows] = _conc(field_code, field_params, y[0], y[1], y[2]) + noise[k + 1]
            rows += 1
    return STATUS_OK, rows, nsteps


@njit(cache=True, nogil=True)
def _eta_of_t(t, amp, freq, phase):
    e = 0.0
    for i in range(amp.shape[0]):
        e += amp[i] * np.sin(freq[i] * t + phase[i])
    return e


@njit(cache=True, nogil=True)
def _rhs_forced(y, eta, v, wpar0, wperp0, wpar1, wperp1):
    wpar = wpar0 + wpar1 * eta
    wperp = wperp0 + wperp1 * eta
    d = np.empty(12)
    d[0] = v * y[3]
    d[1] = v * y[6]
    d[2] = v * y[9]
    d[3] = y[4] * wperp
    d[4] = -y[3] * wperp + y[5] * wpar
    d[5] = -y[4] * wpar
    d[6] = y[7] * wperp
    d[7] = -y[6] * wperp + y[8] * wpar
    d[8] = -y[7] * wpar
    d[9] = y[10] * wperp
    d[10] = -y[9] * wperp + y[11] * wpar
    d[11] = -y[10] * wpar
    return d


@njit(cache=True, nogil=True)
def integrate_direct_forced(y0, nsteps, dt, record_stride,
                            v, wpar0, wperp0, wpar1, wperp1,
                            amp, freq, phase, out_t, out_state):
    """Raw pose kinematics under the prescribed feedback signal."""
    y = y0.copy()
    out_t[0] = 0.0
    out_state[0] = y
    rows = 1
    for k in range(nsteps):
        t = k * dt
        k1 = _rhs_forced(y, _eta_of_t(t, amp, freq, phase),
                         v, wpar0, wperp0, wpar1, wperp1)
        e_mid = _eta_of_t(t + 0.5 * dt, amp, freq, phase)
        k2 = _rhs_forced(y + 0.5 * dt * k1, e_mid, v, wpar0, wperp0, wpar1, wperp1)
        k3 = _rhs_forced(y + 0.5 * dt * k2, e_mid, v, wpar0, wperp0, wpar1, wperp1)
        k4 = _rhs_forced(y + dt * k3, _eta_of_t(t + dt, amp, freq, phase),
                         v, wpar0, wperp0, wpar1, wperp1)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (k + 1) % record_stride == 0:
            out_t[rows] = (k + 1) * dt
            out_state[rows] = y
            rows += 1
    return rows


@njit(cache=True, nogil=True)
def _rhs_averaged(y, t, eta, sign_flip,
                  v, w, nx, ny, nz, vbx, vby, vbz,
                  vpx, vpy, vpz, cx, cy, cz, g1x, g1y, g1z):
    """Averaged-frame dynamics at prescribed feedback eta.

    n = spin axis, vb = mean drift, (vp, c) = wobble circle basis,
    g1 = feedback gain vector. sign_flip = +-1 multiplies the velocity
    coefficient (the -1 branch exists so tests can show it breaks the
    reconstruction).
    """
    s = (w * t) % (2.0 * np.pi)
    sn, cs = np.sin(s), np.cos(s)
    # wobble(s) = sin(s) vp - cos(s) c
    dx = sn * vpx - cs * cx
    dy = sn * vpy - cs * cy
    dz = sn * vpz - cs * cz
    # gain_rot(s) = exp(s hat(n)) g1  (Rodrigues about unit axis n)
    ncg = nx * g1x + ny * g1y + nz * g1z
    crx = ny * g1z - nz * g1y
    cry = nz * g1x - nx * g1z
    crz = nx * g1y - ny * g1x
    gx = cs * g1x + sn * crx + (1.0 - cs) * ncg * nx
    gy = cs * g1y + sn * cry + (1.0 - cs) * ncg * ny
    gz = cs * g1z + sn * crz + (1.0 - cs) * ncg * nz
    # gain_vel = wobble x gain_rot
    vex = (dy * gz - dz * gy) * sign_flip
    vey = (dz * gx - dx * gz) * sign_flip
    vez = (dx * gy - dy * gx) * sign_flip
    # body-frame velocity of p_bar
    ue = eta / w
    bx = vbx + ue * vex
    by = vby + ue * vey
    bz = vbz + ue * vez
    d = np.empty(12)
    d[0] = y[3] * bx + y[4] * by + y[5] * bz
    d[1] = y[6] * bx + y[7] * by + y[8] * bz
    d[2] = y[9] * bx + y[10] * by + y[11] * bz
    # dRbar = Rbar @ hat(gain_rot) * eta
    d[3] = (y[4] * gz - y[5] * gy) * eta
    d[4] = (-y[3] * gz + y[5] * gx) * eta
    d[5] = (y[3] * gy - y[4] * gx) * eta
    d[6] = (y[7] * gz - y[8] * gy) * eta
    d[7] = (-y[6] * gz + y[8] * gx) * eta
    d[8] = (y[6] * gy - y[7] * gx) * eta
    d[9] = (y[10] * gz - y[11] * gy) * eta
    d[10] = (-y[9] * gz + y[11] * gx) * eta
    d[11] = (y[9] * gy - y[10] * gx) * eta
    return d


@njit(cache=True, nogil=True)
def integrate_averaged_forced(y0, nsteps, dt, record_stride, sign_flip,
                              v, wpar0, wperp0, wpar1, wperp1,
                              amp, freq, phase, out_t, out_state):
    """Averaged-frame kinematics under the prescribed feedback signal."""
    w = np.sqrt(wpar0 * wpar0 + wperp0 * wperp0)
    nx, ny, nz = wpar0 / w, 0.0, wperp0 / w
    # V = (v, 0, 0); drift = (n.V) n; vp = V - drift; c = n x vp
    ndotv = nx * v
    vbx, vby, vbz = ndotv * nx, ndotv * ny, ndotv * nz
    vpx, vpy, vpz = v - vbx, -vby, -vbz
    cx = ny * vpz - nz * vpy
    cy = nz * vpx - nx * vpz
    cz = nx * vpy - ny * vpx
    g1x, g1y, g1z = wpar1, 0.0, wperp1

    y = y0.copy()
    out_t[0] = 0.0
    out_state[0] = y
    rows = 1
    for k in range(nsteps):
        t = k * dt
        e1 = _eta_of_t(t, amp, freq, phase)
        e_mid = _eta_of_t(t + 0.5 * dt, amp, freq, phase)
        e4 = _eta_of_t(t + dt, amp, freq, phase)
        k1 = _rhs_averaged(y, t, e1, sign_flip, v, w, nx, ny, nz,
                           vbx, vby, vbz, vpx, vpy, vpz, cx, cy, cz, g1x, g1y, g1z)
        k2 = _rhs_averaged(y + 0.5 * dt * k1, t + 0.5 * dt, e_mid, sign_flip,
                           v, w, nx, ny, nz, vbx, vby, vbz, vpx, vpy, vpz,
                           cx, cy, cz, g1x, g1y, g1z)
        k3 = _rhs_averaged(y + 0.5 * dt * k2, t + 0.5 * dt, e_mid, sign_flip,
                           v, w, nx, ny, nz, vbx, vby, vbz, vpx, vpy, vpz,
                           cx, cy, cz, g1x, g1y, g1z)
        k4 = _rhs_averaged(y + dt * k3, t + dt, e4, sign_flip,
                           v, w, nx, ny, nz, vbx, vby, vbz, vpx, vpy, vpz,
                           cx, cy, cz, g1x, g1y, g1z)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (k + 1) % record_stride == 0:
            out_t[rows] = (k + 1) * dt
            out_state[rows] = y
            rows += 1
    return rows
