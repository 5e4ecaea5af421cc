"""Compiled inner loops for the sine activations.

The modulated-sine forward needs sin(u) now and cos(u) in the backward
pass; computing both in one fused pass and keeping per-row sums inside the
kernel removes the dominant temporaries. Rows are independent, so the
parallel split cannot change results. Falls back to plain numpy when numba
is unavailable.
"""

from __future__ import annotations

import math
import os

import numpy as np

os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")
# Idle kernel workers must sleep, not spin: they would otherwise contend
# with the BLAS thread between kernel launches.
os.environ.setdefault("OMP_WAIT_POLICY", "PASSIVE")

try:
    from numba import njit, prange
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap

    prange = range


@njit(parallel=True, cache=True)
def _sincos(x, s, c):
    n, d = x.shape
    for i in prange(n):
        for j in range(d):
            s[i, j] = math.sin(x[i, j])
            c[i, j] = math.cos(x[i, j])


@njit(parallel=True, cache=True)
def _msin_fwd(z, fw, ph, amp, sh, out, s, c):
    n, d = z.shape
    for i in prange(n):
        for j in range(d):
            u = fw[i] * z[i, j] + ph[i]
            sv = math.sin(u)
            cv = math.cos(u)
            s[i, j] = sv
            c[i, j] = cv
            out[i, j] = amp[i] * sv + sh[i]


@njit(parallel=True, cache=True)
def _msin_bwd(g, s, c, amp, fw, z, omega0, gz, gamp, gfreq, gph, gsh):
    n, d = g.shape
    for i in prange(n):
        sa = 0.0
        sf = 0.0
        sp = 0.0
        ss = 0.0
        a = amp[i]
        f = fw[i]
        for j in range(d):
            gij = g[i, j]
            gac = gij * a * c[i, j]
            gz[i, j] = gac * f
            sa += gij * s[i, j]
            sf += gac * z[i, j]
            sp += gac
            ss += gij
        gamp[i] = sa
        gfreq[i] = sf * omega0
        gph[i] = sp
        gsh[i] = ss


def sincos(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """sin(x) and cos(x) in one pass."""
    if not HAVE_NUMBA:
        return np.sin(x), np.cos(x)
    s = np.empty_like(x)
    c = np.empty_like(x)
    _sincos(np.ascontiguousarray(x), s, c)
    return s, c


def modulated_sin_forward(z, fw, ph, amp, sh):
    """out = amp*sin(fw*z + ph) + sh plus the saved (sin, cos) pair."""
    if not HAVE_NUMBA:
        u = fw[:, None] * z + ph[:, None]
        s = np.sin(u)
        c = np.cos(u)
        return amp[:, None] * s + sh[:, None], s, c
    out = np.empty_like(z)
    s = np.empty_like(z)
    c = np.empty_like(z)
    _msin_fwd(z, fw, ph, amp, sh, out, s, c)
    return out, s, c


def modulated_sin_backward(g, s, c, amp, fw, z, omega0):
    """Adjoints of the modulated sine: (gz, gamp, gfreq, gph, gsh)."""
    if not HAVE_NUMBA:
        ac = amp[:, None] * c
        gac = g * ac
        return (
            gac * fw[:, None],
            np.einsum("ij,ij->i", g, s),
            np.einsum("ij,ij->i", gac, z) * omega0,
            gac.sum(axis=1),
            g.sum(axis=1),
        )
    g = np.ascontiguousarray(g)
    gz = np.empty_like(g)
    n = g.shape[0]
    gamp = np.empty(n)
    gfreq = np.empty(n)
    gph = np.empty(n)
    gsh = np.empty(n)
    _msin_bwd(g, s, c, amp, fw, z, omega0, gz, gamp, gfreq, gph, gsh)
    return gz, gamp, gfreq, gph, gsh
