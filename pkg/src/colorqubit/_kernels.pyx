# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; results agree with ``_kernels_py`` to rounding.

The slab root is found by safeguarded Newton in the transverse wavenumber
rather than by bisection, so the two agree to a few ulp, not bit for bit.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, atan, sin, cos, exp, floor, fabs, NAN, INFINITY

cnp.import_array()

IMPLEMENTATION = "cython"
# pump-2 weights below exp(-40) are dropped; must equal _kernels_py.PUMP2_CUTOFF
cdef double PUMP2_CUTOFF = 40.0


cdef inline double _slab_residual(double n, double k0, double nf, double ns,
                                  double nc, double d, double ps, double pc) noexcept nogil:
    cdef double kap = k0 * sqrt(nf * nf - n * n)
    cdef double gs = k0 * sqrt(n * n - ns * ns)
    cdef double gc = k0 * sqrt(n * n - nc * nc)
    return kap * d - atan(ps * gs / kap) - atan(pc * gc / kap)


cdef inline double _kappa_residual(double kap, double d, double vs2, double vc2, double ps, double pc,
                                   double *slope) noexcept nogil:
    """Slab residual in the transverse wavenumber; increasing in ``kap``."""
    cdef double gs = sqrt(vs2 - kap * kap) if vs2 > kap * kap else 0.0
    cdef double gc = sqrt(vc2 - kap * kap) if vc2 > kap * kap else 0.0
    cdef double s = d
    if gs > 0.0:
        s += ps * vs2 / (gs * (kap * kap + ps * ps * gs * gs))
    else:
        s = INFINITY
    if gc > 0.0:
        s += pc * vc2 / (gc * (kap * kap + pc * pc * gc * gc))
    else:
        s = INFINITY
    slope[0] = s
    return kap * d - atan(ps * gs / kap) - atan(pc * gc / kap)


def slab_fundamental_index(double[::1] k0, double[::1] nf, double[::1] ns,
                           double[::1] nc, double[::1] d, bint tm):
    """Fundamental-mode index of asymmetric slabs; NaN where cut off."""
    cdef Py_ssize_t m = k0.shape[0], i
    cdef int it
    cdef double lo, hi, x, xn, ps, pc, f, fp, vs2, vc2, klo, khi
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            lo = ns[i] if ns[i] > nc[i] else nc[i]
            hi = nf[i]
            if hi <= lo:
                o[i] = NAN
                continue
            if tm:
                ps = (nf[i] / ns[i]) * (nf[i] / ns[i])
                pc = (nf[i] / nc[i]) * (nf[i] / nc[i])
            else:
                ps = 1.0
                pc = 1.0
            if _slab_residual(lo, k0[i], nf[i], ns[i], nc[i], d[i], ps, pc) <= 0.0:
                o[i] = NAN
                continue
            # safeguarded Newton in the transverse wavenumber, where the residual is smooth
            vs2 = k0[i] * k0[i] * (nf[i] * nf[i] - ns[i] * ns[i])
            vc2 = k0[i] * k0[i] * (nf[i] * nf[i] - nc[i] * nc[i])
            klo = 0.0
            khi = sqrt(vs2 if vs2 < vc2 else vc2)
            x = 0.5 * khi
            for it in range(100):
                f = _kappa_residual(x, d[i], vs2, vc2, ps, pc, &fp)
                if f < 0.0:
                    klo = x
                elif f > 0.0:
                    khi = x
                else:
                    break
                xn = x - f / fp
                if not (klo < xn < khi):
                    xn = 0.5 * (klo + khi)
                if fabs(xn - x) <= 4e-16 * x or khi - klo <= 4e-16 * khi:
                    x = xn
                    break
                x = xn
            o[i] = sqrt(nf[i] * nf[i] - (x / k0[i]) * (x / k0[i]))
    return out


cdef inline double _hermite(double x, double t0, double dt, const double[::1] y,
                            const double[::1] dy, Py_ssize_t n) noexcept nogil:
    cdef double u = (x - t0) / dt
    cdef Py_ssize_t i = <Py_ssize_t> floor(u)
    if i < 0:
        i = 0
    elif i > n - 2:
        i = n - 2
    cdef double s = u - i
    cdef double s1 = 1.0 - s
    return ((1.0 + 2.0 * s) * s1 * s1 * y[i] + s * s1 * s1 * dt * dy[i]
            + s * s * (3.0 - 2.0 * s) * y[i + 1] + s * s * (s - 1.0) * dt * dy[i + 1])


def mf_accumulate(double[::1] omega1_nodes, double[::1] node_weights, double[::1] k1_nodes,
                  double[::1] omega_s, double[::1] k_s, double[::1] omega_r, double[::1] k_r,
                  double omega2_center, double sigma2, double length,
                  double table_origin, double table_step, const double[::1] table_k,
                  const double[::1] table_dk, int num_threads=1):
    """Quadrature sum of the DFG mapping-function integrand on an (s, r) grid."""
    cdef Py_ssize_t ns_ = omega_s.shape[0], nr = omega_r.shape[0], nn = omega1_nodes.shape[0]
    cdef Py_ssize_t nt = table_k.shape[0]
    cdef Py_ssize_t i, j, q
    cdef double o2, a2, arg, x, sx, cx, snc, re, im, inv2s2 = 0.5 / (sigma2 * sigma2)
    cdef double half_l = 0.5 * length
    out_re = np.zeros((ns_, nr), dtype=np.float64)
    out_im = np.zeros((ns_, nr), dtype=np.float64)
    cdef double[:, ::1] gr = out_re
    cdef double[:, ::1] gi = out_im
    for i in prange(ns_, nogil=True, num_threads=num_threads, schedule="static"):
        for j in range(nr):
            re = 0.0
            im = 0.0
            for q in range(nn):
                o2 = omega1_nodes[q] + (omega_s[i] - omega_r[j])
                arg = (o2 - omega2_center) * (o2 - omega2_center) * inv2s2
                if arg > PUMP2_CUTOFF:
                    continue
                a2 = exp(-arg)
                x = (k1_nodes[q] - _hermite(o2, table_origin, table_step, table_k, table_dk, nt)
                     + (k_s[i] - k_r[j])) * half_l
                sx = sin(x)
                cx = cos(x)
                if fabs(x) < 1e-8:
                    snc = 1.0 - x * x / 6.0
                else:
                    snc = sx / x
                re = re + node_weights[q] * a2 * snc * cx
                im = im + node_weights[q] * a2 * snc * sx
            gr[i, j] = re
            gi[i, j] = im
    return out_re + 1j * out_im
