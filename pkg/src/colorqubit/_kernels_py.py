"""Pure-numpy fallback for the compiled kernels in ``_kernels.pyx``."""
import numpy as np

IMPLEMENTATION = "numpy"
# pump-2 weights below exp(-40) (relative 4e-18) are dropped in the MF sum
PUMP2_CUTOFF = 40.0


def _slab_residual(n, k0, nf, ns, nc, d, ps, pc):
    kap = k0 * np.sqrt(nf * nf - n * n)
    gs = k0 * np.sqrt(n * n - ns * ns)
    gc = k0 * np.sqrt(n * n - nc * nc)
    return kap * d - np.arctan(ps * gs / kap) - np.arctan(pc * gc / kap)


def slab_fundamental_index(k0, nf, ns, nc, d, tm):
    """Fundamental-mode index of asymmetric slabs; NaN where cut off."""
    k0, nf, ns, nc, d = (np.ascontiguousarray(a, dtype=np.float64) for a in (k0, nf, ns, nc, d))
    lo = np.maximum(ns, nc)
    hi = nf.copy()
    if tm:
        ps, pc = (nf / ns) ** 2, (nf / nc) ** 2
    else:
        ps = pc = np.ones_like(nf)
    with np.errstate(invalid="ignore", divide="ignore"):
        ok = hi > lo
        ok[ok] = _slab_residual(lo[ok], k0[ok], nf[ok], ns[ok], nc[ok], d[ok], ps[ok], pc[ok]) > 0.0
        lo, hi = lo[ok], hi[ok]
        args = (k0[ok], nf[ok], ns[ok], nc[ok], d[ok], ps[ok], pc[ok])
        active = np.ones(lo.shape, dtype=bool)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            active &= (mid > lo) & (mid < hi)
            if not active.any():
                break
            f = _slab_residual(mid, *args)
            up = active & (f > 0.0)
            down = active & ~(f > 0.0)
            lo = np.where(up, mid, lo)
            hi = np.where(down, mid, hi)
    out = np.full(k0.shape, np.nan)
    out[ok] = 0.5 * (lo + hi)
    return out


def hermite(x, t0, dt, y, dy):
    """Cubic Hermite interpolation on the uniform grid ``t0 + dt * i``."""
    n = y.shape[0]
    u = (x - t0) / dt
    i = np.clip(np.floor(u).astype(np.intp), 0, n - 2)
    s = u - i
    s1 = 1.0 - s
    return ((1.0 + 2.0 * s) * s1 * s1 * y[i] + s * s1 * s1 * dt * dy[i]
            + s * s * (3.0 - 2.0 * s) * y[i + 1] + s * s * (s - 1.0) * dt * dy[i + 1])


def mf_accumulate(omega1_nodes, node_weights, k1_nodes, omega_s, k_s, omega_r, k_r,
                  omega2_center, sigma2, length, table_origin, table_step, table_k,
                  table_dk, num_threads=1):
    """Quadrature sum of the DFG mapping-function integrand on an (s, r) grid."""
    ds = omega_s[:, None] - omega_r[None, :]
    kd = k_s[:, None] - k_r[None, :]
    inv2s2 = 0.5 / (sigma2 * sigma2)
    re = np.zeros(ds.shape)
    im = np.zeros(ds.shape)
    for o1, w, k1 in zip(omega1_nodes, node_weights, k1_nodes):
        o2 = o1 + ds
        arg = (o2 - omega2_center) * (o2 - omega2_center) * inv2s2
        live = arg <= PUMP2_CUTOFF
        if not live.any():
            continue
        a2 = np.exp(-arg[live])
        x = (k1 - hermite(o2[live], table_origin, table_step, table_k, table_dk) + kd[live]) * (0.5 * length)
        sx = np.sin(x)
        cx = np.cos(x)
        small = np.abs(x) < 1e-8
        snc = np.where(small, 1.0 - x * x / 6.0, sx / np.where(small, 1.0, x))
        re[live] += w * a2 * snc * cx
        im[live] += w * a2 * snc * sx
    return re + 1j * im
