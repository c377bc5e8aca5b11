"""Per-collision kernels operating on the factorized window state.

Between collisions the joint state is a product ``rho_s (x) rho_env``, so a
collision only ever needs the 2x2 system factor and the environment-window
factor. Each kernel has a numpy implementation and a numba one with the same
signature; :mod:`collision_nm.backend` picks one.
"""

import numpy as np


def _env_first_marginal(rho_env):
    h = rho_env.shape[0] // 2
    r = rho_env.reshape(2, h, 2, h)
    return np.einsum("axbx->ab", r)


def _se_superop(u4, rho_s):
    """K[e1, f, e2, g] such that Tr_S[U (rho_s x X) U^dag] = sum K * X blocks."""
    a = u4.reshape(2, 2, 2, 2)  # out_s, out_e, in_s, in_e
    return np.einsum("aebf,bc,agch->efgh", a, rho_s, a.conj())


def collide_factors_np(rho_s, rho_env, u4, uee):
    """One collision from a product state.

    Returns the S-E0 state right after the exchange, the new system factor and
    the environment factor after the environment coupling, both renormalized.
    """
    r_e0 = _env_first_marginal(rho_env)
    rho_se = u4 @ np.kron(rho_s, r_e0) @ u4.conj().T
    rho_se = 0.5 * (rho_se + rho_se.conj().T)
    rs = np.einsum("aebe->ab", rho_se.reshape(2, 2, 2, 2))
    rs = rs / np.trace(rs).real

    h = rho_env.shape[0] // 2
    k = _se_superop(u4, rho_s)
    env = np.einsum("efgh,fxhy->exgy", k, rho_env.reshape(2, h, 2, h)).reshape(2 * h, 2 * h)
    env = uee @ env @ uee.conj().T
    env = 0.5 * (env + env.conj().T)
    env = env / np.trace(env).real
    return rho_se, rs, env


def shift_window_np(rho_env, fresh):
    """Trace out the leading environment qubit and append ``fresh`` at the far end."""
    h = rho_env.shape[0] // 2
    reduced = rho_env[:h, :h] + rho_env[h:, h:]
    return np.kron(reduced, fresh)


def qubit_trace_distance_np(a, b):
    d = a - b
    p = 0.5 * (d[0, 0] - d[1, 1]).real
    t = 0.5 * (d[0, 0] + d[1, 1]).real
    r = np.sqrt(p * p + abs(d[0, 1]) ** 2)
    return 0.5 * (abs(t + r) + abs(t - r))


def _build_numba():
    from numba import njit

    @njit(cache=True)
    def collide_factors(rho_s, rho_env, u4, uee):
        n = rho_env.shape[0]
        h = n // 2
        r_e0 = np.zeros((2, 2), dtype=np.complex128)
        for a in range(2):
            for b in range(2):
                s = 0j
                for x in range(h):
                    s += rho_env[a * h + x, b * h + x]
                r_e0[a, b] = s
        rho_se = u4 @ np.kron(rho_s, r_e0) @ u4.conj().T
        rho_se = 0.5 * (rho_se + rho_se.conj().T)
        rs = np.zeros((2, 2), dtype=np.complex128)
        for a in range(2):
            for b in range(2):
                rs[a, b] = rho_se[2 * a, 2 * b] + rho_se[2 * a + 1, 2 * b + 1]
        tr = (rs[0, 0] + rs[1, 1]).real
        rs = rs / tr

        kk = np.zeros((2, 2, 2, 2), dtype=np.complex128)
        for e1 in range(2):
            for f in range(2):
                for e2 in range(2):
                    for g in range(2):
                        s = 0j
                        for a in range(2):
                            for b in range(2):
                                ub = u4[2 * a + e1, 2 * b + f] * rho_s[b, 0]
                                ub2 = u4[2 * a + e1, 2 * b + f] * rho_s[b, 1]
                                s += ub * np.conj(u4[2 * a + e2, g])
                                s += ub2 * np.conj(u4[2 * a + e2, 2 + g])
                        kk[e1, f, e2, g] = s
        env = np.zeros((n, n), dtype=np.complex128)
        for e1 in range(2):
            for f in range(2):
                for e2 in range(2):
                    for g in range(2):
                        c = kk[e1, f, e2, g]
                        if c == 0:
                            continue
                        for x in range(h):
                            for y in range(h):
                                env[e1 * h + x, e2 * h + y] += c * rho_env[f * h + x, g * h + y]
        env = uee @ env @ uee.conj().T
        env = 0.5 * (env + env.conj().T)
        tr = 0.0
        for i in range(n):
            tr += env[i, i].real
        env = env / tr
        return rho_se, rs, env

    @njit(cache=True)
    def shift_window(rho_env, fresh):
        h = rho_env.shape[0] // 2
        out = np.zeros_like(rho_env)
        for x in range(h):
            for y in range(h):
                v = rho_env[x, y] + rho_env[h + x, h + y]
                for p in range(2):
                    for q in range(2):
                        out[2 * x + p, 2 * y + q] = v * fresh[p, q]
        return out

    @njit(cache=True)
    def qubit_trace_distance(a, b):
        d00 = a[0, 0] - b[0, 0]
        d11 = a[1, 1] - b[1, 1]
        d01 = a[0, 1] - b[0, 1]
        p = 0.5 * (d00 - d11).real
        t = 0.5 * (d00 + d11).real
        r = np.sqrt(p * p + abs(d01) ** 2)
        return 0.5 * (abs(t + r) + abs(t - r))

    @njit(cache=True)
    def distance_series(rs1, re1, rs2, re2, u4, uee, fresh, collisions):
        out = np.empty(collisions + 1)
        out[0] = qubit_trace_distance(rs1, rs2)
        for k in range(1, collisions + 1):
            _, rs1, re1 = collide_factors(rs1, re1, u4, uee)
            _, rs2, re2 = collide_factors(rs2, re2, u4, uee)
            re1 = shift_window(re1, fresh)
            re2 = shift_window(re2, fresh)
            out[k] = qubit_trace_distance(rs1, rs2)
        return out

    return collide_factors, shift_window, qubit_trace_distance, distance_series


def distance_series_np(rs1, re1, rs2, re2, u4, uee, fresh, collisions):
    """Trace distance between the two system trajectories after each collision."""
    out = np.empty(collisions + 1)
    out[0] = qubit_trace_distance_np(rs1, rs2)
    for k in range(1, collisions + 1):
        _, rs1, re1 = collide_factors_np(rs1, re1, u4, uee)
        _, rs2, re2 = collide_factors_np(rs2, re2, u4, uee)
        re1 = shift_window_np(re1, fresh)
        re2 = shift_window_np(re2, fresh)
        out[k] = qubit_trace_distance_np(rs1, rs2)
    return out
