# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled packet-episode kernel; see ``_episode_py`` for the uniform layout."""

from libc.math cimport log1p
from libc.stdlib cimport malloc, free

cdef enum:
    PLAN_MODES = 0
    DECODE_APPROX = 1

cdef enum:
    S_ID = 0
    S_CSI = 1
    S_BEST = 2
    S_NEAREST = 3
    S_SOURCE = 4


cdef inline int _single_bit(int m) nogil:
    cdef int i = 0
    while m > 1:
        m >>= 1
        i += 1
    return i


cdef int _select(int strategy, int kr, int K, int* decoded, double* rd,
                 const double[::1] row, Py_ssize_t cbase, const double[::1] p,
                 double eta, double beta, double q, int slot_weighted,
                 const double[::1] dist, int* win_id, int* win_flag, int* seen) noexcept nogil:
    cdef int a, b, cnt, who, nwin, n1, group, npool, idx, i, best
    cdef double bestg, bestd, u_sel, u_bias
    cdef Py_ssize_t off
    if strategy == S_SOURCE:
        return -1
    if strategy == S_BEST:
        best = -1
        bestg = -1.0
        for a in range(kr):
            if decoded[a] and rd[a] > bestg:
                best = a
                bestg = rd[a]
        return best
    if strategy == S_NEAREST:
        best = -1
        bestd = 0.0
        for a in range(kr):
            if decoded[a] and (best < 0 or dist[a] < bestd):
                best = a
                bestd = dist[a]
        return best

    nwin = 0
    for b in range(K):
        cnt = 0
        who = -1
        off = cbase + b * kr
        for a in range(kr):
            if decoded[a] and rd[a] > eta and row[off + a] < p[a]:
                cnt += 1
                who = a
        if cnt == 1:
            win_id[nwin] = who
            win_flag[nwin] = 1 if (strategy == S_CSI and rd[who] > beta) else 0
            nwin += 1
    if nwin == 0:
        return -1
    u_sel = row[cbase + K * kr]
    u_bias = row[cbase + K * kr + 1]
    group = -1
    if strategy == S_CSI:
        n1 = 0
        for i in range(nwin):
            n1 += win_flag[i]
        if 0 < n1 < nwin:
            group = 1 if u_bias < q else 0
    npool = 0
    if slot_weighted:
        for i in range(nwin):
            if group < 0 or win_flag[i] == group:
                npool += 1
        idx = <int>(u_sel * npool)
        for i in range(nwin):
            if group < 0 or win_flag[i] == group:
                if idx == 0:
                    return win_id[i]
                idx -= 1
        return -1
    for a in range(kr):
        seen[a] = 0
    for i in range(nwin):
        if group < 0 or win_flag[i] == group:
            seen[win_id[i]] = 1
    for a in range(kr):
        npool += seen[a]
    idx = <int>(u_sel * npool)
    for a in range(kr):
        if seen[a]:
            if idx == 0:
                return a
            idx -= 1
    return -1


def run_batch(const double[:, ::1] U,
              signed char[::1] out_success,
              signed char[::1] out_slots,
              double[::1] out_bits,
              double[::1] out_rate,
              int[:, ::1] out_tx,
              signed char[:, ::1] out_mode,
              double[:, ::1] out_snr,
              double[::1] out_metric,
              double[::1] out_gthr,
              int plan,
              const double[::1] mode_thr,
              const double[::1] mode_bits,
              const double[::1] switch_thr,
              const double[::1] stage_thr,
              const double[::1] stage_bits,
              double phi,
              double f_k,
              int slot_limit,
              int decoding,
              int overhear,
              int strategy,
              int minislots,
              const double[::1] p,
              double eta,
              double beta,
              double q,
              int slot_weighted,
              double mean_sd,
              const double[::1] mean_sr,
              const double[::1] mean_rd,
              const double[::1] mean_rr,
              const double[::1] dist):
    cdef int kr = mean_sr.shape[0]
    cdef int K = minislots
    cdef Py_ssize_t S = 3 + 2 * kr + K * kr
    cdef Py_ssize_t ntrials = U.shape[0]
    cdef int n_switch = switch_thr.shape[0]
    cdef Py_ssize_t t, base, xoff
    cdef int j, a, i, tx, mode, ok, used, modes, m_a
    cdef double snr, bits, slot_thr, comb, num, den, bits_total, metric, gthr, x, th

    cdef int* decoded = <int*>malloc((kr + 1) * sizeof(int))
    cdef int* r_modes = <int*>malloc((kr + 1) * sizeof(int))
    cdef int* seen = <int*>malloc((kr + 1) * sizeof(int))
    cdef int* win_id = <int*>malloc((K + 1) * sizeof(int))
    cdef int* win_flag = <int*>malloc((K + 1) * sizeof(int))
    cdef double* r_comb = <double*>malloc((kr + 1) * sizeof(double))
    cdef double* r_num = <double*>malloc((kr + 1) * sizeof(double))
    cdef double* r_den = <double*>malloc((kr + 1) * sizeof(double))
    cdef double* rd = <double*>malloc((kr + 1) * sizeof(double))
    if (decoded == NULL or r_modes == NULL or seen == NULL or win_id == NULL or win_flag == NULL
            or r_comb == NULL or r_num == NULL or r_den == NULL or rd == NULL):
        free(decoded); free(r_modes); free(seen); free(win_id); free(win_flag)
        free(r_comb); free(r_num); free(r_den); free(rd)
        raise MemoryError()

    try:
        with nogil:
            for t in range(ntrials):
                for a in range(kr):
                    decoded[a] = 0
                    r_comb[a] = 0.0
                    r_modes[a] = 0
                    r_num[a] = 0.0
                    r_den[a] = 0.0
                    rd[a] = 0.0
                comb = 0.0
                modes = 0
                num = 0.0
                den = 0.0
                bits_total = 0.0
                ok = 0
                metric = 0.0
                gthr = 0.0
                used = slot_limit
                for j in range(slot_limit):
                    base = j * S
                    if j == 0:
                        tx = -1
                        snr = -mean_sd * log1p(-U[t, base])
                    else:
                        for a in range(kr):
                            rd[a] = -mean_rd[a] * log1p(-U[t, base + 1 + a])
                        tx = _select(strategy, kr, K, decoded, rd, U[t], base + 1 + 2 * kr,
                                     p, eta, beta, q, slot_weighted, dist, win_id, win_flag, seen)
                        if tx < 0:
                            snr = -mean_sd * log1p(-U[t, base])
                        else:
                            snr = rd[tx]

                    if plan == PLAN_MODES:
                        mode = 0
                        for i in range(n_switch):
                            if snr >= switch_thr[i]:
                                mode = i + 1
                        bits = mode_bits[mode]
                        slot_thr = mode_thr[mode]
                    else:
                        mode = j
                        bits = stage_bits[j]
                        slot_thr = stage_thr[j]
                    bits_total += bits
                    out_tx[t, j] = tx
                    out_mode[t, j] = mode
                    out_snr[t, j] = snr

                    if decoding == DECODE_APPROX:
                        if j == 0:
                            metric = snr
                            gthr = slot_thr if slot_thr > phi else phi
                        else:
                            metric = snr
                            gthr = phi
                        ok = 1 if metric >= gthr else 0
                    else:
                        if snr >= phi:
                            comb += snr
                            modes |= 1 << mode
                            num += snr * bits
                            den += bits
                        if plan == PLAN_MODES:
                            metric = comb
                            if modes == 0:
                                gthr = mode_thr[0]
                                ok = 0
                            else:
                                if modes & (modes - 1) == 0:
                                    gthr = mode_thr[_single_bit(modes)]
                                else:
                                    gthr = mode_thr[0]
                                ok = 1 if comb >= gthr else 0
                        else:
                            gthr = stage_thr[j]
                            if den > 0.0:
                                metric = num / den
                                ok = 1 if metric >= gthr else 0
                            else:
                                metric = 0.0
                                ok = 0

                    if ok:
                        used = j + 1
                        break

                    if j == 0 or overhear:
                        xoff = base + 1 + kr
                        for a in range(kr):
                            if decoded[a] or a == tx:
                                continue
                            if tx < 0:
                                x = -mean_sr[a] * log1p(-U[t, xoff + a])
                            else:
                                x = -mean_rr[tx * kr + a] * log1p(-U[t, xoff + a])
                            if x >= phi:
                                r_comb[a] += x
                                r_modes[a] |= 1 << mode
                                r_num[a] += x * bits
                                r_den[a] += bits
                            if plan == PLAN_MODES:
                                m_a = r_modes[a]
                                if m_a != 0:
                                    if m_a & (m_a - 1) == 0:
                                        th = mode_thr[_single_bit(m_a)]
                                    else:
                                        th = mode_thr[0]
                                    if r_comb[a] >= th:
                                        decoded[a] = 1
                            else:
                                if r_den[a] > 0.0 and r_num[a] / r_den[a] >= stage_thr[j]:
                                    decoded[a] = 1

                for j in range(used, slot_limit):
                    out_tx[t, j] = -2
                    out_mode[t, j] = -1
                    out_snr[t, j] = 0.0
                out_success[t] = ok
                out_slots[t] = used
                out_bits[t] = bits_total
                out_rate[t] = f_k / bits_total if ok else 0.0
                out_metric[t] = metric
                out_gthr[t] = gthr
    finally:
        free(decoded); free(r_modes); free(seen); free(win_id); free(win_flag)
        free(r_comb); free(r_num); free(r_den); free(rd)
