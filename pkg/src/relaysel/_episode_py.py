"""Pure-Python packet-episode kernel.

Mirrors ``_episode.pyx`` statement for statement so both backends produce
bit-identical records from the same uniform block.  Layout of one trial's
uniforms, per slot ``j`` with stride ``3 + 2*kr + K*kr``::

    [0]                       source -> destination fading
    [1, 1+kr)                 relay -> destination fading
    [1+kr, 1+2kr)             transmitter -> relay fading (relay decoding)
    [1+2kr, 1+2kr+K*kr)       minislot transmit decisions, minislot-major
    [1+2kr+K*kr]              winner pick
    [2+2kr+K*kr]              ID-CSI-1 flag-group pick
"""

from __future__ import annotations

from math import log1p

PLAN_MODES = 0
PLAN_RCPC = 1
DECODE_CHASE = 0
DECODE_APPROX = 1

S_ID, S_CSI, S_BEST, S_NEAREST, S_SOURCE = range(5)


def slot_stride(kr: int, minislots: int) -> int:
    return 3 + 2 * kr + minislots * kr


def _select(strategy, kr, K, decoded, rd, row, cbase, p, eta, beta, q, slot_weighted, dist):
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

    win_id = []
    win_flag = []
    for b in range(K):
        cnt = 0
        who = -1
        off = cbase + b * kr
        for a in range(kr):
            if decoded[a] and rd[a] > eta and row[off + a] < p[a]:
                cnt += 1
                who = a
        if cnt == 1:
            win_id.append(who)
            win_flag.append(1 if (strategy == S_CSI and rd[who] > beta) else 0)
    nwin = len(win_id)
    if nwin == 0:
        return -1
    u_sel = row[cbase + K * kr]
    u_bias = row[cbase + K * kr + 1]
    group = -1
    if strategy == S_CSI:
        n1 = sum(win_flag)
        if 0 < n1 < nwin:
            group = 1 if u_bias < q else 0
    if slot_weighted:
        pool = [win_id[i] for i in range(nwin) if group < 0 or win_flag[i] == group]
    else:
        seen = [0] * kr
        for i in range(nwin):
            if group < 0 or win_flag[i] == group:
                seen[win_id[i]] = 1
        pool = [a for a in range(kr) if seen[a]]
    return pool[int(u_sel * len(pool))]


def run_batch(
    U,
    out_success,
    out_slots,
    out_bits,
    out_rate,
    out_tx,
    out_mode,
    out_snr,
    out_metric,
    out_gthr,
    plan,
    mode_thr,
    mode_bits,
    switch_thr,
    stage_thr,
    stage_bits,
    phi,
    f_k,
    slot_limit,
    decoding,
    overhear,
    strategy,
    minislots,
    p,
    eta,
    beta,
    q,
    slot_weighted,
    mean_sd,
    mean_sr,
    mean_rd,
    mean_rr,
    dist,
):
    kr = len(mean_sr)
    K = minislots
    S = slot_stride(kr, K)
    mode_thr = list(mode_thr)
    mode_bits = list(mode_bits)
    switch_thr = list(switch_thr)
    stage_thr = list(stage_thr)
    stage_bits = list(stage_bits)
    p = list(p)
    mean_sr = list(mean_sr)
    mean_rd = list(mean_rd)
    mean_rr = list(mean_rr)
    dist = list(dist)
    n_switch = len(switch_thr)

    for t in range(U.shape[0]):
        row = U[t].tolist()
        decoded = [0] * kr
        r_comb = [0.0] * kr
        r_modes = [0] * kr
        r_num = [0.0] * kr
        r_den = [0.0] * kr
        rd = [0.0] * kr
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
                snr = -mean_sd * log1p(-row[base])
            else:
                for a in range(kr):
                    rd[a] = -mean_rd[a] * log1p(-row[base + 1 + a])
                tx = _select(strategy, kr, K, decoded, rd, row, base + 1 + 2 * kr,
                             p, eta, beta, q, slot_weighted, dist)
                if tx < 0:
                    snr = -mean_sd * log1p(-row[base])
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
                            gthr = mode_thr[modes.bit_length() - 1]
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
                        x = -mean_sr[a] * log1p(-row[xoff + a])
                    else:
                        x = -mean_rr[tx * kr + a] * log1p(-row[xoff + a])
                    if x >= phi:
                        r_comb[a] += x
                        r_modes[a] |= 1 << mode
                        r_num[a] += x * bits
                        r_den[a] += bits
                    if plan == PLAN_MODES:
                        m_a = r_modes[a]
                        if m_a != 0:
                            if m_a & (m_a - 1) == 0:
                                th = mode_thr[m_a.bit_length() - 1]
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
