# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event loop; statement-for-statement twin of ``_kernel_py.run``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def run(Py_ssize_t L, op_dim_in, op_occ_in, op_load_in, op_tail_in, op_key_in, Py_ssize_t ndims,
        Py_ssize_t max_conc, bint scf, enf_ptr_in=None, enf_ops_in=None):
    cdef cnp.int64_t[::1] op_dim = np.ascontiguousarray(op_dim_in, dtype=np.int64)
    cdef double[::1] op_occ = np.ascontiguousarray(op_occ_in, dtype=np.float64)
    cdef double[::1] op_load = np.ascontiguousarray(op_load_in, dtype=np.float64)
    cdef double[::1] op_tail = np.ascontiguousarray(op_tail_in, dtype=np.float64)
    cdef double[::1] op_key = np.ascontiguousarray(op_key_in, dtype=np.float64)
    cdef Py_ssize_t n = op_dim.shape[0]
    cdef Py_ssize_t nch = n // L
    cdef Py_ssize_t cap = nch if nch > 0 else 1
    cdef Py_ssize_t rcap = max_conc if max_conc < cap else cap

    start_arr = np.full(n, -1.0)
    end_arr = np.full(n, -1.0)
    seq_arr = np.full(n, -1, dtype=np.int64)
    cdef double[::1] start = start_arr
    cdef double[::1] end = end_arr
    cdef cnp.int64_t[::1] seq = seq_arr
    cdef double[::1] fin = np.zeros(n)
    cdef double[::1] ready_t = np.zeros(n)
    cdef cnp.uint8_t[::1] is_ready = np.zeros(n, dtype=np.uint8)
    cdef cnp.int64_t[:, ::1] ready = np.zeros((ndims, cap), dtype=np.int64)
    cdef cnp.int64_t[::1] nready = np.zeros(ndims, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] running = np.zeros((ndims, rcap), dtype=np.int64)
    cdef cnp.int64_t[::1] nrun = np.zeros(ndims, dtype=np.int64)
    cdef cnp.int64_t[::1] newly = np.zeros(rcap, dtype=np.int64)
    cdef cnp.int64_t[::1] share_used = np.zeros(ndims, dtype=np.int64)
    cdef cnp.int64_t[::1] tails = np.zeros(cap, dtype=np.int64)
    cdef cnp.int64_t[::1] finished = np.zeros(cap, dtype=np.int64)
    cdef Py_ssize_t ntails = 0, nfin = 0, nkt

    cdef bint enforced = enf_ptr_in is not None
    cdef cnp.int64_t[::1] enf_ptr
    cdef cnp.int64_t[::1] enf_ops
    cdef cnp.int64_t[::1] enf_pos
    if enforced:
        enf_ptr = np.ascontiguousarray(enf_ptr_in, dtype=np.int64)
        enf_ops = np.ascontiguousarray(enf_ops_in, dtype=np.int64)
        enf_pos = np.array(enf_ptr[:ndims], dtype=np.int64)

    cdef Py_ssize_t c, d, j, idx, nnew, count, su, nk, i
    cdef cnp.int64_t op, o, best, nxt
    cdef double t = 0.0, bk, bl, k, old, new, tmin
    cdef Py_ssize_t done = 0, nseq = 0
    cdef int status = 0
    cdef bint active

    for c in range(nch):
        op = c * L
        d = op_dim[op]
        ready[d, nready[d]] = op
        nready[d] += 1
        is_ready[op] = 1

    while True:
        active = ntails > 0
        for d in range(ndims):
            nnew = 0
            while nrun[d] + nnew < max_conc and nready[d] > 0:
                if enforced:
                    if enf_pos[d] >= enf_ptr[d + 1]:
                        break
                    op = enf_ops[enf_pos[d]]
                    if not is_ready[op]:
                        break
                    enf_pos[d] += 1
                    idx = 0
                    for j in range(nready[d]):
                        if ready[d, j] == op:
                            idx = j
                            break
                else:
                    idx = 0
                    best = ready[d, 0]
                    if scf:
                        bk = op_key[best]
                        bl = op_load[best]
                        for j in range(1, nready[d]):
                            o = ready[d, j]
                            k = op_key[o]
                            if k < bk or (k == bk and (op_load[o] < bl or (op_load[o] == bl and o < best))):
                                best = o
                                bk = k
                                bl = op_load[o]
                                idx = j
                    else:
                        bk = ready_t[best]
                        for j in range(1, nready[d]):
                            o = ready[d, j]
                            k = ready_t[o]
                            if k < bk or (k == bk and o < best):
                                best = o
                                bk = k
                                idx = j
                op = ready[d, idx]
                ready[d, idx] = ready[d, nready[d] - 1]
                nready[d] -= 1
                is_ready[op] = 0
                start[op] = t
                seq[op] = nseq
                nseq += 1
                newly[nnew] = op
                nnew += 1
            count = nrun[d] + nnew
            if count != share_used[d] and nrun[d] > 0:
                su = share_used[d]
                for j in range(nrun[d]):
                    op = running[d, j]
                    old = op_occ[op] + op_load[op] * su
                    new = op_occ[op] + op_load[op] * count
                    fin[op] = t + ((fin[op] - t) / old) * new
            for j in range(nnew):
                op = newly[j]
                fin[op] = t + (op_occ[op] + op_load[op] * count)
                running[d, nrun[d]] = op
                nrun[d] += 1
            if count:
                share_used[d] = count
                active = True
        if not active:
            if done < n:
                status = 1
            break

        tmin = -1.0
        for d in range(ndims):
            for j in range(nrun[d]):
                op = running[d, j]
                if tmin < 0.0 or fin[op] < tmin:
                    tmin = fin[op]
        for j in range(ntails):
            op = tails[j]
            if tmin < 0.0 or end[op] < tmin:
                tmin = end[op]
        t = tmin

        nfin = 0
        nkt = 0
        for j in range(ntails):
            op = tails[j]
            if end[op] == t:
                finished[nfin] = op
                nfin += 1
            else:
                tails[nkt] = op
                nkt += 1
        ntails = nkt
        for d in range(ndims):
            nk = 0
            for j in range(nrun[d]):
                op = running[d, j]
                if fin[op] == t:
                    if op_tail[op] > 0.0:
                        end[op] = t + op_tail[op]
                        tails[ntails] = op
                        ntails += 1
                    else:
                        end[op] = t
                        finished[nfin] = op
                        nfin += 1
                else:
                    running[d, nk] = op
                    nk += 1
            nrun[d] = nk
        for j in range(nfin):
            op = finished[j]
            done += 1
            if op % L != L - 1:
                nxt = op + 1
                ready_t[nxt] = t
                i = op_dim[nxt]
                ready[i, nready[i]] = nxt
                nready[i] += 1
                is_ready[nxt] = 1
    return start_arr, end_arr, seq_arr, status
