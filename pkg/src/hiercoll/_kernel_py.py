"""Pure-Python event loop for the engine (reference and fallback).

Ops are laid out chunk-major: op ``c*L + s`` is stage ``s`` of chunk ``c``.
An op first occupies its dimension for ``occ + load*share`` seconds (share =
ops co-resident on the dimension, re-timed on membership change), then
completes ``tail`` seconds later without holding the dimension.

SCF ranks ready ops by resident bytes, then byte-time, then chunk; FIFO by
ready time, then chunk. Returns per-op start/end times, a global start
sequence, and a status flag (0 ok, 1 deadlock). The compiled kernel mirrors
this loop statement for statement so both produce identical floats.
"""


def run(L, op_dim, op_occ, op_load, op_tail, op_key, ndims, max_conc, scf, enf_ptr=None, enf_ops=None):
    op_dim = [int(x) for x in op_dim]
    op_occ = [float(x) for x in op_occ]
    op_load = [float(x) for x in op_load]
    op_tail = [float(x) for x in op_tail]
    op_key = [float(x) for x in op_key]
    n = len(op_dim)
    start = [-1.0] * n
    end = [-1.0] * n
    seq = [-1] * n
    fin = [0.0] * n
    ready_t = [0.0] * n
    is_ready = [False] * n
    ready = [[] for _ in range(ndims)]
    running = [[] for _ in range(ndims)]
    tails = []
    share_used = [0] * ndims
    enforced = enf_ptr is not None
    if enforced:
        enf_ptr = [int(x) for x in enf_ptr]
        enf_ops = [int(x) for x in enf_ops]
        enf_pos = enf_ptr[:ndims]
    for c in range(n // L):
        op = c * L
        ready[op_dim[op]].append(op)
        is_ready[op] = True

    t = 0.0
    done = 0
    nseq = 0
    status = 0
    while True:
        active = len(tails) > 0
        for d in range(ndims):
            run_d = running[d]
            q = ready[d]
            newly = []
            while len(run_d) + len(newly) < max_conc and q:
                if enforced:
                    if enf_pos[d] >= enf_ptr[d + 1]:
                        break
                    op = enf_ops[enf_pos[d]]
                    if not is_ready[op]:
                        break
                    enf_pos[d] += 1
                    idx = q.index(op)
                else:
                    idx = 0
                    best = q[0]
                    if scf:
                        bk = op_key[best]
                        bl = op_load[best]
                        for j in range(1, len(q)):
                            o = q[j]
                            k = op_key[o]
                            if k < bk or (k == bk and (op_load[o] < bl or (op_load[o] == bl and o < best))):
                                best, bk, bl, idx = o, k, op_load[o], j
                    else:
                        bk = ready_t[best]
                        for j in range(1, len(q)):
                            o = q[j]
                            k = ready_t[o]
                            if k < bk or (k == bk and o < best):
                                best, bk, idx = o, k, j
                op = q[idx]
                q[idx] = q[-1]
                q.pop()
                is_ready[op] = False
                start[op] = t
                seq[op] = nseq
                nseq += 1
                newly.append(op)
            count = len(run_d) + len(newly)
            if count != share_used[d] and run_d:
                su = share_used[d]
                for op in run_d:
                    old = op_occ[op] + op_load[op] * su
                    new = op_occ[op] + op_load[op] * count
                    fin[op] = t + ((fin[op] - t) / old) * new
            for op in newly:
                fin[op] = t + (op_occ[op] + op_load[op] * count)
                run_d.append(op)
            if count:
                share_used[d] = count
                active = True
        if not active:
            if done < n:
                status = 1
            break

        tmin = -1.0
        for d in range(ndims):
            for op in running[d]:
                if tmin < 0.0 or fin[op] < tmin:
                    tmin = fin[op]
        for op in tails:
            if tmin < 0.0 or end[op] < tmin:
                tmin = end[op]
        t = tmin

        finished = []
        keep_tails = []
        for op in tails:
            if end[op] == t:
                finished.append(op)
            else:
                keep_tails.append(op)
        for d in range(ndims):
            keep = []
            for op in running[d]:
                if fin[op] == t:
                    if op_tail[op] > 0.0:
                        end[op] = t + op_tail[op]
                        keep_tails.append(op)
                    else:
                        end[op] = t
                        finished.append(op)
                else:
                    keep.append(op)
            running[d] = keep
        tails = keep_tails
        for op in finished:
            done += 1
            if op % L != L - 1:
                nxt = op + 1
                ready_t[nxt] = t
                ready[op_dim[nxt]].append(nxt)
                is_ready[nxt] = True
    return start, end, seq, status
