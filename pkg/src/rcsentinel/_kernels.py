"""Exhaustive RC-schedule scan kernel.

Transactions are packed into flat integer arrays (attribute sets as 64-bit
masks) and a depth-first search walks every interleaving, pruning branches
that already exhibit a dirty write and testing each complete schedule for a
conflict-graph cycle.

The search is JIT-compiled with numba when available.  Setting
RC_SENTINEL_PURE_PYTHON=1 (or running without numba) selects the identical
pure-Python/numpy code path; benchmarks/bench_oracle.py compares the two.
"""

from __future__ import annotations

import os

import numpy as np

_jit_scan = None
_jit_failed = False


def _scan(tx_start, tx_len, op_tx, op_kind, op_tuple, op_rd, op_wr,
          ntuples, early_stop):
    """DFS over interleavings; returns (found, first_bad_choice_seq, leaves).

    Choice sequences are explored with transaction indices ascending, so the
    first hit is the lexicographically smallest counterexample.
    """
    nt = tx_start.shape[0]
    n = op_kind.shape[0]
    progress = np.zeros(nt, np.int64)
    committed = np.zeros(nt, np.uint8)
    uw = np.zeros((nt, ntuples if ntuples > 0 else 1), np.int64)
    chosen = np.zeros(n, np.int64)
    order_op = np.zeros(n, np.int64)
    save_mask = np.zeros(n, np.int64)
    commit_step = np.full(nt, n + 1, np.int64)
    choice_out = np.full(n, -1, np.int64)
    step_of = np.zeros(n, np.int64)
    vk_cs = np.zeros(n, np.int64)
    vk_pos = np.zeros(n, np.int64)
    adj = np.zeros(nt, np.int64)
    leaves = 0
    found = 0

    depth = 0
    t = 0
    while True:
        if t == nt:
            if depth == 0:
                break
            depth -= 1
            tp = chosen[depth]
            opi = order_op[depth]
            if op_kind[opi] == 3:
                committed[tp] = 0
                commit_step[tp] = n + 1
            elif op_wr[opi] != 0:
                uw[tp, op_tuple[opi]] = save_mask[depth]
            progress[tp] -= 1
            t = tp + 1
            continue
        if progress[t] == tx_len[t]:
            t += 1
            continue
        opi = tx_start[t] + progress[t]
        k = op_kind[opi]
        wm = op_wr[opi]
        if wm != 0:
            tup = op_tuple[opi]
            dirty = False
            for j in range(nt):
                if j != t and committed[j] == 0 and (uw[j, tup] & wm) != 0:
                    dirty = True
                    break
            if dirty:
                t += 1
                continue
        chosen[depth] = t
        order_op[depth] = opi
        if k == 3:
            committed[t] = 1
            commit_step[t] = depth
        elif wm != 0:
            tup = op_tuple[opi]
            save_mask[depth] = uw[t, tup]
            uw[t, tup] = uw[t, tup] | wm
        progress[t] += 1
        depth += 1
        if depth < n:
            t = 0
            continue

        # complete interleaving: test for a conflict-graph cycle
        leaves += 1
        for s in range(n):
            step_of[order_op[s]] = s
        for b in range(n):
            if op_rd[b] != 0:
                bt = op_tuple[b]
                sb = step_of[b]
                bcs = np.int64(-1)
                bpos = np.int64(-1)
                for w in range(n):
                    if op_wr[w] != 0 and op_tuple[w] == bt:
                        cs = commit_step[op_tx[w]]
                        if cs < sb and (cs > bcs or (cs == bcs and w > bpos)):
                            bcs = cs
                            bpos = w
                vk_cs[b] = bcs
                vk_pos[b] = bpos
        for i in range(nt):
            adj[i] = 0
        for b in range(n):
            tb = op_tuple[b]
            if tb < 0:
                continue
            btx = op_tx[b]
            for a in range(n):
                if op_tuple[a] != tb:
                    continue
                atx = op_tx[a]
                if atx == btx:
                    continue
                if (op_wr[b] & op_wr[a]) != 0 and commit_step[btx] < commit_step[atx]:
                    adj[btx] |= np.int64(1) << atx
                if (op_wr[b] & op_rd[a]) != 0 and commit_step[btx] < step_of[a]:
                    adj[btx] |= np.int64(1) << atx
                if (op_rd[b] & op_wr[a]) != 0:
                    acs = commit_step[atx]
                    if vk_cs[b] < acs or (vk_cs[b] == acs and vk_pos[b] < a):
                        adj[btx] |= np.int64(1) << atx
        for kk in range(nt):
            for i in range(nt):
                if (adj[i] >> kk) & 1:
                    adj[i] |= adj[kk]
        nonser = False
        for i in range(nt):
            if (adj[i] >> i) & 1:
                nonser = True
                break
        if nonser and found == 0:
            found = 1
            for s in range(n):
                choice_out[s] = chosen[s]
            if early_stop:
                break
        depth -= 1
        opi2 = order_op[depth]
        if op_kind[opi2] == 3:
            committed[t] = 0
            commit_step[t] = n + 1
        elif op_wr[opi2] != 0:
            uw[t, op_tuple[opi2]] = save_mask[depth]
        progress[t] -= 1
        t += 1

    return found, choice_out, leaves


_KIND_CODE = {"R": 0, "W": 1, "U": 2, "C": 3}


def encode_transactions(transactions):
    """Pack transactions into arrays; None if outside the kernel's limits
    (more than 60 transactions or more than 63 distinct attributes)."""
    txs = tuple(transactions)
    if len(txs) > 60:
        return None
    attr_bits: dict[tuple[str, str], int] = {}
    tuple_ids: dict = {}
    for t in txs:
        for op in t.ops:
            if op.is_commit:
                continue
            for attr in sorted(op.read_set | op.write_set):
                attr_bits.setdefault((op.target.relation, attr), len(attr_bits))
            tuple_ids.setdefault(op.target, len(tuple_ids))
    if len(attr_bits) > 63:
        return None

    def mask(relation, attrs):
        m = 0
        for attr in attrs:
            m |= 1 << attr_bits[(relation, attr)]
        return m

    n = sum(len(t.ops) for t in txs)
    tx_start = np.zeros(len(txs), np.int64)
    tx_len = np.zeros(len(txs), np.int64)
    op_tx = np.zeros(n, np.int64)
    op_kind = np.zeros(n, np.int64)
    op_tuple = np.full(n, -1, np.int64)
    op_rd = np.zeros(n, np.int64)
    op_wr = np.zeros(n, np.int64)
    pos = 0
    for ti, t in enumerate(txs):
        tx_start[ti] = pos
        tx_len[ti] = len(t.ops)
        for op in t.ops:
            op_tx[pos] = ti
            op_kind[pos] = _KIND_CODE[op.kind]
            if not op.is_commit:
                op_tuple[pos] = tuple_ids[op.target]
                op_rd[pos] = mask(op.target.relation, op.read_set)
                op_wr[pos] = mask(op.target.relation, op.write_set)
            pos += 1
    return (tx_start, tx_len, op_tx, op_kind, op_tuple, op_rd, op_wr, len(tuple_ids))


def use_pure_python() -> bool:
    return os.environ.get("RC_SENTINEL_PURE_PYTHON", "") not in ("", "0")


def _get_jit():
    global _jit_scan, _jit_failed
    if _jit_scan is None and not _jit_failed:
        try:
            import numba
            _jit_scan = numba.njit(cache=True)(_scan)
        except ImportError:
            _jit_failed = True
    return _jit_scan


def scan_rc_schedules(encoded, early_stop=True):
    """Run the scan on encoded transactions; returns (found, choices, leaves)."""
    *arrays, ntuples = encoded
    impl = None if use_pure_python() else _get_jit()
    if impl is None:
        impl = _scan
    found, choice_out, leaves = impl(*arrays, ntuples, early_stop)
    choices = [int(x) for x in choice_out] if found else []
    return bool(found), choices, int(leaves)
