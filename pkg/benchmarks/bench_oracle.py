"""Benchmark the exhaustive RC-schedule scan: numba kernel vs pure Python.

Builds transaction sets of growing size from the banking fixture and times a
full (no-early-stop) scan through both code paths.

    python3 benchmarks/bench_oracle.py [--trials N]
"""

import argparse
import time

from rcsentinel import _kernels
from rcsentinel.fixtures import smallbank
from rcsentinel.model import TupleId, Variable, instantiate
from rcsentinel.schedule import interleaving_count


def build_case(n_writecheck):
    wl = smallbank()
    wc = wl.template("WriteCheck")
    assign = {
        Variable("X", "Account"): TupleId("Account", "a1"),
        Variable("Y", "Savings"): TupleId("Savings", "s1"),
        Variable("Z", "Checking"): TupleId("Checking", "c1"),
    }
    return [instantiate(wc, assign, f"T{i + 1}") for i in range(n_writecheck)]


def time_scan(impl, encoded, trials):
    *arrays, ntuples = encoded
    best = float("inf")
    result = None
    for _ in range(trials):
        start = time.perf_counter()
        result = impl(*arrays, ntuples, False)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=3)
    args = parser.parse_args()

    jit = _kernels._get_jit()
    if jit is not None:
        # trigger compilation outside the timed region
        warm = _kernels.encode_transactions(build_case(1))
        *arrays, ntuples = warm
        jit(*arrays, ntuples, False)

    print(f"{'case':>18} {'interleavings':>14} {'pure (s)':>10} {'numba (s)':>10} {'speedup':>8}")
    for n in (2, 3):
        txs = build_case(n)
        encoded = _kernels.encode_transactions(txs)
        pure_t, pure_res = time_scan(_kernels._scan, encoded, args.trials)
        line = f"{n}x WriteCheck{'':>5} {interleaving_count(txs):>14} {pure_t:>10.3f}"
        if jit is not None:
            jit_t, jit_res = time_scan(jit, encoded, args.trials)
            assert (pure_res[0], pure_res[2]) == (jit_res[0], jit_res[2])
            line += f" {jit_t:>10.3f} {pure_t / jit_t:>7.1f}x"
        else:
            line += f" {'n/a':>10} {'n/a':>8}"
        print(line)


if __name__ == "__main__":
    main()
