from conftest import make_rng, random_transactions
from rcsentinel import _kernels
from rcsentinel.model import Transaction, TupleId, commit, read, update
from rcsentinel.schedule import enumerate_rc_schedules, is_conflict_serializable


def _scan_both(txs, early_stop=True):
    encoded = _kernels.encode_transactions(txs)
    assert encoded is not None
    *arrays, ntuples = encoded
    pure = _kernels._scan(*arrays, ntuples, early_stop)
    jit = _kernels._get_jit()
    if jit is None:
        return pure, pure
    return pure, jit(*arrays, ntuples, early_stop)


def test_jit_and_pure_agree():
    rng = make_rng(101)
    for _ in range(25):
        txs = random_transactions(rng, max_tx=3, max_ops=3)
        (f1, c1, l1), (f2, c2, l2) = _scan_both(txs, early_stop=False)
        assert f1 == f2
        assert l1 == l2
        assert list(c1) == list(c2)


def test_leaf_count_matches_enumerator():
    rng = make_rng(103)
    for _ in range(25):
        txs = random_transactions(rng, max_tx=3, max_ops=3)
        encoded = _kernels.encode_transactions(txs)
        _, _, leaves = _kernels.scan_rc_schedules(encoded, early_stop=False)
        assert leaves == sum(1 for _ in enumerate_rc_schedules(txs))


def test_nonserializable_flag_matches_checker():
    rng = make_rng(107)
    for _ in range(15):
        txs = random_transactions(rng, max_tx=2, max_ops=3)
        encoded = _kernels.encode_transactions(txs)
        found, _, _ = _kernels.scan_rc_schedules(encoded, early_stop=False)
        any_bad = any(not is_conflict_serializable(s).serializable
                      for s in enumerate_rc_schedules(txs))
        assert found == any_bad


def test_pure_python_env_flag(monkeypatch):
    monkeypatch.setenv("RC_SENTINEL_PURE_PYTHON", "1")
    assert _kernels.use_pure_python()
    t = TupleId("S", "t")
    txs = [Transaction("T1", (update(t, {"a"}, {"a"}), commit())),
           Transaction("T2", (update(t, {"a"}, {"a"}), commit()))]
    encoded = _kernels.encode_transactions(txs)
    found, choices, leaves = _kernels.scan_rc_schedules(encoded, early_stop=False)
    assert not found and leaves == 2  # both serial orders, both serializable
    monkeypatch.delenv("RC_SENTINEL_PURE_PYTHON")


def test_encoding_limits():
    # more than 63 distinct attributes falls back to the slow path
    ops = tuple(read(TupleId("S", "t"), {f"a{i}"}) for i in range(70)) + (commit(),)
    assert _kernels.encode_transactions([Transaction("T1", ops)]) is None


def test_oracle_verdicts_identical_without_jit(monkeypatch):
    from rcsentinel.schedule import robust_oracle
    rng = make_rng(109)
    cases = [random_transactions(rng, max_tx=3, max_ops=3) for _ in range(10)]
    fast = [robust_oracle(txs) for txs in cases]
    monkeypatch.setenv("RC_SENTINEL_PURE_PYTHON", "1")
    for txs, before in zip(cases, fast):
        after = robust_oracle(txs)
        assert after.robust == before.robust
        assert after.schedules_checked == before.schedules_checked
        if not before.robust:
            assert after.counterexample.order == before.counterexample.order
