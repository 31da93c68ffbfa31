import random

import pytest

from rcsentinel.model import (
    R, U, W, Relation, Schema, Template, Transaction, TupleId,
    Variable, Workload, commit, read, update, write,
)


@pytest.fixture
def smallbank():
    from rcsentinel.fixtures import smallbank
    return smallbank()


@pytest.fixture
def tpcc():
    from rcsentinel.fixtures import tpcc_kv
    return tpcc_kv()


def make_rng(seed):
    return random.Random(seed)


def random_transactions(rng, max_tx=3, max_ops=4, n_relations=2, n_attrs=3, n_tuples=3):
    """Random concrete transactions over a small universe of tuples.

    Attribute sets are non-empty; kinds are drawn uniformly from R/W/U.
    """
    relations = [f"S{i}" for i in range(rng.randint(1, n_relations))]
    attrs = [chr(ord("a") + i) for i in range(n_attrs)]
    tuples = []
    for _ in range(rng.randint(1, n_tuples)):
        tuples.append(TupleId(rng.choice(relations), f"t{len(tuples)}"))
    txs = []
    for ti in range(rng.randint(1, max_tx)):
        ops = []
        for _ in range(rng.randint(1, max_ops)):
            target = rng.choice(tuples)
            kind = rng.choice([R, W, U])
            rs = frozenset(rng.sample(attrs, rng.randint(1, len(attrs))))
            ws = frozenset(rng.sample(attrs, rng.randint(1, len(attrs))))
            if kind == R:
                ops.append(read(target, rs))
            elif kind == W:
                ops.append(write(target, ws))
            else:
                ops.append(update(target, rs, ws))
        ops.append(commit())
        txs.append(Transaction(f"T{ti + 1}", tuple(ops)))
    return txs


def random_micro_workload(rng, max_templates=2, max_vars=2, max_ops=3,
                          n_relations=2, n_attrs=3, allow_key_writes=True,
                          write_back_updates=False):
    """Random tiny template workload used by the grounding sweeps.

    write_back_updates makes every update write back its full non-key read
    set, the shape under which promoting all reads provably restores
    robustness.
    """
    rels = []
    for i in range(rng.randint(1, n_relations)):
        n = rng.randint(1, n_attrs)
        attrs = tuple((chr(ord("a") + j), j == 0 and rng.random() < 0.5) for j in range(n))
        rels.append(Relation(f"S{i}", attrs))
    schema = Schema(tuple(rels))
    templates = []
    for tn in range(rng.randint(1, max_templates)):
        n_vars = rng.randint(1, max_vars)
        tvars = []
        for vi in range(n_vars):
            rel = rng.choice(rels)
            tvars.append(Variable(f"X{vi}", rel.name))
        ops = []
        for _ in range(rng.randint(1, max_ops)):
            var = rng.choice(tvars)
            rel = schema.relation(var.relation)
            names = [a for a, _ in rel.attributes]
            non_keys = [a for a, k in rel.attributes if not k]
            kind = rng.choice([R, W, U])
            rs = frozenset(rng.sample(names, rng.randint(1, len(names))))
            if kind == U and (not non_keys or (write_back_updates and not rs & set(non_keys))):
                kind = R
            if kind == R:
                ops.append(read(var, rs))
            elif kind == W:
                pool = names if allow_key_writes else non_keys
                if not pool:
                    ops.append(read(var, rs))
                    continue
                ops.append(write(var, frozenset(rng.sample(pool, rng.randint(1, len(pool))))))
            else:
                if write_back_updates:
                    ws = rs & set(non_keys)
                else:
                    ws = frozenset(rng.sample(non_keys, rng.randint(1, len(non_keys))))
                ops.append(update(var, rs, ws))
        ops.append(commit())
        templates.append(Template(f"P{tn}", tuple(ops)))
    return Workload(schema, tuple(templates))
