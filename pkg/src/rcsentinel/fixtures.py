"""Built-in benchmark workloads.

SmallBank models a banking application over Account/Savings/Checking;
TPC-Ckv is a key-value adaptation of TPC-C in which every predicate read
has been turned into a key-based access (two order lines and two stock
items per order).  The promoted variants replace selected reads by updates
that write back what they read; they are the known-robust repairs.
"""

from __future__ import annotations

from importlib import resources

from .model import Relation, Schema, Template, Variable, Workload, commit, read, update, write


def _rel(name, *attrs):
    return Relation(name, tuple((a.lstrip("*"), a.startswith("*")) for a in attrs))


def smallbank() -> Workload:
    schema = Schema((
        _rel("Account", "*N", "C"),
        _rel("Savings", "*C", "B"),
        _rel("Checking", "*C", "B"),
    ))
    x = Variable("X", "Account")
    y = Variable("Y", "Savings")
    z = Variable("Z", "Checking")
    x1, x2 = Variable("X1", "Account"), Variable("X2", "Account")
    y1 = Variable("Y1", "Savings")
    z1, z2 = Variable("Z1", "Checking"), Variable("Z2", "Checking")
    templates = (
        Template("Balance", (
            read(x, {"N", "C"}), read(y, {"C", "B"}), read(z, {"C", "B"}), commit())),
        Template("DepositChecking", (
            read(x, {"N", "C"}), update(z, {"C", "B"}, {"B"}), commit())),
        Template("TransactSavings", (
            read(x, {"N", "C"}), update(y, {"C", "B"}, {"B"}), commit())),
        Template("Amalgamate", (
            read(x1, {"N", "C"}), read(x2, {"N", "C"}),
            update(y1, {"C", "B"}, {"B"}),
            update(z1, {"C", "B"}, {"B"}), update(z2, {"C", "B"}, {"B"}), commit())),
        Template("WriteCheck", (
            read(x, {"N", "C"}), read(y, {"C", "B"}), read(z, {"C", "B"}),
            update(z, {"C", "B"}, {"B"}), commit())),
    )
    return Workload(schema, templates)


def smallbank_promoted() -> Workload:
    """SmallBank with every read of Savings and Checking promoted to an update."""
    base = smallbank()
    y = Variable("Y", "Savings")
    z = Variable("Z", "Checking")
    x = Variable("X", "Account")
    templates = []
    for t in base.templates:
        if t.name == "Balance":
            templates.append(Template("Balance", (
                read(x, {"N", "C"}),
                update(y, {"C", "B"}, {"B"}),
                update(z, {"C", "B"}, {"B"}), commit())))
        elif t.name == "WriteCheck":
            templates.append(Template("WriteCheck", (
                read(x, {"N", "C"}),
                update(y, {"C", "B"}, {"B"}),
                update(z, {"C", "B"}, {"B"}),
                update(z, {"C", "B"}, {"B"}), commit())))
        else:
            templates.append(t)
    return Workload(base.schema, tuple(templates))


_OL_ATTRS = ("W", "D", "O", "OL", "I", "Del", "Qua")


def tpcc_kv() -> Workload:
    schema = Schema((
        _rel("Warehouse", "*W", "Inf", "YTD"),
        _rel("District", "*W", "*D", "Inf", "YTD", "N"),
        _rel("Customer", "*W", "*D", "*C", "Inf", "Bal"),
        _rel("Order", "*W", "*D", "*O", "C", "Sta"),
        _rel("OrderLine", "*W", "*D", "*O", "*OL", "I", "Del", "Qua"),
        _rel("Stock", "*W", "*I", "Qua"),
    ))
    x = Variable("X", "Warehouse")
    y = Variable("Y", "District")
    z = Variable("Z", "Customer")
    s = Variable("S", "Order")
    t1, t2 = Variable("T1", "Stock"), Variable("T2", "Stock")
    v1, v2 = Variable("V1", "OrderLine"), Variable("V2", "OrderLine")
    t = Variable("T", "Stock")
    templates = (
        Template("NewOrder", (
            read(x, {"W", "Inf"}),
            update(y, {"W", "D", "Inf", "N"}, {"N"}),
            read(z, {"W", "D", "C", "Inf"}),
            write(s, {"W", "D", "O", "C", "Sta"}),
            update(t1, {"W", "I", "Qua"}, {"Qua"}),
            write(v1, set(_OL_ATTRS)),
            update(t2, {"W", "I", "Qua"}, {"Qua"}),
            write(v2, set(_OL_ATTRS)), commit())),
        Template("Payment", (
            update(x, {"W", "YTD"}, {"YTD"}),
            update(y, {"W", "D", "YTD"}, {"YTD"}),
            update(z, {"W", "D", "C", "Bal"}, {"Bal"}), commit())),
        Template("OrderStatus", (
            read(z, {"W", "D", "C", "Inf", "Bal"}),
            read(s, {"W", "D", "O", "C", "Sta"}),
            read(v1, set(_OL_ATTRS)),
            read(v2, set(_OL_ATTRS)), commit())),
        Template("Delivery", (
            update(s, {"W", "D", "O"}, {"Sta"}),
            update(v1, {"W", "D", "O", "OL", "Del"}, {"Del"}),
            update(v2, {"W", "D", "O", "OL", "Del"}, {"Del"}),
            update(z, {"W", "D", "C", "Bal"}, {"Bal"}), commit())),
        Template("StockLevel", (
            read(t, {"W", "I", "Qua"}), commit())),
    )
    return Workload(schema, templates)


def _promote_order_status() -> Template:
    z = Variable("Z", "Customer")
    s = Variable("S", "Order")
    v1, v2 = Variable("V1", "OrderLine"), Variable("V2", "OrderLine")
    return Template("OrderStatus", (
        update(z, {"W", "D", "C", "Inf", "Bal"}, {"Bal"}),
        update(s, {"W", "D", "O", "C", "Sta"}, {"Sta"}),
        update(v1, set(_OL_ATTRS), {"Del"}),
        update(v2, set(_OL_ATTRS), {"Del"}), commit()))


def tpcc_kv_promoted_attr() -> Workload:
    """TPC-Ckv repaired for attribute-level analysis: OrderStatus fully promoted."""
    base = tpcc_kv()
    templates = tuple(_promote_order_status() if t.name == "OrderStatus" else t
                      for t in base.templates)
    return Workload(base.schema, templates)


def tpcc_kv_promoted_tuple() -> Workload:
    """TPC-Ckv repaired for tuple-level analysis: OrderStatus fully promoted
    plus NewOrder's Warehouse and Customer reads."""
    base = tpcc_kv()
    x = Variable("X", "Warehouse")
    y = Variable("Y", "District")
    z = Variable("Z", "Customer")
    s = Variable("S", "Order")
    t1, t2 = Variable("T1", "Stock"), Variable("T2", "Stock")
    v1, v2 = Variable("V1", "OrderLine"), Variable("V2", "OrderLine")
    neworder = Template("NewOrder", (
        update(x, {"W", "Inf"}, {"Inf"}),
        update(y, {"W", "D", "Inf", "N"}, {"N"}),
        update(z, {"W", "D", "C", "Inf"}, {"Inf"}),
        write(s, {"W", "D", "O", "C", "Sta"}),
        update(t1, {"W", "I", "Qua"}, {"Qua"}),
        write(v1, set(_OL_ATTRS)),
        update(t2, {"W", "I", "Qua"}, {"Qua"}),
        write(v2, set(_OL_ATTRS)), commit()))
    templates = []
    for t in base.templates:
        if t.name == "NewOrder":
            templates.append(neworder)
        elif t.name == "OrderStatus":
            templates.append(_promote_order_status())
        else:
            templates.append(t)
    return Workload(base.schema, tuple(templates))


BENCH_WORKLOADS = {
    "smallbank": smallbank,
    "tpcc-kv": tpcc_kv,
}

_FIXTURE_FILES = {
    "smallbank": "smallbank.rct",
    "tpcc-kv": "tpcc-kv.rct",
    "smallbank-promoted": "smallbank-promoted.rct",
    "tpcc-kv-promoted-attr": "tpcc-kv-promoted-attr.rct",
    "tpcc-kv-promoted-tuple": "tpcc-kv-promoted-tuple.rct",
}


def fixture_text(name: str) -> str:
    """Source text of a shipped fixture (workload DSL)."""
    return resources.files("rcsentinel").joinpath("data", _FIXTURE_FILES[name]).read_text()


def schedule_fixture_text(name: str) -> str:
    """Source text of a shipped schedule transcript."""
    return resources.files("rcsentinel").joinpath("data", "schedules", f"{name}.rcs").read_text()
