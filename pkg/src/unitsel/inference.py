"""Variable elimination engines for MAP, Reverse-MAP and posterior queries.

MAP maximizes the joint Pr(u, e); Reverse-MAP maximizes the conditional
Pr(e1 | u, e2). The Reverse-MAP engine runs two sum-elimination passes over
the same order (one with evidence e1 and e2, one with e2 alone), divides the
corresponding surviving factors pairwise, and maximizes the target variables
out of the quotients. Dividing pairwise is sound because both passes create
factors with identical scopes at every step: evidence indicator factors never
enlarge a created scope.

Targets with Pr(u, e2) = 0 receive the value 0 through the 0/0 = 0 division
convention and are reported as excluded; they can never win the maximization
unless every target is excluded, which raises InconsistentEvidenceError.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .factor import Factor, Instantiation, MaximizerTable, multiply_all
from .elimination import EliminationOrder, minfill_order, moral_graph
from .model import ModelError, Scm, evidence_to_lambdas

Tag = tuple
"""Factor provenance: ("cpt", vid), ("lam", vid), ("step", i) or ("unit", vid)."""


class TaggedFactor(NamedTuple):
    tag: Tag
    factor: Factor


class InconsistentEvidenceError(RuntimeError):
    """Evidence carries zero probability mass for every target instantiation."""


@dataclass(frozen=True)
class TraceStep:
    """One elimination step: which factors met, what was created."""

    step: int
    var: int
    used: tuple[str, ...]
    created: str
    cluster: tuple[int, ...]


@dataclass
class QueryResult:
    """Value and recovered instantiation of a MAP-style query."""

    value: float
    instantiation: Instantiation
    trace: list[TraceStep] | None = None
    excluded: int | None = None


@dataclass
class _MaxStep:
    var: int
    table: MaximizerTable


def _tag_label(tag: Tag, scm: Scm | None = None) -> str:
    kind = tag[0]
    if kind == "cpt":
        name = scm.var(tag[1]).name if scm else str(tag[1])
        return f"f_{name}"
    if kind == "lam":
        name = scm.var(tag[1]).name if scm else str(tag[1])
        return f"lambda_{name}"
    if kind == "step":
        return f"f{tag[1]}"
    return f"1_{tag[1]}"


def cpt_pool(scm: Scm) -> list[TaggedFactor]:
    return [TaggedFactor(("cpt", v.id), scm.cpt_factor(v.id)) for v in scm.variables]


def lambda_pool(scm: Scm, evidence: Mapping[int, int]) -> list[TaggedFactor]:
    return [
        TaggedFactor(("lam", f.vids[0]), f)
        for f in evidence_to_lambdas(scm, evidence)
    ]


def eliminate(
    op: str,
    pool: Sequence[TaggedFactor],
    order: Sequence[int],
    step_base: int = 0,
    trace: list[TraceStep] | None = None,
    scm: Scm | None = None,
    card_of: Mapping[int, int] | None = None,
) -> tuple[list[TaggedFactor], list[_MaxStep]]:
    """Eliminate the order's variables from the pool using sum or max.

    At each step, all factors mentioning the variable are multiplied, the
    operation is applied over that variable, and the result (tagged with the
    step index) replaces them. Returns the surviving pool and, for max, the
    per-step maximizer tables needed for instantiation recovery.
    """
    if op not in ("sum", "max"):
        raise ValueError(f"unknown elimination op {op!r}")
    pool = list(pool)
    max_steps: list[_MaxStep] = []
    for i, vid in enumerate(order):
        step = step_base + i + 1
        mention = [tf for tf in pool if vid in tf.factor.vids]
        rest = [tf for tf in pool if vid not in tf.factor.vids]
        if not mention:
            # No factor mentions the variable: eliminate the implicit
            # all-ones factor over it so the semantics stay exact.
            card = card_of[vid] if card_of else scm.var(vid).cardinality
            mention = [TaggedFactor(("unit", vid), Factor.ones((vid,), (card,)))]
        product = multiply_all(tf.factor for tf in mention)
        cluster = product.vids
        if op == "sum":
            created = product.sum_out({vid})
        else:
            created, table = product.max_out({vid})
            max_steps.append(_MaxStep(vid, table))
        tag = ("step", step)
        if trace is not None:
            used = tuple(
                f"{_tag_label(tf.tag, scm)}({_scope_names(tf.factor.vids, scm)})"
                for tf in mention
            )
            trace.append(
                TraceStep(
                    step,
                    vid,
                    used,
                    f"{_tag_label(tag, scm)}({_scope_names(created.vids, scm)})",
                    cluster,
                )
            )
        pool = rest + [TaggedFactor(tag, created)]
    return pool, max_steps


def _scope_names(vids: tuple[int, ...], scm: Scm | None) -> str:
    if scm is None:
        return ",".join(map(str, vids))
    names = [scm.var(v).name for v in vids]
    if all(len(n) == 1 for n in names):
        return "".join(names)
    return ",".join(names)


def format_trace(steps: Iterable[TraceStep], scm: Scm) -> str:
    """Render trace steps as the elimination table (one row per step)."""
    rows = [("i", "var", "factors", "new factor", "cluster")]
    for s in steps:
        cluster = _scope_names(s.cluster, scm)
        rows.append((str(s.step), scm.var(s.var).name, " ".join(s.used), s.created, cluster))
    widths = [max(len(r[c]) for r in rows) for c in range(5)]
    lines = [
        " | ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
        for row in rows
    ]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines)


def _recover_instantiation(max_steps: list[_MaxStep]) -> Instantiation:
    """Walk the max pass in reverse, fixing each variable by table lookup
    under the already-fixed later variables."""
    fixed: Instantiation = {}
    for step in reversed(max_steps):
        fixed.update(step.table.lookup(fixed))
    return fixed


def default_order(scm: Scm, targets: Iterable[int]) -> EliminationOrder:
    """Constrained minfill order with the target block re-sorted to descending
    id, so reverse-order argmax recovery breaks ties toward the
    lexicographically smallest instantiation in declaration order."""
    targets = set(targets)
    base = minfill_order(moral_graph(scm), constrained_suffix=targets)
    suffix = tuple(sorted(targets, reverse=True))
    return EliminationOrder(base.prefix + suffix, frozenset(targets))


def _check_order(scm: Scm, order: EliminationOrder, targets: set[int]) -> EliminationOrder:
    if set(order.sequence) != {v.id for v in scm.variables}:
        raise ModelError("elimination order must cover all model variables")
    tail = set(order.sequence[len(order.sequence) - len(targets):]) if targets else set()
    if tail != targets:
        raise ModelError("elimination order must be constrained on the targets")
    return EliminationOrder(order.sequence, frozenset(targets))


def _scalar_value(pool: Iterable[TaggedFactor]) -> float:
    value = 1.0
    for tf in sorted(pool, key=lambda t: t.tag):
        assert tf.factor.vids == (), "non-scalar factor survived elimination"
        value *= float(tf.factor.values)
    return value


def map_ve(
    scm: Scm,
    targets: Iterable[int],
    evidence: Mapping[int, int],
    order: EliminationOrder | None = None,
    want_trace: bool = False,
) -> QueryResult:
    """MAP by variable elimination: value = max_u Pr(u, e) plus an argmax.

    Sums out the non-target variables under the evidence indicators, then
    maximizes out the targets, recovering the instantiation from the
    maximizer tables.
    """
    targets = set(targets)
    if targets & set(evidence):
        raise ModelError("targets and evidence variables must be disjoint")
    order = default_order(scm, targets) if order is None else _check_order(scm, order, targets)
    trace: list[TraceStep] | None = [] if want_trace else None
    pool = cpt_pool(scm) + lambda_pool(scm, evidence)
    pool, _ = eliminate("sum", pool, order.prefix, trace=trace, scm=scm)
    pool, max_steps = eliminate(
        "max", pool, order.suffix, step_base=len(order.prefix), trace=trace, scm=scm
    )
    value = _scalar_value(pool)
    inst = _recover_instantiation(max_steps)
    return QueryResult(value, inst, trace)


def _paired_division(
    pool1: Sequence[TaggedFactor], pool2: Sequence[TaggedFactor]
) -> list[TaggedFactor]:
    by_tag = {tf.tag: tf.factor for tf in pool2}
    if len(by_tag) != len(pool2) or {tf.tag for tf in pool1} != set(by_tag):
        raise AssertionError("elimination passes produced unpaired factors")
    out = []
    for tag, f1 in ((tf.tag, tf.factor) for tf in pool1):
        f2 = by_tag[tag]
        assert f1.same_scope(f2), "corresponding factors must share a scope"
        out.append(TaggedFactor(tag, f1.divide(f2)))
    return out


def rmap_ve(
    scm: Scm,
    targets: Iterable[int],
    e1: Mapping[int, int],
    e2: Mapping[int, int],
    order: EliminationOrder | None = None,
    want_trace: bool = False,
) -> QueryResult:
    """Reverse-MAP by variable elimination: max_u Pr(e1 | u, e2).

    Two sum passes over the same order (evidence e1+e2, then e2 alone) are
    divided pairwise and the targets maximized out of the quotients.
    """
    targets = set(targets)
    sets = [targets, set(e1), set(e2)]
    for i in range(3):
        for j in range(i + 1, 3):
            if sets[i] & sets[j]:
                raise ModelError("targets, e1 and e2 must be pairwise disjoint")
    order = default_order(scm, targets) if order is None else _check_order(scm, order, targets)
    trace: list[TraceStep] | None = [] if want_trace else None

    both = dict(e1)
    both.update(e2)
    pool1 = cpt_pool(scm) + lambda_pool(scm, both)
    pool2 = cpt_pool(scm) + lambda_pool(scm, e2)
    pool1, _ = eliminate("sum", pool1, order.prefix, trace=trace, scm=scm)
    pool2, _ = eliminate("sum", pool2, order.prefix, scm=scm)

    # Materializing the pass-2 marginal over the targets gives the excluded
    # count and the consistency check; fine at desk scale.
    joint2 = multiply_all(tf.factor for tf in sorted(pool2, key=lambda t: t.tag))
    excluded = int(np.count_nonzero(joint2.values == 0))
    if joint2.max_value() == 0.0:
        raise InconsistentEvidenceError(
            "evidence e2 is inconsistent with every target instantiation"
        )

    quotients = _paired_division(pool1, pool2)
    pool, max_steps = eliminate(
        "max", quotients, order.suffix, step_base=len(order.prefix), trace=trace, scm=scm
    )
    value = _scalar_value(pool)
    inst = _recover_instantiation(max_steps)
    if value == 0.0:
        # Everything ties at zero, including excluded units; return the
        # lexicographically smallest unit with Pr(u, e2) > 0 instead (the
        # brute-force tie rule skips excluded units the same way).
        flat = int(np.argmax(joint2.values > 0))
        states = np.unravel_index(flat, joint2.cards) if joint2.cards else ()
        inst = {v: int(s) for v, s in zip(joint2.vids, states)}
    return QueryResult(value, inst, trace, excluded)


def rmap_table(
    scm: Scm,
    targets: Iterable[int],
    e1: Mapping[int, int],
    e2: Mapping[int, int],
    order: EliminationOrder | None = None,
) -> Factor:
    """The full conditional profile Pr(e1 | u, e2) as a factor over the
    targets (0 where Pr(u, e2) = 0). Used for whole-grid checks."""
    targets = set(targets)
    order = default_order(scm, targets) if order is None else _check_order(scm, order, targets)
    both = dict(e1)
    both.update(e2)
    pool1 = cpt_pool(scm) + lambda_pool(scm, both)
    pool2 = cpt_pool(scm) + lambda_pool(scm, e2)
    pool1, _ = eliminate("sum", pool1, order.prefix, scm=scm)
    pool2, _ = eliminate("sum", pool2, order.prefix, scm=scm)
    quotients = _paired_division(pool1, pool2)
    return multiply_all(tf.factor for tf in sorted(quotients, key=lambda t: t.tag))


def posterior(
    scm: Scm,
    targets: Iterable[int],
    evidence: Mapping[int, int],
    order: EliminationOrder | None = None,
) -> Factor:
    """Normalized conditional table Pr(targets | evidence)."""
    targets = set(targets)
    if targets & set(evidence):
        raise ModelError("targets and evidence variables must be disjoint")
    order = default_order(scm, targets) if order is None else _check_order(scm, order, targets)
    pool = cpt_pool(scm) + lambda_pool(scm, evidence)
    pool, _ = eliminate("sum", pool, order.prefix, scm=scm)
    joint = multiply_all(tf.factor for tf in sorted(pool, key=lambda t: t.tag))
    assert set(joint.vids) == targets, "survivors must cover exactly the targets"
    mass = joint.total()
    if mass == 0.0:
        raise InconsistentEvidenceError("evidence has zero probability mass")
    return joint.scale(1.0 / mass)


def query_prob(scm: Scm, event: Mapping[int, int], given: Mapping[int, int]) -> float:
    """Pr(event | given) for instantiations (a posterior cell)."""
    post = posterior(scm, set(event), given)
    return post[event]


# -- brute-force oracles -------------------------------------------------------


def joint_mass(scm: Scm, inst: Mapping[int, int], order: EliminationOrder | None = None) -> float:
    """Pr(inst) by summing out every variable under the indicators."""
    if order is None:
        order = minfill_order(moral_graph(scm))
    pool = cpt_pool(scm) + lambda_pool(scm, inst)
    pool, _ = eliminate("sum", pool, order.sequence, scm=scm)
    return _scalar_value(pool)


def _target_grid(scm: Scm, targets: Iterable[int]):
    from .worlds import enumerate_instantiations

    return enumerate_instantiations(scm, targets)


def brute_map(scm: Scm, targets: Iterable[int], evidence: Mapping[int, int]) -> QueryResult:
    """Full enumeration over the targets; ties go to the lexicographically
    smallest instantiation in declaration order (the VE tie rule)."""
    targets = set(targets)
    if targets & set(evidence):
        raise ModelError("targets and evidence variables must be disjoint")
    order = minfill_order(moral_graph(scm))
    best: tuple[float, Instantiation] | None = None
    for u in _target_grid(scm, targets):
        full = dict(evidence)
        full.update(u)
        p = joint_mass(scm, full, order)
        if best is None or p > best[0]:
            best = (p, u)
    assert best is not None
    return QueryResult(best[0], best[1])


def brute_rmap(
    scm: Scm,
    targets: Iterable[int],
    e1: Mapping[int, int],
    e2: Mapping[int, int],
) -> QueryResult:
    """Full enumeration Reverse-MAP oracle with the same exclusion rule and
    tie-breaking as the VE path."""
    targets = set(targets)
    sets = [targets, set(e1), set(e2)]
    for i in range(3):
        for j in range(i + 1, 3):
            if sets[i] & sets[j]:
                raise ModelError("targets, e1 and e2 must be pairwise disjoint")
    order = minfill_order(moral_graph(scm))
    both = dict(e1)
    both.update(e2)
    best: tuple[float, Instantiation] | None = None
    excluded = 0
    for u in _target_grid(scm, targets):
        m2 = joint_mass(scm, {**e2, **u}, order)
        if m2 == 0.0:
            excluded += 1
            continue
        m1 = joint_mass(scm, {**both, **u}, order)
        val = m1 / m2
        if best is None or val > best[0]:
            best = (val, u)
    if best is None:
        raise InconsistentEvidenceError(
            "evidence e2 is inconsistent with every target instantiation"
        )
    return QueryResult(best[0], best[1], excluded=excluded)


# -- unit selection ------------------------------------------------------------


def unit_select(
    scm: Scm,
    objective,
    method: str = "ve",
    order: EliminationOrder | None = None,
    om=None,
) -> QueryResult:
    """argmax_u L(u) for a weighted counterfactual objective.

    ``method="ve"`` builds the objective model and runs Reverse-MAP on it;
    ``method="brute"`` evaluates L(u) for every unit by enumeration. Both
    return the instantiation over the base unit variables. Units whose
    conditioning mass vanishes are excluded and counted. A caller-supplied
    ``order`` (and the optional pre-built objective model ``om`` it refers
    to) must cover the objective model's variables.
    """
    from .objective import build_objective_model, evaluate_L_profile, validate_objective

    report = validate_objective(scm, objective)
    if not report.ok:
        raise ModelError("invalid objective: " + "; ".join(report.violations))

    if method == "ve":
        if om is None:
            om = build_objective_model(scm, objective)
        result = rmap_ve(om.model, om.unit_om_ids, om.e1, om.e2, order=order)
        inst = {
            base: result.instantiation[om_id]
            for base, om_id in zip(om.unit_base_ids, om.unit_om_ids)
        }
        return QueryResult(result.value, inst, excluded=result.excluded)
    if method == "brute":
        values, defined = evaluate_L_profile(scm, objective)
        if not defined.any():
            raise InconsistentEvidenceError(
                "every unit has zero conditioning mass for some term"
            )
        masked = np.where(defined, values, -1.0)
        flat = int(masked.argmax())  # first max in C order = smallest unit
        unit_ids = tuple(sorted(objective.unit_ids))
        cards = tuple(scm.var(v).cardinality for v in unit_ids)
        states = np.unravel_index(flat, cards) if cards else ()
        inst = {v: int(s) for v, s in zip(unit_ids, states)}
        excluded = int(defined.size - np.count_nonzero(defined))
        return QueryResult(float(values[tuple(states)]), inst, excluded=excluded)
    raise ValueError(f"unknown method {method!r}")
