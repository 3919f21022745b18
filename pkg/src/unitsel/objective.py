"""Weighted counterfactual objectives and their reduction to Reverse-MAP.

An objective L(u) = sum_i w_i * Pr(y^i_{x^i}, w^i_{v^i} | e^i, u) over shared
unit roots U is encoded as a single conditional probability on an *objective
model*: one multi-world copy of the SCM per term, joined so only U (and the
mixture root H) is shared, with worlds 2/3 mutilated at the treatments. The
mixture root H has one state per term with prior w_i and becomes a parent of
every outcome copy; each outcome CPT keeps its original rows when H selects
its own term and clamps the outcome to the term's target state otherwise.
Then L(u) = Pr'(e1 | e2, u) with e1 the outcome assignments and e2 the
treatment, intervened-value and per-term evidence assignments.

Per-term worlds are dropped when unused: world 1 iff the term has no
evidence, world 2 iff it has no world-2 treatment and no outcome there,
world 3 symmetrically. A term without evidence therefore only needs a twin.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .factor import Instantiation, Variable
from .model import ModelError, Scm, validate
from .worlds import bracket_name, counterfactual_term_profile

WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class ObjectiveTerm:
    """One weighted counterfactual term Pr(y_x, w_v | e, u)."""

    weight: float
    x: Instantiation = field(default_factory=dict)
    y: Instantiation = field(default_factory=dict)
    v: Instantiation = field(default_factory=dict)
    w: Instantiation = field(default_factory=dict)
    e: Instantiation = field(default_factory=dict)

    def retained_worlds(self) -> tuple[int, ...]:
        worlds = []
        if self.e:
            worlds.append(1)
        if self.x or self.y:
            worlds.append(2)
        if self.v or self.w:
            worlds.append(3)
        return tuple(worlds)


@dataclass(frozen=True)
class ObjectiveFunction:
    """Unit variables plus the list of weighted terms."""

    unit_ids: tuple[int, ...]
    terms: tuple[ObjectiveTerm, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "unit_ids", tuple(sorted(self.unit_ids)))
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def n(self) -> int:
        return len(self.terms)


@dataclass
class ObjectiveReport:
    ok: bool
    violations: list[str] = field(default_factory=list)


def validate_objective(scm: Scm, objective: ObjectiveFunction) -> ObjectiveReport:
    """Check the weight simplex, per-term disjointness, unit exogeneity and
    endogeneity of all term variables. Violations are reported, not raised."""
    violations: list[str] = []
    if not objective.terms:
        violations.append("objective has no terms")
    weights = [t.weight for t in objective.terms]
    if any(w < 0 for w in weights):
        violations.append("term weights must be non-negative")
    if weights and abs(sum(weights) - 1.0) > WEIGHT_TOL:
        violations.append(f"term weights sum to {sum(weights)!r}, expected 1")
    for vid in objective.unit_ids:
        if not 0 <= vid < scm.n:
            violations.append(f"unknown unit variable id {vid}")
        elif not scm.is_root(vid):
            violations.append(f"unit variable {scm.var(vid).name!r} is not exogenous")
    if not objective.unit_ids:
        violations.append("objective has no unit variables")
    for i, term in enumerate(objective.terms, start=1):
        treatments = set(term.x) | set(term.v)
        outcomes = set(term.y) | set(term.w)
        overlap = treatments & outcomes
        if overlap:
            names = ", ".join(scm.var(v).name for v in sorted(overlap) if 0 <= v < scm.n)
            violations.append(f"term {i}: treatments overlap outcomes ({names})")
        for role, inst in (("x", term.x), ("y", term.y), ("v", term.v),
                           ("w", term.w), ("e", term.e)):
            for vid, state in inst.items():
                if not 0 <= vid < scm.n:
                    violations.append(f"term {i}: unknown variable id {vid} in {role}")
                    continue
                var = scm.var(vid)
                if scm.is_root(vid):
                    violations.append(
                        f"term {i}: variable {var.name!r} in {role} must be endogenous"
                    )
                if not 0 <= state < var.cardinality:
                    violations.append(
                        f"term {i}: state {state} out of range for {var.name!r}"
                    )
    return ObjectiveReport(not violations, violations)


@dataclass(frozen=True)
class ComponentMap:
    """Where one term's copies live inside the objective model."""

    worlds: tuple[int, ...]
    endo: dict[int, dict[int, int]]  # base endo id -> {world: model id}
    roots: dict[int, int]            # base non-unit root id -> model id


@dataclass(frozen=True)
class ObjectiveModel:
    """The joined, mutilated, mixture-augmented model plus its query."""

    model: Scm
    h_id: int
    e1: Instantiation
    e2: Instantiation
    unit_base_ids: tuple[int, ...]
    unit_om_ids: tuple[int, ...]
    components: tuple[ComponentMap, ...]
    base_endo_count: int
    base_nonunit_exo_count: int

    @property
    def n_components(self) -> int:
        return len(self.components)

    def duplicates(self) -> dict[int, tuple[int, ...]]:
        """Base variable id -> copies in lifting sequence: all components'
        world-1 copies, then world-2 copies, then world-3 copies. Unit roots
        map to their single shared copy."""
        base_to_om_unit = dict(zip(self.unit_base_ids, self.unit_om_ids))
        out: dict[int, tuple[int, ...]] = {}
        for base in base_to_om_unit:
            out[base] = (base_to_om_unit[base],)
        root_ids = {b for comp in self.components for b in comp.roots}
        for base in root_ids:
            out[base] = tuple(
                comp.roots[base] for comp in self.components if base in comp.roots
            )
        endo_ids = {b for comp in self.components for b in comp.endo}
        for base in endo_ids:
            copies = []
            for world in (1, 2, 3):
                for comp in self.components:
                    om_id = comp.endo.get(base, {}).get(world)
                    if om_id is not None:
                        copies.append(om_id)
            out[base] = tuple(copies)
        return out


def _fresh_name(taken: set[str], base: str) -> str:
    name = base
    while name in taken:
        name += "'"
    return name


def build_objective_model(
    scm: Scm, objective: ObjectiveFunction, drop_worlds: bool = True
) -> ObjectiveModel:
    """Construct the objective model and its Reverse-MAP evidence pair.

    With ``drop_worlds`` (the default) each component keeps only the worlds
    its term uses; pass False to keep full triplets for every component.
    The base model must be functional unless every term is treatment-free.
    """
    report = validate_objective(scm, objective)
    if not report.ok:
        raise ModelError("invalid objective: " + "; ".join(report.violations))
    needs_functional = any(t.x or t.v for t in objective.terms)
    base_report = validate(scm)
    if not base_report.is_valid_bn:
        raise ModelError("base model is not a valid Bayesian network")
    if needs_functional and not base_report.functional:
        raise ModelError(
            "objective has interventions: the base model must be functional"
        )

    units = tuple(sorted(objective.unit_ids))
    unit_set = set(units)
    nonunit_roots = tuple(r for r in scm.roots if r not in unit_set)
    endo = scm.endogenous()
    n = objective.n

    variables: list[Variable] = []
    parents: dict[int, tuple[int, ...]] = {}
    tables: dict[int, np.ndarray] = {}
    taken: set[str] = set()

    def add(name: str, base: Variable) -> int:
        vid = len(variables)
        name = _fresh_name(taken, name)
        taken.add(name)
        variables.append(Variable(vid, name, base.cardinality, base.state_names))
        return vid

    unit_om = {}
    for u in units:
        vid = add(scm.var(u).name, scm.var(u))
        parents[vid] = ()
        tables[vid] = scm.tables[u]
        unit_om[u] = vid

    components: list[ComponentMap] = []
    for i, term in enumerate(objective.terms, start=1):
        worlds = term.retained_worlds() if drop_worlds else (1, 2, 3)
        roots_om: dict[int, int] = {}
        for r in nonunit_roots:
            vid = add(f"{scm.var(r).name}^{i}", scm.var(r))
            parents[vid] = ()
            tables[vid] = scm.tables[r]
            roots_om[r] = vid
        endo_om: dict[int, dict[int, int]] = {b: {} for b in endo}
        for world in worlds:
            for b in endo:
                name = bracket_name(f"{scm.var(b).name}^{i}", world)
                endo_om[b][world] = add(name, scm.var(b))
        for world in worlds:
            for b in endo:
                vid = endo_om[b][world]
                ps = []
                for p in scm.parents[b]:
                    if p in unit_set:
                        ps.append(unit_om[p])
                    elif p in roots_om:
                        ps.append(roots_om[p])
                    else:
                        ps.append(endo_om[p][world])
                parents[vid] = tuple(ps)
                tables[vid] = scm.tables[b]
        # Mutilate the treated copies: world 2 at x, world 3 at v.
        for world, treatment in ((2, term.x), (3, term.v)):
            for b, state in treatment.items():
                vid = endo_om[b][world]
                point = np.zeros(scm.var(b).cardinality)
                point[state] = 1.0
                parents[vid] = ()
                tables[vid] = point
        components.append(
            ComponentMap(worlds, {b: dict(w) for b, w in endo_om.items()}, roots_om)
        )

    h_id = len(variables)
    h_name = _fresh_name(taken, "H")
    taken.add(h_name)
    variables.append(
        Variable(h_id, h_name, n, tuple(f"h{i}" for i in range(1, n + 1)))
    )
    parents[h_id] = ()
    tables[h_id] = np.asarray([t.weight for t in objective.terms], dtype=np.float64)

    # Rewire every outcome copy: H becomes its last parent; rows for other
    # mixture states clamp the outcome to this term's target state.
    for i, term in enumerate(objective.terms):
        comp = components[i]
        for world, outcome in ((2, term.y), (3, term.w)):
            for b, state in outcome.items():
                vid = comp.endo[b][world]
                old = tables[vid]
                card = scm.var(b).cardinality
                new = np.empty(old.shape[:-1] + (n, card))
                clamp = np.zeros(card)
                clamp[state] = 1.0
                new[..., :, :] = clamp
                new[..., i, :] = old
                parents[vid] = parents[vid] + (h_id,)
                tables[vid] = new

    e1: Instantiation = {}
    e2: Instantiation = {}
    for i, term in enumerate(objective.terms):
        comp = components[i]
        for b, state in term.y.items():
            e1[comp.endo[b][2]] = state
        for b, state in term.w.items():
            e1[comp.endo[b][3]] = state
        for b, state in term.x.items():
            e2[comp.endo[b][2]] = state
        for b, state in term.v.items():
            e2[comp.endo[b][3]] = state
        for b, state in term.e.items():
            e2[comp.endo[b][1]] = state

    model = Scm(variables, parents, tables)
    return ObjectiveModel(
        model=model,
        h_id=h_id,
        e1=e1,
        e2=e2,
        unit_base_ids=units,
        unit_om_ids=tuple(unit_om[u] for u in units),
        components=tuple(components),
        base_endo_count=len(endo),
        base_nonunit_exo_count=len(nonunit_roots),
    )


# -- reference evaluation -------------------------------------------------------


def _bn_term_profile(
    scm: Scm, term: ObjectiveTerm, unit_ids: tuple[int, ...]
) -> tuple[np.ndarray, np.ndarray]:
    """Observational term profile Pr(y, w | e, u) for treatment-free terms on
    a general Bayesian network, via the full joint factor."""
    from .factor import multiply_all

    if term.x or term.v:
        raise ModelError("treatment-free evaluation requested for a term with treatments")
    space = math.prod(v.cardinality for v in scm.variables)
    if space > 1 << 20:
        raise ModelError("model too large for full-joint evaluation")
    joint = multiply_all(scm.cpt_factor(v.id) for v in scm.variables)
    event = dict(term.e)
    conflict = False
    for inst in (term.y, term.w):
        for vid, state in inst.items():
            if event.setdefault(vid, state) != state:
                conflict = True
    others = [v for v in joint.vids if v not in unit_ids]
    den = joint.reduce(term.e).sum_out(others)
    num = den.scale(0.0) if conflict else joint.reduce(event).sum_out(others)
    defined = den.values > 0
    values = np.divide(num.values, den.values, out=np.zeros_like(num.values), where=defined)
    return values, defined


def evaluate_L_profile(
    scm: Scm, objective: ObjectiveFunction
) -> tuple[np.ndarray, np.ndarray]:
    """L(u) for every unit instantiation u, with a definedness mask.

    The value grid axes follow ascending unit ids. A unit is undefined
    (masked False, value 0) when some term's conditioning mass Pr(e^i, u)
    is zero.
    """
    unit_ids = tuple(sorted(objective.unit_ids))
    functional = validate(scm).functional
    shape = tuple(scm.var(v).cardinality for v in unit_ids)
    total = np.zeros(shape)
    defined = np.ones(shape, dtype=bool)
    for term in objective.terms:
        if functional:
            values, ok = counterfactual_term_profile(
                scm, term.x, term.y, term.v, term.w, term.e, unit_ids
            )
        else:
            values, ok = _bn_term_profile(scm, term, unit_ids)
        total += term.weight * values
        defined &= ok
    total = np.where(defined, total, 0.0)
    return total, defined


def evaluate_L_brute(
    scm: Scm, objective: ObjectiveFunction, u: Mapping[int, int]
) -> float | None:
    """Reference value of L(u) via the per-term enumeration oracle; None when
    the unit is undefined (some term conditions on a zero-mass event)."""
    unit_ids = tuple(sorted(objective.unit_ids))
    if set(u) != set(unit_ids):
        raise ModelError("u must assign exactly the unit variables")
    values, defined = evaluate_L_profile(scm, objective)
    idx = tuple(u[v] for v in unit_ids)
    if not bool(defined[idx]):
        return None
    return float(values[idx])


# -- size accounting -------------------------------------------------------------


@dataclass(frozen=True)
class SizeStats:
    """Measured and predicted sizes of an objective model."""

    nodes: int
    parameters: int
    nodes_formula: int

    @property
    def matches_formula(self) -> bool:
        return self.nodes == self.nodes_formula


def model_size_stats(om: ObjectiveModel) -> SizeStats:
    """Node/parameter counts; nodes are checked against the closed form
    sum_i (worlds_i * |endo| + |exo \\ U|) + |U| + 1."""
    formula = (
        sum(
            len(comp.worlds) * om.base_endo_count + om.base_nonunit_exo_count
            for comp in om.components
        )
        + len(om.unit_base_ids)
        + 1
    )
    return SizeStats(
        nodes=om.model.n,
        parameters=om.model.size_parameters(),
        nodes_formula=formula,
    )


# -- on-disk format ---------------------------------------------------------------


def save_objective(scm: Scm, objective: ObjectiveFunction) -> bytes:
    """Serialize to the objective JSON document (omitted keys mean empty)."""
    doc: dict = {
        "units": [scm.var(v).name for v in sorted(objective.unit_ids)],
        "terms": [],
    }
    for term in objective.terms:
        entry: dict = {"weight": term.weight}
        for key, inst in (("x", term.x), ("y", term.y), ("v", term.v),
                          ("w", term.w), ("e", term.e)):
            if inst:
                entry[key] = scm.names_of(inst)
        doc["terms"].append(entry)
    return json.dumps(doc, separators=(",", ":")).encode("utf-8")


def load_objective(scm: Scm, data: bytes | str) -> ObjectiveFunction:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as err:
        raise ModelError(f"malformed objective document: {err}") from None
    if "units" not in doc or "terms" not in doc:
        raise ModelError("objective document needs 'units' and 'terms'")
    unit_ids = tuple(scm.by_name(name).id for name in doc["units"])
    terms = []
    for i, entry in enumerate(doc["terms"], start=1):
        if "weight" not in entry:
            raise ModelError(f"term {i} has no weight")
        insts = {}
        for key in ("x", "y", "v", "w", "e"):
            insts[key] = scm.instantiation(entry.get(key, {}))
        terms.append(ObjectiveTerm(weight=float(entry["weight"]), **insts))
    return ObjectiveFunction(unit_ids, tuple(terms))
