"""Structural causal models as discrete Bayesian networks with functional CPTs.

An :class:`Scm` is a DAG over :class:`~unitsel.factor.Variable` objects. Roots
(exogenous variables) carry priors; internal (endogenous) variables carry
CPTs. A legal SCM additionally has *functional* internal CPTs: every entry is
0 or 1, encoding a structural equation.

CPT tables are stored in declaration order: one axis per parent (in the
declared parent order) followed by the child axis, so the flat serialization
has the child state varying fastest. :meth:`Scm.cpt_factor` converts to the
canonical sorted-scope factor layout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .factor import Factor, FactorError, Instantiation, Variable

ROW_SUM_TOL = 1e-9
FUNCTIONAL_TOL = 1e-12


class ModelError(ValueError):
    """Raised on malformed models or model documents."""


class Scm:
    """A discrete DAG model: variables, parent lists and CPT tables.

    Construction checks structure only (known ids, table shapes). Semantic
    legality (acyclicity, row normalization, functional internal CPTs) is
    reported by :func:`validate` so that deliberately broken models can be
    built in tests.
    """

    def __init__(
        self,
        variables: Sequence[Variable],
        parents: Mapping[int, Sequence[int]],
        tables: Mapping[int, np.ndarray],
    ) -> None:
        self.variables: tuple[Variable, ...] = tuple(variables)
        ids = [v.id for v in self.variables]
        if ids != list(range(len(ids))):
            raise ModelError("variable ids must be dense 0..n-1 in declaration order")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ModelError("variable names must be unique")
        self._by_name = {v.name: v for v in self.variables}

        self.parents: dict[int, tuple[int, ...]] = {}
        for v in self.variables:
            if v.id not in parents:
                raise ModelError(f"no parent list for variable {v.name!r}")
            ps = tuple(int(p) for p in parents[v.id])
            if len(set(ps)) != len(ps):
                raise ModelError(f"duplicate parent for variable {v.name!r}")
            for p in ps:
                if not 0 <= p < len(self.variables):
                    raise ModelError(f"unknown parent id {p} for variable {v.name!r}")
            if v.id in ps:
                raise ModelError(f"variable {v.name!r} lists itself as parent")
            self.parents[v.id] = ps

        self.tables: dict[int, np.ndarray] = {}
        for v in self.variables:
            if v.id not in tables:
                raise ModelError(f"no CPT for variable {v.name!r}")
            shape = tuple(self.variables[p].cardinality for p in self.parents[v.id])
            shape += (v.cardinality,)
            arr = np.asarray(tables[v.id], dtype=np.float64)
            if arr.size != int(np.prod(shape)):
                raise ModelError(
                    f"CPT for variable {v.name!r} has {arr.size} entries, "
                    f"expected {int(np.prod(shape))}"
                )
            arr = arr.reshape(shape).copy()
            arr.flags.writeable = False
            self.tables[v.id] = arr

        self.children: dict[int, tuple[int, ...]] = {v.id: () for v in self.variables}
        kids: dict[int, list[int]] = {v.id: [] for v in self.variables}
        for v in self.variables:
            for p in self.parents[v.id]:
                kids[p].append(v.id)
        self.children = {vid: tuple(sorted(c)) for vid, c in kids.items()}
        self.roots: tuple[int, ...] = tuple(
            v.id for v in self.variables if not self.parents[v.id]
        )
        self._factors: dict[int, Factor] = {}
        self._topo: tuple[int, ...] | None = None

    # -- lookups --------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.variables)

    def var(self, vid: int) -> Variable:
        return self.variables[vid]

    def by_name(self, name: str) -> Variable:
        try:
            return self._by_name[name]
        except KeyError:
            raise ModelError(f"no variable named {name!r}") from None

    def is_root(self, vid: int) -> bool:
        return not self.parents[vid]

    def endogenous(self) -> tuple[int, ...]:
        return tuple(v.id for v in self.variables if self.parents[v.id])

    def instantiation(self, by_name: Mapping[str, str]) -> Instantiation:
        """Translate a {variable name: state name} mapping to id/index form."""
        out: Instantiation = {}
        for name, state in by_name.items():
            v = self.by_name(name)
            out[v.id] = v.state_index(state)
        return out

    def names_of(self, inst: Mapping[int, int]) -> dict[str, str]:
        return {
            self.var(vid).name: self.var(vid).state_names[state]
            for vid, state in sorted(inst.items())
        }

    def cpt_factor(self, vid: int) -> Factor:
        """The node's CPT as a canonical sorted-scope factor."""
        if vid not in self._factors:
            scope = self.parents[vid] + (vid,)
            order = sorted(range(len(scope)), key=lambda i: scope[i])
            sorted_scope = tuple(scope[i] for i in order)
            table = self.tables[vid].transpose(order)
            cards = tuple(self.var(v).cardinality for v in sorted_scope)
            self._factors[vid] = Factor(sorted_scope, cards, np.ascontiguousarray(table))
        return self._factors[vid]

    def topological_order(self) -> tuple[int, ...]:
        if self._topo is None:
            indeg = {v.id: len(self.parents[v.id]) for v in self.variables}
            ready = sorted(vid for vid, d in indeg.items() if d == 0)
            order: list[int] = []
            while ready:
                vid = ready.pop(0)
                order.append(vid)
                for c in self.children[vid]:
                    indeg[c] -= 1
                    if indeg[c] == 0:
                        ready.append(c)
                ready.sort()
            if len(order) != self.n:
                raise ModelError("parent relation is cyclic")
            self._topo = tuple(order)
        return self._topo

    def is_acyclic(self) -> bool:
        try:
            self.topological_order()
            return True
        except ModelError:
            return False

    def size_parameters(self) -> int:
        """Total number of CPT entries (the model size |G|)."""
        return int(sum(t.size for t in self.tables.values()))

    def node_functional(self, vid: int) -> bool:
        t = self.tables[vid]
        return bool(np.all(np.minimum(np.abs(t), np.abs(t - 1.0)) <= FUNCTIONAL_TOL))

    def structural_map(self, vid: int) -> np.ndarray:
        """For a functional node, the implied state per parent row (argmax)."""
        return np.argmax(self.tables[vid], axis=-1)

    def forward_eval(
        self, root_inst: Mapping[int, int], interventions: Mapping[int, int] | None = None
    ) -> Instantiation:
        """Evaluate all structural equations given a full root instantiation.

        Intervened variables are clamped to their intervention value and their
        equations ignored. Requires functional internal CPTs.
        """
        interventions = interventions or {}
        full: Instantiation = {}
        for vid in self.topological_order():
            if vid in interventions:
                full[vid] = interventions[vid]
            elif self.is_root(vid):
                full[vid] = root_inst[vid]
            else:
                row = tuple(full[p] for p in self.parents[vid])
                full[vid] = int(self.structural_map(vid)[row])
        return full


@dataclass
class ValidationReport:
    """Outcome of the semantic checks on a model."""

    acyclic: bool
    normalized: bool
    functional_status: dict[int, bool] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)

    @property
    def functional(self) -> bool:
        return all(self.functional_status.values())

    @property
    def is_valid_bn(self) -> bool:
        return self.acyclic and self.normalized

    @property
    def is_valid_scm(self) -> bool:
        return self.is_valid_bn and self.functional


def validate(scm: Scm) -> ValidationReport:
    """Check acyclicity, CPT row normalization and functional internal CPTs.

    Violations are collected, not raised: a model passing all checks is a
    legal SCM; one passing all but the functional check is a legal Bayesian
    network.
    """
    violations: list[str] = []
    acyclic = scm.is_acyclic()
    if not acyclic:
        violations.append("parent relation is cyclic")

    normalized = True
    for v in scm.variables:
        rows = scm.tables[v.id].reshape(-1, v.cardinality)
        bad = np.abs(rows.sum(axis=1) - 1.0) > ROW_SUM_TOL
        if np.any(bad):
            normalized = False
            violations.append(
                f"CPT rows of {v.name!r} do not sum to 1 "
                f"(first bad row index {int(np.argmax(bad))})"
            )

    functional_status: dict[int, bool] = {}
    for vid in scm.endogenous():
        ok = scm.node_functional(vid)
        functional_status[vid] = ok
        if not ok:
            violations.append(
                f"internal variable {scm.var(vid).name!r} has a non-functional CPT"
            )
    return ValidationReport(acyclic, normalized, functional_status, violations)


def joint_prob(scm: Scm, full: Mapping[int, int]) -> float:
    """Probability of a full instantiation: one CPT entry per node."""
    p = 1.0
    for v in scm.variables:
        try:
            idx = tuple(full[q] for q in scm.parents[v.id]) + (full[v.id],)
        except KeyError as missing:
            raise ModelError(f"instantiation missing variable id {missing}") from None
        p *= float(scm.tables[v.id][idx])
    return p


def evidence_to_lambdas(scm: Scm, evidence: Mapping[int, int]) -> list[Factor]:
    """One single-variable 0/1 indicator factor per evidence assignment."""
    out = []
    for vid in sorted(evidence):
        v = scm.var(vid)
        out.append(Factor.indicator(vid, v.cardinality, evidence[vid]))
    return out


# -- on-disk format -----------------------------------------------------------


def save_model(scm: Scm) -> bytes:
    """Serialize to the canonical UTF-8 JSON document (byte-stable)."""
    doc = {
        "variables": [
            {"name": v.name, "states": list(v.state_names)} for v in scm.variables
        ],
        "parents": {
            v.name: [scm.var(p).name for p in scm.parents[v.id]]
            for v in scm.variables
        },
        "cpts": {v.name: scm.tables[v.id].reshape(-1).tolist() for v in scm.variables},
    }
    return json.dumps(doc, separators=(",", ":")).encode("utf-8")


def load_model(data: bytes | str, allow_nonfunctional: bool = False) -> Scm:
    """Parse the JSON model document and reject illegal models.

    Acyclicity and normalization violations always fail the load;
    non-functional internal CPTs fail unless ``allow_nonfunctional`` is set
    (used for plain Bayesian networks in tests and examples).
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as err:
        raise ModelError(f"malformed model document: {err}") from None
    for key in ("variables", "parents", "cpts"):
        if key not in doc:
            raise ModelError(f"model document missing {key!r}")

    variables = []
    for i, entry in enumerate(doc["variables"]):
        try:
            name = entry["name"]
            states = tuple(entry["states"])
        except (TypeError, KeyError) as err:
            raise ModelError(f"bad variable entry at position {i}: {err}") from None
        variables.append(Variable(i, name, len(states), states))
    by_name = {v.name: v for v in variables}
    if len(by_name) != len(variables):
        raise ModelError("duplicate variable names")

    def resolve(name: str, context: str) -> int:
        if name not in by_name:
            raise ModelError(f"unknown variable {name!r} referenced by {context}")
        return by_name[name].id

    parents: dict[int, tuple[int, ...]] = {}
    for name in by_name:
        if name not in doc["parents"]:
            raise ModelError(f"no parent list for variable {name!r}")
    for name, plist in doc["parents"].items():
        vid = resolve(name, "parents")
        parents[vid] = tuple(resolve(p, f"parents of {name!r}") for p in plist)

    tables: dict[int, np.ndarray] = {}
    for name in by_name:
        if name not in doc["cpts"]:
            raise ModelError(f"no CPT for variable {name!r}")
    for name, flat in doc["cpts"].items():
        vid = resolve(name, "cpts")
        tables[vid] = np.asarray(flat, dtype=np.float64)

    try:
        scm = Scm(variables, parents, tables)
    except FactorError as err:
        raise ModelError(str(err)) from None

    report = validate(scm)
    if not report.acyclic or not report.normalized:
        raise ModelError("; ".join(report.violations))
    if not report.functional and not allow_nonfunctional:
        raise ModelError("; ".join(report.violations))
    return scm


def make_scm(
    names_states: Sequence[tuple[str, Sequence[str]]],
    parents_by_name: Mapping[str, Sequence[str]],
    tables_by_name: Mapping[str, np.ndarray | Sequence[float]],
) -> Scm:
    """Convenience constructor from name-keyed pieces (tests and demos)."""
    variables = [
        Variable(i, name, len(states), tuple(states))
        for i, (name, states) in enumerate(names_states)
    ]
    ids = {v.name: v.id for v in variables}
    parents = {
        ids[name]: tuple(ids[p] for p in ps) for name, ps in parents_by_name.items()
    }
    tables = {ids[name]: np.asarray(t, dtype=np.float64) for name, t in tables_by_name.items()}
    return Scm(variables, parents, tables)
