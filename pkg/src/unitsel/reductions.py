"""Boolean formulas compiled into SCM circuits, with exact ground truths.

A formula over Boolean variables becomes an SCM with one uniform-prior binary
root per variable and one functional gate node per connective; the single
sentinel leaf takes value 1 exactly on satisfying assignments. Together with
the exact satisfying-count ratios this gives executable versions of the
hardness-proof constructions, testable against truth-table enumeration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

import numpy as np

from .factor import Variable
from .model import ModelError, Scm

EMAJSAT_MAX_V = 20


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    child: "Node"


@dataclass(frozen=True)
class And:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Or:
    left: "Node"
    right: "Node"


Node = Union[Var, Not, And, Or]


@dataclass(frozen=True)
class Formula:
    """An AST over named Boolean variables, optionally partitioned into
    existential (u) and counting (v) blocks."""

    root: Node
    variables: tuple[str, ...]
    u_vars: tuple[str, ...] | None = None
    v_vars: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        used = collect_names(self.root)
        missing = used - set(self.variables)
        if missing:
            raise ModelError(f"formula uses undeclared variables: {sorted(missing)}")
        if (self.u_vars is None) != (self.v_vars is None):
            raise ModelError("a partition must give both u and v blocks")
        if self.u_vars is not None:
            both = set(self.u_vars) | set(self.v_vars)
            if set(self.u_vars) & set(self.v_vars) or both != set(self.variables):
                raise ModelError("u and v must partition the declared variables")

    def with_partition(self, u_vars, v_vars) -> "Formula":
        return Formula(self.root, self.variables, tuple(u_vars), tuple(v_vars))


def collect_names(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Not):
        return collect_names(node.child)
    return collect_names(node.left) | collect_names(node.right)


def gate_count(node: Node) -> int:
    """Number of connective nodes (compiled gate nodes) in the AST."""
    if isinstance(node, Var):
        return 0
    if isinstance(node, Not):
        return 1 + gate_count(node.child)
    return 1 + gate_count(node.left) + gate_count(node.right)


def evaluate(node: Node, assignment: Mapping[str, int]) -> bool:
    if isinstance(node, Var):
        return bool(assignment[node.name])
    if isinstance(node, Not):
        return not evaluate(node.child, assignment)
    if isinstance(node, And):
        return evaluate(node.left, assignment) and evaluate(node.right, assignment)
    return evaluate(node.left, assignment) or evaluate(node.right, assignment)


def vector_evaluate(node: Node, arrays: Mapping[str, np.ndarray]) -> np.ndarray:
    """Evaluate over numpy boolean arrays (broadcasting truth tables)."""
    if isinstance(node, Var):
        return arrays[node.name]
    if isinstance(node, Not):
        return ~vector_evaluate(node.child, arrays)
    if isinstance(node, And):
        return vector_evaluate(node.left, arrays) & vector_evaluate(node.right, arrays)
    return vector_evaluate(node.left, arrays) | vector_evaluate(node.right, arrays)


def truth_table(formula: Formula) -> np.ndarray:
    """Boolean grid over the declared variables (axes in declaration order)."""
    k = len(formula.variables)
    grids = np.indices((2,) * k).astype(bool)
    arrays = {name: grids[i] for i, name in enumerate(formula.variables)}
    return vector_evaluate(formula.root, arrays)


# -- DIMACS ----------------------------------------------------------------------


def parse_dimacs(text: str) -> Formula:
    """Parse DIMACS CNF into a right-nested and/or AST over x1..xN.

    Clauses fold their literals from the right, and so does the top-level
    conjunction, matching the two-child inductive circuit rules.
    """
    n_vars = n_clauses = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ModelError(f"line {lineno}: bad DIMACS header {line!r}")
            try:
                n_vars, n_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise ModelError(f"line {lineno}: non-integer header counts") from None
            if n_vars < 1:
                raise ModelError(f"line {lineno}: need at least one variable")
            continue
        if n_vars is None:
            raise ModelError(f"line {lineno}: clause before DIMACS header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ModelError(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                if not current:
                    raise ModelError(f"line {lineno}: empty clause")
                clauses.append(current)
                current = []
                continue
            if not 1 <= abs(lit) <= n_vars:
                raise ModelError(
                    f"line {lineno}: literal {lit} outside declared range 1..{n_vars}"
                )
            current.append(lit)
    if current:
        raise ModelError("last clause not terminated by 0")
    if n_vars is None:
        raise ModelError("missing DIMACS header")
    if len(clauses) != n_clauses:
        raise ModelError(
            f"clause count mismatch: header says {n_clauses}, found {len(clauses)}"
        )
    if not clauses:
        raise ModelError("formula has no clauses")

    def literal(lit: int) -> Node:
        v = Var(f"x{abs(lit)}")
        return v if lit > 0 else Not(v)

    def fold_or(lits: list[int]) -> Node:
        node = literal(lits[-1])
        for lit in reversed(lits[:-1]):
            node = Or(literal(lit), node)
        return node

    root = fold_or(clauses[-1])
    for clause in reversed(clauses[:-1]):
        root = And(fold_or(clause), root)
    return Formula(root, tuple(f"x{i}" for i in range(1, n_vars + 1)))


# -- circuit compilation -----------------------------------------------------------


NOT_TABLE = np.array([[0.0, 1.0], [1.0, 0.0]])
AND_TABLE = np.array(
    [[[1.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]]]
)  # (left, right, gate): gate = left * right
OR_TABLE = np.array(
    [[[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [0.0, 1.0]]]
)  # gate = min(1, left + right): the saturating reading of the sum rule
IDENTITY_TABLE = np.array([[1.0, 0.0], [0.0, 1.0]])  # and/or of a node with itself


def compile_formula(formula: Formula) -> tuple[Scm, int]:
    """Compile to an SCM circuit; returns the model and the sentinel node id.

    Every declared variable becomes a uniform binary root; every connective a
    functional gate (NOT = 1 - input, AND = product, OR = saturating sum).
    A bare variable formula has the variable root itself as sentinel.
    """
    variables: list[Variable] = []
    parents: dict[int, tuple[int, ...]] = {}
    tables: dict[int, np.ndarray] = {}
    taken = set(formula.variables)
    ids: dict[str, int] = {}

    for name in formula.variables:
        vid = len(variables)
        variables.append(Variable(vid, name, 2, ("0", "1")))
        parents[vid] = ()
        tables[vid] = np.array([0.5, 0.5])
        ids[name] = vid

    counter = 0

    def gate_name() -> str:
        nonlocal counter
        counter += 1
        name = f"s{counter}"
        while name in taken:
            name += "_"
        taken.add(name)
        return name

    def build(node: Node) -> int:
        if isinstance(node, Var):
            return ids[node.name]
        if isinstance(node, Not):
            child = build(node.child)
            vid = len(variables)
            variables.append(Variable(vid, gate_name(), 2, ("0", "1")))
            parents[vid] = (child,)
            tables[vid] = NOT_TABLE
            return vid
        left = build(node.left)
        right = build(node.right)
        vid = len(variables)
        variables.append(Variable(vid, gate_name(), 2, ("0", "1")))
        if left == right:
            # Repeated literal (e.g. a DIMACS clause "1 1 0"): both inputs
            # are the same node, and the gate reduces to the identity.
            parents[vid] = (left,)
            tables[vid] = IDENTITY_TABLE
        else:
            parents[vid] = (left, right)
            tables[vid] = AND_TABLE if isinstance(node, And) else OR_TABLE
        return vid

    sentinel = build(formula.root)
    return Scm(variables, parents, tables), sentinel


# -- exact ground truths -------------------------------------------------------------


def emajsat_ratio(formula: Formula, u: Mapping[str, int]) -> Fraction:
    """card({v : uv satisfies the formula}) / card(v-space), exactly.

    ``u`` must assign every variable of the existential block; the counting
    block is enumerated (refused above EMAJSAT_MAX_V variables).
    """
    if formula.u_vars is None:
        raise ModelError("formula has no (u, v) partition")
    if set(u) != set(formula.u_vars):
        raise ModelError("u must assign exactly the existential variables")
    v_vars = tuple(formula.v_vars)
    if len(v_vars) > EMAJSAT_MAX_V:
        raise ModelError(
            f"counting block has {len(v_vars)} variables; bound is {EMAJSAT_MAX_V}"
        )
    shape = (2,) * len(v_vars)
    grids = np.indices(shape).astype(bool) if v_vars else ()
    arrays: dict[str, np.ndarray] = {
        name: np.asarray(bool(u[name])) for name in formula.u_vars
    }
    arrays.update({name: grids[i] for i, name in enumerate(v_vars)})
    sat = vector_evaluate(formula.root, arrays)
    count = int(np.count_nonzero(np.broadcast_to(sat, shape))) if v_vars else int(bool(sat))
    return Fraction(count, 2 ** len(v_vars))


def sat_via_rmap(
    formula: Formula, method: str = "ve"
) -> tuple[bool, dict[str, int] | None]:
    """Satisfiability via Reverse-MAP on the compiled circuit.

    All variables are targets; e1 sets the sentinel to 1 and e2 is empty.
    The optimum is positive iff the formula is satisfiable, in which case the
    maximizing unit is a satisfying assignment (returned as {name: 0/1}).
    """
    from .inference import brute_rmap, rmap_ve

    scm, sentinel = compile_formula(formula)
    targets = [scm.by_name(name).id for name in formula.variables]
    e1 = {sentinel: 1}
    run = rmap_ve if method == "ve" else brute_rmap
    result = run(scm, targets, e1, {})
    if result.value == 0.0:
        return False, None
    witness = {
        scm.var(vid).name: state for vid, state in result.instantiation.items()
    }
    return True, witness


# -- formula JSON ----------------------------------------------------------------------


def _node_to_json(node: Node) -> dict:
    if isinstance(node, Var):
        return {"op": "var", "name": node.name}
    if isinstance(node, Not):
        return {"op": "not", "child": _node_to_json(node.child)}
    op = "and" if isinstance(node, And) else "or"
    return {"op": op, "left": _node_to_json(node.left), "right": _node_to_json(node.right)}


def _node_from_json(doc: dict) -> Node:
    try:
        op = doc["op"]
    except (TypeError, KeyError):
        raise ModelError(f"bad formula node: {doc!r}") from None
    if op == "var":
        return Var(doc["name"])
    if op == "not":
        return Not(_node_from_json(doc["child"]))
    if op in ("and", "or"):
        cls = And if op == "and" else Or
        return cls(_node_from_json(doc["left"]), _node_from_json(doc["right"]))
    raise ModelError(f"unknown formula op {op!r}")


def save_formula(formula: Formula) -> bytes:
    doc: dict = {
        "variables": list(formula.variables),
        "root": _node_to_json(formula.root),
    }
    if formula.u_vars is not None:
        doc["u"] = list(formula.u_vars)
        doc["v"] = list(formula.v_vars)
    return json.dumps(doc, separators=(",", ":")).encode("utf-8")


def load_formula(data: bytes | str) -> Formula:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as err:
        raise ModelError(f"malformed formula document: {err}") from None
    root = _node_from_json(doc.get("root"))
    variables = tuple(doc.get("variables") or sorted(collect_names(root)))
    u = tuple(doc["u"]) if "u" in doc else None
    v = tuple(doc["v"]) if "v" in doc else None
    return Formula(root, variables, u, v)
