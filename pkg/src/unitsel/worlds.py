"""Multi-world constructions for counterfactual evaluation.

A counterfactual probability Pr(y_x, w_v | e) on an SCM becomes an
observational query on an auxiliary model holding several copies ("worlds")
of the SCM that share exogenous variables: world 1 carries the observation e,
world 2 the intervention do(x), world 3 the intervention do(v). Copies in
world 2 are written [X], copies in world 3 [[X]]; generic n-world copies are
written X^k.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .factor import Instantiation, Variable
from .model import ModelError, Scm


@dataclass(frozen=True)
class WorldMap:
    """Correspondence between base variables and their per-world copies.

    ``copies[base_id]`` lists one id per world; shared variables repeat the
    same id in every world.
    """

    n_worlds: int
    shared: frozenset[int]
    copies: dict[int, tuple[int, ...]]

    def copy_of(self, base_id: int, world: int) -> int:
        """Id of the copy of ``base_id`` in ``world`` (1-based)."""
        return self.copies[base_id][world - 1]

    def map_instantiation(self, inst: Mapping[int, int], world: int) -> Instantiation:
        return {self.copy_of(vid, world): state for vid, state in inst.items()}


def bracket_name(name: str, world: int) -> str:
    """World-copy naming: world 1 = X, world 2 = [X], world 3 = [[X]]."""
    return "[" * (world - 1) + name + "]" * (world - 1)


def superscript_name(name: str, world: int) -> str:
    """Generic n-world naming: X^k."""
    return f"{name}^{world}"


def n_world_model(
    scm: Scm,
    shared: Iterable[int],
    n: int,
    namer: Callable[[str, int], str] | None = None,
) -> tuple[Scm, WorldMap]:
    """Join ``n`` copies of ``scm`` so that the ``shared`` roots appear once.

    Non-shared variables are duplicated per world with their CPTs copied;
    shared roots keep a single copy with edges into every world.
    """
    if n < 1:
        raise ModelError(f"world count must be >= 1, got {n}")
    shared = frozenset(shared)
    root_set = set(scm.roots)
    bad = shared - root_set
    if bad:
        names = ", ".join(scm.var(v).name for v in sorted(bad))
        raise ModelError(f"shared variables must be roots, got non-root(s): {names}")
    if namer is None:
        namer = superscript_name if n > 1 else (lambda name, world: name)

    variables: list[Variable] = []
    parents: dict[int, tuple[int, ...]] = {}
    tables: dict[int, np.ndarray] = {}

    def add_var(name: str, base: Variable) -> int:
        vid = len(variables)
        variables.append(Variable(vid, name, base.cardinality, base.state_names))
        return vid

    copies: dict[int, list[int]] = {v.id: [] for v in scm.variables}
    for v in scm.variables:
        if v.id in shared:
            vid = add_var(v.name, v)
            copies[v.id] = [vid] * n
            parents[vid] = ()
            tables[vid] = scm.tables[v.id]
    for world in range(1, n + 1):
        for v in scm.variables:
            if v.id in shared:
                continue
            vid = add_var(namer(v.name, world), v)
            copies[v.id].append(vid)
    for world in range(1, n + 1):
        for v in scm.variables:
            if v.id in shared:
                continue
            vid = copies[v.id][world - 1]
            parents[vid] = tuple(copies[p][world - 1] for p in scm.parents[v.id])
            tables[vid] = scm.tables[v.id]

    wm = WorldMap(n, shared, {b: tuple(c) for b, c in copies.items()})
    return Scm(variables, parents, tables), wm


def triplet_model(scm: Scm) -> tuple[Scm, WorldMap]:
    """Three copies sharing all exogenous variables (bracket naming)."""
    return n_world_model(scm, scm.roots, 3, namer=bracket_name)


def twin_model(scm: Scm) -> tuple[Scm, WorldMap]:
    """Two copies sharing all exogenous variables (bracket naming)."""
    return n_world_model(scm, scm.roots, 2, namer=bracket_name)


def mutilate(scm: Scm, interventions: Mapping[int, int]) -> Scm:
    """Cut the edges into each intervened variable and clamp it.

    The intervened variable loses all parents and gets a point-mass prior on
    the intervened state. Idempotent for fixed interventions.
    """
    if not interventions:
        return scm
    parents = dict(scm.parents)
    tables = dict(scm.tables)
    for vid, state in interventions.items():
        v = scm.var(vid)
        if not 0 <= state < v.cardinality:
            raise ModelError(f"state {state} out of range for {v.name!r}")
        point = np.zeros(v.cardinality)
        point[state] = 1.0
        parents[vid] = ()
        tables[vid] = point
    return Scm(scm.variables, parents, tables)


def counterfactual_query(
    scm: Scm,
    x: Mapping[int, int],
    y: Mapping[int, int],
    v: Mapping[int, int],
    w: Mapping[int, int],
    e: Mapping[int, int],
) -> tuple[Scm, Instantiation, Instantiation]:
    """Reduce Pr(y_x, w_v | e) to Pr(e1 | e2) on a mutilated triplet model.

    World 2 is mutilated at [X]=x, world 3 at [[V]]=v. Returns the model and
    the evidence pair e1 = {[Y]=y, [[W]]=w}, e2 = {[X]=x, [[V]]=v, E=e}.
    Conditioning on the intervened values in e2 is tautological after
    mutilation but kept to mirror the reduction statement.
    """
    overlap = (set(x) | set(v)) & (set(y) | set(w))
    if overlap:
        names = ", ".join(scm.var(i).name for i in sorted(overlap))
        raise ModelError(f"treatments overlap outcomes: {names}")
    for inst in (x, y, v, w, e):
        for vid in inst:
            if scm.is_root(vid):
                raise ModelError(
                    f"query variable {scm.var(vid).name!r} must be endogenous"
                )
    tm, wm = triplet_model(scm)
    interventions: Instantiation = {}
    interventions.update(wm.map_instantiation(x, 2))
    interventions.update(wm.map_instantiation(v, 3))
    mutilated = mutilate(tm, interventions)
    e1: Instantiation = {}
    e1.update(wm.map_instantiation(y, 2))
    e1.update(wm.map_instantiation(w, 3))
    e2: Instantiation = {}
    e2.update(wm.map_instantiation(x, 2))
    e2.update(wm.map_instantiation(v, 3))
    e2.update(wm.map_instantiation(e, 1))
    return mutilated, e1, e2


# -- ground-truth oracle -------------------------------------------------------


def _root_grids(scm: Scm, root_ids: tuple[int, ...]) -> dict[int, np.ndarray]:
    """Index grids over the joint state space of ``root_ids`` (ascending)."""
    cards = [scm.var(r).cardinality for r in root_ids]
    grids = np.indices(cards)
    return {r: grids[i] for i, r in enumerate(root_ids)}


def _world_values(
    scm: Scm,
    root_arrays: dict[int, np.ndarray],
    interventions: Mapping[int, int],
    shape: tuple[int, ...],
) -> dict[int, np.ndarray]:
    """Vectorized forward evaluation of all variables over a root grid."""
    values: dict[int, np.ndarray] = {}
    for vid in scm.topological_order():
        if vid in interventions:
            values[vid] = np.full(shape, interventions[vid], dtype=np.int64)
        elif scm.is_root(vid):
            values[vid] = root_arrays[vid]
        else:
            fn = scm.structural_map(vid)
            rows = tuple(values[p] for p in scm.parents[vid])
            values[vid] = fn[rows]
    return values


def counterfactual_term_profile(
    scm: Scm,
    x: Mapping[int, int],
    y: Mapping[int, int],
    v: Mapping[int, int],
    w: Mapping[int, int],
    e: Mapping[int, int],
    unit_ids: Iterable[int],
) -> tuple[np.ndarray, np.ndarray]:
    """Pr(y_x, w_v | e, u) for every unit instantiation u, by enumeration.

    Returns ``(values, defined)`` arrays over the unit grid (axes follow
    ascending unit ids). ``defined`` is False where Pr(e, u) = 0, in which
    case the value entry is 0. Requires a functional SCM.
    """
    unit_ids = tuple(sorted(unit_ids))
    for vid in unit_ids:
        if not scm.is_root(vid):
            raise ModelError(f"unit variable {scm.var(vid).name!r} must be a root")
    roots = tuple(sorted(scm.roots))
    shape = tuple(scm.var(r).cardinality for r in roots)
    grids = _root_grids(scm, roots)

    base = _world_values(scm, grids, {}, shape)
    under_x = _world_values(scm, grids, x, shape) if x else base
    under_v = _world_values(scm, grids, v, shape) if v else base

    def indicator(values: dict[int, np.ndarray], inst: Mapping[int, int]) -> np.ndarray:
        ind = np.ones(shape, dtype=bool)
        for vid, state in inst.items():
            ind &= values[vid] == state
        return ind

    weight = np.ones(shape)
    for i, r in enumerate(roots):
        prior = scm.tables[r]
        axis_shape = [1] * len(roots)
        axis_shape[i] = prior.size
        weight = weight * prior.reshape(axis_shape)

    ind_e = indicator(base, e)
    ind_yw = indicator(under_x, y) & indicator(under_v, w)
    num = weight * (ind_e & ind_yw)
    den = weight * ind_e

    other_axes = tuple(i for i, r in enumerate(roots) if r not in unit_ids)
    num_u = num.sum(axis=other_axes) if other_axes else num
    den_u = den.sum(axis=other_axes) if other_axes else den
    defined = den_u > 0
    values = np.divide(num_u, den_u, out=np.zeros_like(num_u), where=defined)
    return values, defined


def counterfactual_oracle(
    scm: Scm,
    x: Mapping[int, int],
    y: Mapping[int, int],
    v: Mapping[int, int],
    w: Mapping[int, int],
    e: Mapping[int, int],
    u: Mapping[int, int],
) -> float | None:
    """Ground-truth Pr(y_x, w_v | e, u) by exogenous enumeration.

    ``u`` assigns a subset of the roots. Returns None when the conditioning
    mass Pr(e, u) is zero (the value is undefined for this unit).
    """
    from .model import validate

    if not validate(scm).functional:
        raise ModelError("counterfactual oracle requires a functional SCM")
    unit_ids = tuple(sorted(u))
    values, defined = counterfactual_term_profile(scm, x, y, v, w, e, unit_ids)
    idx = tuple(u[r] for r in unit_ids)
    if not bool(defined[idx]):
        return None
    return float(values[idx])


def enumerate_instantiations(
    scm: Scm, vids: Iterable[int]
) -> Iterable[Instantiation]:
    """All joint instantiations of ``vids`` in ascending-id lexicographic order."""
    vids = tuple(sorted(vids))
    ranges = [range(scm.var(v).cardinality) for v in vids]
    for states in itertools.product(*ranges):
        yield dict(zip(vids, states))


def unit_grid_size(scm: Scm, vids: Iterable[int]) -> int:
    return math.prod(scm.var(v).cardinality for v in vids)
