"""Twin/triplet construction, mutilation and the counterfactual reduction."""

import math

import numpy as np
import pytest

from unitsel import (
    ModelError,
    counterfactual_oracle,
    counterfactual_query,
    make_scm,
    mutilate,
    n_world_model,
    posterior,
    query_prob,
    triplet_model,
    twin_model,
    validate,
)
from unitsel.inference import InconsistentEvidenceError
from unitsel.worlds import counterfactual_term_profile, enumerate_instantiations
from corpus import small_scm


def chain_scm():
    # U -> X -> Y with functional internals
    return make_scm(
        [("U", ["0", "1"]), ("X", ["0", "1"]), ("Y", ["0", "1"])],
        {"U": [], "X": ["U"], "Y": ["X"]},
        {"U": [0.3, 0.7], "X": [1, 0, 0, 1], "Y": [0, 1, 1, 0]},
    )


def test_triplet_counts_and_names():
    scm = chain_scm()
    tm, wm = triplet_model(scm)
    assert tm.n == 7
    names = {v.name for v in tm.variables}
    assert names == {"U", "X", "Y", "[X]", "[Y]", "[[X]]", "[[Y]]"}
    # exogenous CPT appears once, endogenous ones three times
    assert wm.copies[0] == (0, 0, 0)
    assert len(set(wm.copies[1])) == 3


def test_n_world_count_formula():
    scm = small_scm(3, lo=5, hi=8)
    shared = scm.roots[:1]
    for n in (1, 2, 4):
        nw, wm = n_world_model(scm, shared, n)
        assert nw.n == n * (scm.n - len(shared)) + len(shared)
    one, _ = n_world_model(scm, scm.roots, 1)
    assert one.n == scm.n
    assert [v.name for v in one.variables][-len(scm.endogenous()):]


def test_n_world_shared_must_be_roots():
    scm = chain_scm()
    with pytest.raises(ModelError):
        n_world_model(scm, [1], 2)


def test_world1_marginal_matches_base():
    scm = small_scm(11, lo=5, hi=8)
    tm, wm = triplet_model(scm)
    for vid in scm.endogenous():
        base = posterior(scm, {vid}, {})
        copy_id = wm.copy_of(vid, 1)
        lifted = posterior(tm, {copy_id}, {})
        assert np.allclose(base.values, lifted.values, rtol=1e-9)


def test_mutilate_point_mass_and_idempotence():
    scm = chain_scm()
    cut = mutilate(scm, {1: 1})
    assert cut.parents[1] == ()
    assert list(cut.tables[1]) == [0.0, 1.0]
    marg = posterior(cut, {1}, {})
    assert np.allclose(marg.values, [0.0, 1.0])
    twice = mutilate(cut, {1: 1})
    assert twice.tables[1].tolist() == cut.tables[1].tolist()
    root_cut = mutilate(scm, {0: 0})
    assert list(root_cut.tables[0]) == [1.0, 0.0]


def test_counterfactual_query_mapping():
    scm = chain_scm()
    x, y = {1: 0}, {2: 0}
    v, w = {1: 1}, {2: 1}
    e = {1: 0, 2: 0}
    model, e1, e2 = counterfactual_query(scm, x, y, v, w, e)
    by_name = {model.var(k).name: s for k, s in e1.items()}
    assert by_name == {"[Y]": 0, "[[Y]]": 1}
    by_name2 = {model.var(k).name: s for k, s in e2.items()}
    assert by_name2 == {"[X]": 0, "[[X]]": 1, "X": 0, "Y": 0}
    # mutilated treatments are parentless point masses
    assert model.parents[model.by_name("[X]").id] == ()


def test_counterfactual_query_rejects_overlap_and_roots():
    scm = chain_scm()
    with pytest.raises(ModelError):
        counterfactual_query(scm, {1: 0}, {1: 1}, {}, {}, {})
    with pytest.raises(ModelError):
        counterfactual_query(scm, {0: 0}, {2: 0}, {}, {}, {})


def test_empty_treatments_reduce_to_observational():
    scm = small_scm(5, lo=5, hi=7)
    y_vid = scm.endogenous()[-1]
    model, e1, e2 = counterfactual_query(scm, {}, {y_vid: 0}, {}, {y_vid: 1}, {})
    # Pr([y0], [[y1]]) with no interventions: worlds agree given shared roots,
    # so the joint outcome probability is 0 unless y0 == y1.
    val = query_prob(model, e1, e2)
    assert math.isclose(val, 0.0, abs_tol=1e-12)
    model2, e1b, e2b = counterfactual_query(scm, {}, {y_vid: 0}, {}, {y_vid: 0}, {})
    base = posterior(scm, {y_vid}, {})[{y_vid: 0}]
    assert math.isclose(query_prob(model2, e1b, e2b), base, rel_tol=1e-9)


def _oracle_vs_query(scm, x, y, v, w, e):
    model, e1, e2 = counterfactual_query(scm, x, y, v, w, e)
    units = tuple(scm.roots)
    for u in enumerate_instantiations(scm, units):
        expected = counterfactual_oracle(scm, x, y, v, w, e, u)
        u_mapped = {
            model.by_name(scm.var(r).name).id: s for r, s in u.items()
        }
        if expected is None:
            with pytest.raises(InconsistentEvidenceError):
                query_prob(model, e1, {**e2, **u_mapped})
            continue
        got = query_prob(model, e1, {**e2, **u_mapped})
        assert math.isclose(got, expected, rel_tol=1e-9, abs_tol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_query_equals_oracle_on_random_models(seed):
    rng = np.random.default_rng([31, seed])
    scm = small_scm(seed + 100, lo=5, hi=8)
    endo = list(scm.endogenous())
    rng.shuffle(endo)
    x = {endo[0]: int(rng.integers(0, 2))}
    y = {endo[1]: int(rng.integers(0, 2))}
    v = {endo[0]: int(rng.integers(0, 2))}
    w = {endo[2 % len(endo)]: int(rng.integers(0, 2))} if len(endo) > 2 else {}
    overlap = (set(x) | set(v)) & (set(y) | set(w))
    if overlap:
        w = {}
    e = {endo[-1]: int(rng.integers(0, 2))} if endo[-1] not in set(x) | set(v) else {}
    _oracle_vs_query(scm, x, y, v, w, e)


def test_oracle_trivial_cases():
    scm = chain_scm()
    # worlds coincide: interventional probability
    val = counterfactual_oracle(scm, {1: 0}, {2: 1}, {1: 0}, {2: 1}, {}, {0: 0})
    assert val == 1.0  # Y = not X, do(X=0) -> Y=1 deterministically
    # deterministic unit pins everything
    val2 = counterfactual_oracle(scm, {1: 0}, {2: 0}, {}, {}, {}, {0: 0})
    assert val2 in (0.0, 1.0)
    with pytest.raises(ModelError):
        counterfactual_oracle(
            make_scm(
                [("U", ["0", "1"]), ("V", ["0", "1"])],
                {"U": [], "V": ["U"]},
                {"U": [0.5, 0.5], "V": [0.6, 0.4, 0.3, 0.7]},
            ),
            {}, {1: 0}, {}, {}, {}, {0: 0},
        )


def test_oracle_undefined_unit():
    scm = make_scm(
        [("U", ["0", "1"]), ("X", ["0", "1"])],
        {"U": [], "X": ["U"]},
        {"U": [1.0, 0.0], "X": [1, 0, 0, 1]},
    )
    # conditioning on X=1 is impossible when U=0 (and theta(u1)=0 kills u=1)
    assert counterfactual_oracle(scm, {}, {1: 1}, {}, {}, {1: 1}, {0: 0}) is None


@pytest.mark.parametrize("seed", range(6))
def test_triplet_symmetry(seed):
    rng = np.random.default_rng([67, seed])
    scm = small_scm(seed + 300, lo=5, hi=7)
    endo = list(scm.endogenous())
    rng.shuffle(endo)
    x = {endo[0]: 0}
    y = {endo[1]: 1}
    v = {endo[0]: 1}
    w = {endo[1]: 0}
    units = tuple(scm.roots)
    a, da = counterfactual_term_profile(scm, x, y, v, w, {}, units)
    b, db = counterfactual_term_profile(scm, v, w, x, y, {}, units)
    assert np.array_equal(da, db)
    assert np.allclose(a, b, rtol=1e-12)


def test_twin_model_counts():
    scm = small_scm(17, lo=5, hi=8)
    tw, _ = twin_model(scm)
    assert tw.n == 2 * len(scm.endogenous()) + len(scm.roots)
    assert validate(tw).is_valid_scm == validate(scm).is_valid_scm
