"""The hardness-proof constructions, run as executable circuits.

A Boolean formula compiles into an SCM: one fair-coin root per variable, one
functional gate per connective, and a single sentinel leaf that fires exactly
on satisfying assignments. Two identities fall out and are checked here:

* Pr(sentinel = 1 | u) equals the fraction of counting-block assignments
  that satisfy the formula (the majority-counting reduction), and
* some unit u makes Pr(sentinel = 1 | u) positive iff the formula is
  satisfiable, with the maximizing unit a satisfying assignment (the plain
  satisfiability reduction, Reverse-MAP with threshold zero).
"""

from fractions import Fraction

from unitsel import posterior, validate
from unitsel.reductions import (
    compile_formula,
    emajsat_ratio,
    evaluate,
    parse_dimacs,
    sat_via_rmap,
)
from unitsel.worlds import enumerate_instantiations

DIMACS = """\
p cnf 4 4
1 -2 0
2 3 0
-1 -3 0
-2 4 0
"""

formula = parse_dimacs(DIMACS)
scm, sentinel = compile_formula(formula)
print(f"formula over {formula.variables}: {scm.n} circuit nodes "
      f"(functional SCM: {validate(scm).is_valid_scm})")

marg = posterior(scm, {sentinel}, {})
print(f"Pr(sentinel = 1) = {marg[{sentinel: 1}]:.6f} "
      f"(= #models / 2^4)")

partitioned = formula.with_partition(("x1", "x2"), ("x3", "x4"))
print("\nmajority counts per existential block u:")
u_ids = [scm.by_name(n).id for n in partitioned.u_vars]
for u in enumerate_instantiations(scm, u_ids):
    named = {scm.var(k).name: s for k, s in u.items()}
    ratio = emajsat_ratio(partitioned, named)
    flag = "majority" if ratio > Fraction(1, 2) else "        "
    print(f"  u = {named}: {ratio}  {flag}")

ok, witness = sat_via_rmap(formula)
print(f"\nsatisfiable: {ok}; witness: {witness}")
assert ok and evaluate(formula.root, witness)

contradiction = parse_dimacs("p cnf 1 2\n1 0\n-1 0\n")
ok2, _ = sat_via_rmap(contradiction)
print(f"(x1) and (not x1) satisfiable: {ok2}")
