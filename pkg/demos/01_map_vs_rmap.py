"""MAP and Reverse-MAP can disagree, even on a two-node model.

The bundled two-node model has a root U (prior 0.2 / 0.8) and a child V with
P(v1|u1) = 0.6, P(v1|u2) = 0.3. Seeing V = v1:

* MAP asks which unit is most probable jointly with the evidence,
  max_u P(u, v1) -- the prior drags the answer toward u2.
* Reverse-MAP asks which unit makes the evidence most likely,
  max_u P(v1 | u) -- that is u1, regardless of how rare u1 is.
"""

from unitsel import fixture_path, load_model, map_ve, rmap_ve

scm = load_model(open(fixture_path("two_node.json"), "rb").read(),
                 allow_nonfunctional=True)
U = scm.by_name("U").id
V = scm.by_name("V").id

print("model:", ", ".join(v.name for v in scm.variables))
print("prior over U:", dict(zip(scm.var(U).state_names, scm.tables[U].tolist())))
print()

m = map_ve(scm, [U], {V: 0})
print(f"MAP:         argmax_u P(u, v1)  -> {scm.names_of(m.instantiation)}"
      f"  value {m.value:.4f}")

r = rmap_ve(scm, [U], {V: 0}, {})
print(f"Reverse-MAP: argmax_u P(v1 | u) -> {scm.names_of(r.instantiation)}"
      f"  value {r.value:.4f}")
print()
print("The two argmaxes differ: joint mass 0.8*0.3 = 0.24 beats 0.2*0.6 = 0.12,")
print("but as an explanation u1 is twice as good (0.6 vs 0.3).")
