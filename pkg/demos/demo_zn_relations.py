"""The Z_N component presentation: carries, root-of-unity projections, the
polynomial relation family, and the PBW symmetry gate."""

from qcurrents.zn_vertex import (
    CarryTable,
    adversarial_rule,
    emit_XY_relation,
    master_rule,
    mu_projection,
    pbw_symmetry_check,
    relation_dsl,
    verify_plantes_equivalence,
)

print("== carry table for N = 3 ==")
print(" ", CarryTable(3).table())

print("\n== root-of-unity partial fraction (exact cyclotomic arithmetic) ==")
for N, p in [(2, 1), (3, 2), (5, 3)]:
    _, _, ok = mu_projection(N, p, 12)
    print(f"  N={N}, p={p}: exact =", ok)

print("\n== the relation family in component variables (N=2, p=q=0) ==")
lhs, rhs = emit_XY_relation(2, 0, 0, 3)
print(relation_dsl("XY(0,0)", lhs, rhs))

print("== equivalence with the master relation, both directions (N=2) ==")
for name, ok, _ in verify_plantes_equivalence(2, 4, 8):
    print(f"  {name}: {ok}")

print("\n== PBW symmetry gate ==")
ok, _ = pbw_symmetry_check(master_rule(3))
print("  master rule a(z,w)a(w,z) = b(z,w)b(w,z):", ok)
ok, res = pbw_symmetry_check(adversarial_rule())
print("  adversarial rule fails with residual:",
      {k: dict(t) for k, t in res.terms.items()})
