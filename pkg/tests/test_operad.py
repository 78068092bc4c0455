"""Colored operads, composite products, and the equivalence verdict.

Oracle strategy: composite-product ranks are counted by brute-force
enumeration of decorated two-level trees canonized under the top
symmetric group, cross-checked against the closed formula n! 2^(n-1)
for the regular representation composed with itself; word substitution
is pinned by hand cases and by replaying both associativity shapes on
random words.  The axiom checker is trusted only after it rejects
corrupted inputs.
"""

import json
import random
from itertools import product as iproduct
from math import factorial

import pytest
from hypothesis import given, settings, strategies as st

from opdk import corpus, operad as op
from opdk import permutations as perms
from opdk.doldkan import normalize_operad, normalize_operad_data
from opdk.operad import (
    Collection,
    OpMorphism,
    associative_operad,
    collection_check,
    composite_product,
    dk_equivalence,
    enumerate_signatures,
    graft_signature,
    homotopy_category,
    identity_collection,
    integrated_normalize,
    operad_check,
    operad_from_json,
    operad_to_json,
    perm_block_insert,
    perm_inner_insert,
    restrict_colors,
    sig_act,
    word_act,
    word_graft,
)
from opdk.chain import homology
from opdk.exactlin import LinearMap
from opdk.rings import QQ, ZZ, Zmod
from opdk.simp import moore_complex

F5 = Zmod(5)
X = "x"


def sig(n, color=X):
    return ((color,) * n, color)


# -- oracles ----------------------------------------------------------------


def two_level_tree_rank(n: int, max_arity: int) -> int:
    """Brute count of (w, phi, (v_j)) modulo the top symmetric group.

    w is a linear order of the k slots, phi assigns the n inputs to
    slots (surjectively, since there are no nullary operations), v_j
    orders each fiber; s in S_k acts on all three at once.
    """
    seen = set()
    for k in range(1, max_arity + 1):
        for phi in iproduct(range(k), repeat=n):
            fibers = [tuple(i for i in range(n) if phi[i] == j)
                      for j in range(k)]
            if any(not f for f in fibers):
                continue
            for w in perms.all_permutations(k):
                for vs in iproduct(*[perms.all_permutations(len(f))
                                     for f in fibers]):
                    best = None
                    for s in perms.all_permutations(k):
                        inv = perms.inverse(s)
                        enc = (tuple(inv[l] for l in w),
                               tuple(inv[phi[i]] for i in range(n)),
                               tuple(vs[s[j]] for j in range(k)))
                        if best is None or enc < best:
                            best = enc
                    seen.add(best)
    return len(seen)


def test_two_level_oracle_matches_closed_formula():
    for n in range(1, 5):
        assert two_level_tree_rank(n, 4) == factorial(n) * 2 ** (n - 1)


# -- word substitution ------------------------------------------------------


def test_word_graft_hand_cases():
    assert word_graft((0, 1), 0, (0, 1)) == (0, 1, 2)
    assert word_graft((1, 0), 0, (0, 1)) == (2, 0, 1)
    assert word_graft((1, 0), 1, (1, 0)) == (2, 1, 0)
    assert word_graft((0,), 0, (1, 0)) == (1, 0)
    # nullary deletes the letter and closes the gap
    assert word_graft((0, 1), 1, ()) == (0,)
    assert word_graft((2, 0, 1), 0, ()) == (1, 0)


def test_word_act_is_a_right_action():
    rng = random.Random(11)
    for _ in range(50):
        n = rng.randint(1, 5)
        w = tuple(rng.sample(range(n), n))
        s = tuple(rng.sample(range(n), n))
        t = tuple(rng.sample(range(n), n))
        assert word_act(word_act(w, s), t) == word_act(w, perms.compose(s, t))


def test_word_graft_sequential_associativity():
    rng = random.Random(12)
    for _ in range(100):
        k, m, l = rng.randint(1, 3), rng.randint(1, 3), rng.randint(1, 3)
        w = tuple(rng.sample(range(k), k))
        v = tuple(rng.sample(range(m), m))
        u = tuple(rng.sample(range(l), l))
        i, j = rng.randrange(k), rng.randrange(m)
        assert word_graft(word_graft(w, i, v), i + j, u) == \
            word_graft(w, i, word_graft(v, j, u))


def test_word_graft_parallel_associativity():
    rng = random.Random(13)
    for _ in range(100):
        k = rng.randint(2, 4)
        m, l = rng.randint(1, 3), rng.randint(1, 3)
        w = tuple(rng.sample(range(k), k))
        v = tuple(rng.sample(range(m), m))
        u = tuple(rng.sample(range(l), l))
        i = rng.randrange(k - 1)
        j = rng.randint(i + 1, k - 1)
        assert word_graft(word_graft(w, i, v), j + m - 1, u) == \
            word_graft(word_graft(w, j, u), i, v)


def test_block_insert_hand_case():
    # x.(12) o_0 y relabels to slot 1 of x; the worked permutation
    assert perm_block_insert((1, 0), 0, 2) == (1, 2, 0)
    assert perm_inner_insert(2, 0, (1, 0)) == (1, 0, 2)
    assert perm_inner_insert(3, 1, (1, 0)) == (0, 2, 1, 3)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_block_insert_matches_signature_bookkeeping(seed):
    rng = random.Random(seed)
    k, m = rng.randint(1, 4), rng.randint(1, 3)
    s = tuple(rng.sample(range(k), k))
    i = rng.randrange(k)
    colors = ["a", "b", "c"]
    osig = (tuple(rng.choice(colors) for _ in range(k)), rng.choice(colors))
    ssig = sig_act(osig, s)
    isig = (tuple(rng.choice(colors) for _ in range(m)), ssig[0][i])
    rho = perm_block_insert(s, i, m)
    assert sig_act(graft_signature(osig, s[i], isig), rho) == \
        graft_signature(ssig, i, isig)
    assert sorted(rho) == list(range(k + m - 1))


# -- the regular representation operad --------------------------------------


def test_associative_operad_chain_checks():
    assert operad_check(associative_operad(ZZ, "chain", 4, 0)) == []


def test_associative_operad_simplicial_checks():
    assert operad_check(associative_operad(ZZ, "simplicial", 3, 2)) == []


def test_associative_operad_unital_checks():
    P = associative_operad(ZZ, "chain", 3, 0, unital=True)
    assert operad_check(P) == []
    assert P.collection.level(((), X)).level(0).rank == 1


def test_checker_rejects_corrupted_composition():
    P = associative_operad(ZZ, "chain", 3, 0)
    key = (sig(2), 0, sig(2))
    f = P.compositions[key]
    bad = dict(f.component(0).entries)
    (r, c), v = next(iter(bad.items()))
    bad[(r, c)] = v + 1
    comps = [LinearMap(f.component(0).source, f.component(0).target, bad)]
    P.compositions[key] = P.ops.make_map(f.source, f.target, comps)
    assert operad_check(P) != []


def test_checker_rejects_corrupted_action():
    P = associative_operad(ZZ, "chain", 3, 0)
    s2 = sig(2)
    swap = (1, 0)
    f = P.collection.actions[s2][swap]
    lev0 = f.component(0).source
    # a shear is invertible but not an involution, so the law
    # action(swap) . action(swap) = id must fail
    shear = LinearMap(lev0, lev0, {(0, 0): 1, (0, 1): 1, (1, 1): 1})
    P.collection.actions[s2][swap] = P.ops.make_map(f.source, f.target, [shear])
    assert any(v[0] == "action-law" for v in collection_check(P.collection))


def test_checker_rejects_non_simplicial_structure_map():
    P = associative_operad(F5, "simplicial", 2, 2)
    key = (sig(2), 0, sig(1))
    f = P.composition(*key)
    comps = list(f.components)
    # break commutation with the face maps at the top level only
    top = dict(comps[-1].entries)
    top[(0, 0)] = F5.add(top.get((0, 0), F5.zero), F5.one)
    comps[-1] = LinearMap(comps[-1].source, comps[-1].target, top)
    P.compositions[key] = P.ops.make_map(f.source, f.target, comps)
    bad = operad_check(P)
    assert ("composition-not-a-map", key) in bad


# -- composite product ------------------------------------------------------


def test_composite_of_regular_representations_matches_oracle():
    A = associative_operad(ZZ, "chain", 4, 0)
    res = composite_product(A.collection, A.collection)
    for n in range(1, 5):
        expect = two_level_tree_rank(n, 4)
        assert res.collection.level(sig(n)).level(0).rank == expect
        assert expect == factorial(n) * 2 ** (n - 1)
    assert collection_check(res.collection) == []


def test_composite_simplicial_constant_levels():
    A = associative_operad(ZZ, "simplicial", 2, 2)
    res = composite_product(A.collection, A.collection)
    assert res.collection.level(sig(2)).ranks() == (4, 4, 4)
    assert collection_check(res.collection) == []


def test_composite_unit_laws():
    A = associative_operad(ZZ, "chain", 3, 0)
    M = A.collection
    I = identity_collection(ZZ, "chain", (X,), 3, 0)
    IM = composite_product(I, M).collection
    MI = composite_product(M, I).collection
    for n in range(1, 4):
        assert IM.level(sig(n)).ranks() == M.level(sig(n)).ranks()
        assert MI.level(sig(n)).ranks() == M.level(sig(n)).ranks()
        for s in perms.all_permutations(n):
            assert IM.action(sig(n), s) == M.action(sig(n), s)
            assert MI.action(sig(n), s) == M.action(sig(n), s)


def _homology_fingerprint(coll):
    """Level ranks and homology presentations below the truncation
    degree, per signature: a complete iso invariant for bounded free
    complexes over a PID."""
    out = {}
    for s in coll.signatures():
        lev = coll.level(s)
        K = lev if coll.base == "chain" else moore_complex(lev)
        out[s] = (tuple(K.ranks()),
                  tuple((homology(K, n).rank,
                         tuple(homology(K, n).invariant_factors))
                        for n in range(K.max_degree)))
    return out


@pytest.mark.parametrize("ring,action", [(F5, "trivial"), (F5, "sign"),
                                         (QQ, "sign"), (ZZ, "trivial")])
def test_composite_associativity_invariants(ring, action):
    rng = random.Random(101)
    L = corpus.random_collection(rng, ring, "chain", 3, 2, 2, action)
    M = corpus.random_collection(rng, ring, "chain", 3, 2, 2, action)
    N = corpus.random_collection(rng, ring, "chain", 3, 2, 2, action)
    left = composite_product(composite_product(L, M).collection, N).collection
    right = composite_product(L, composite_product(M, N).collection).collection
    assert _homology_fingerprint(left) == _homology_fingerprint(right)


def _sign_and_nullary(ring):
    """Rank-one binary level on which the swap acts by -1, against a
    collection with a nullary level, so the swap fixes a composite term."""
    ops = op._ops_for("chain", ring, 0)
    one = ops.unit_obj()
    minus = ops.make_map(one, one, [LinearMap(
        one.level(0), one.level(0), {(0, 0): ring.normalize(-1)})])
    M = Collection(ring, "chain", (X,), 2, 0, {sig(2): one},
                   {sig(2): {(1, 0): minus}})
    N = Collection(ring, "chain", (X,), 2, 0, {((), X): one, sig(1): one})
    return M, N


def test_composite_sign_action_over_integers_refuses_torsion():
    M, N = _sign_and_nullary(ZZ)
    assert collection_check(M) == []
    with pytest.raises(ValueError, match="torsion"):
        composite_product(M, N)


def test_composite_sign_action_over_a_field_is_exact():
    M, N = _sign_and_nullary(F5)
    res = composite_product(M, N)
    # the fixed term dies in the quotient: 2x = 0 forces x = 0 mod 5
    assert res.collection.level(((), X)).level(0).rank == 0


def test_composite_orbit_fast_path_matches_generic():
    A = associative_operad(F5, "chain", 3, 0)
    fast = composite_product(A.collection, A.collection).collection
    op._FORCE_GENERIC = True
    try:
        slow = composite_product(A.collection, A.collection).collection
    finally:
        op._FORCE_GENERIC = False
    for n in range(1, 4):
        assert fast.level(sig(n)).ranks() == slow.level(sig(n)).ranks()
    assert collection_check(slow) == []


def test_composite_with_nullary_sets_truncation_flag():
    A = associative_operad(ZZ, "chain", 3, 0, unital=True)
    res = composite_product(A.collection, A.collection)
    assert res.collection.truncated
    B = associative_operad(ZZ, "chain", 3, 0)
    assert not composite_product(B.collection, B.collection).collection.truncated


# -- morphisms ---------------------------------------------------------------


def test_identity_morphism_and_composition():
    P = associative_operad(F5, "chain", 3, 0)
    i = OpMorphism.identity(P)
    ii = i @ i
    for s in P.collection.signatures():
        assert ii.level_map(s) == i.level_map(s)


def test_point_inclusion_is_checked_and_valid():
    T = corpus.trivial_operad(F5, "simplicial", 2)
    Q = corpus.indiscrete_operad(F5, "simplicial", 2,
                                 disk=corpus.acyclic_disk(F5, 2))
    phi = corpus.point_inclusion(T, Q, "a")
    assert phi.map_sig((("*",), "*")) == (("a",), "a")


def test_morphism_rejecting_unit_violation():
    T = corpus.trivial_operad(F5, "simplicial", 2)
    Q = corpus.indiscrete_operad(F5, "simplicial", 2,
                                 disk=corpus.acyclic_disk(F5, 2))
    phi = corpus.point_inclusion(T, Q, "a")
    doubled = {s: Q.ops.make_map(
        f.source, f.target,
        [c.scale(2) for c in f.components])
        for s, f in phi.level_maps.items()}
    with pytest.raises(ValueError, match="unit"):
        OpMorphism(T, Q, phi.color_map, doubled)


# -- restriction and serialization -------------------------------------------


def test_restrict_colors_stays_an_operad():
    Q = corpus.indiscrete_operad(F5, "simplicial", 2,
                                 disk=corpus.acyclic_disk(F5, 2))
    R = restrict_colors({"p": "a", "q": "b", "r": "a"}, Q, ("p", "q", "r"))
    assert operad_check(R) == []
    assert R.collection.level((("p",), "q")).ranks() == \
        Q.collection.level((("a",), "b")).ranks()


@pytest.mark.parametrize("base,D", [("chain", 0), ("simplicial", 2)])
def test_json_round_trip(base, D):
    A = associative_operad(F5, base, 3, D)
    data = json.loads(json.dumps(operad_to_json(A)))
    B = operad_from_json(data)
    assert operad_check(B) == []
    s2, s1 = sig(2), sig(1)
    assert B.composition(s2, 0, s1) == A.composition(s2, 0, s1)
    assert B.collection.action(s2, (1, 0)) == A.collection.action(s2, (1, 0))
    assert B.collection.level(sig(3)).ranks() == \
        A.collection.level(sig(3)).ranks()


def test_json_missing_generator_raises():
    A = associative_operad(F5, "chain", 2, 0)
    data = operad_to_json(A)
    data["actions"] = []
    with pytest.raises(ValueError, match="generator"):
        operad_from_json(data)


# -- normalization of operads -------------------------------------------------


def test_normalize_associative_operad():
    NA = normalize_operad(associative_operad(ZZ, "simplicial", 3, 2))
    Ac = associative_operad(ZZ, "chain", 3, 2)
    for n in range(1, 4):
        assert NA.collection.level(sig(n)).ranks() == \
            Ac.collection.level(sig(n)).ranks()
    f = NA.composition(sig(2), 0, sig(1))
    g = Ac.composition(sig(2), 0, sig(1))
    assert f.component(0).entries == g.component(0).entries
    s2 = sig(2)
    assert NA.collection.action(s2, (1, 0)).component(0).entries == \
        Ac.collection.action(s2, (1, 0)).component(0).entries


def test_normalize_nilpotent_two_color():
    P = corpus.nilpotent_two_color_operad(F5, 3)
    NP = normalize_operad(P)
    # gamma of R in degree one normalizes back to exactly that
    assert NP.collection.level((("a", "b"), "a")).ranks() == (0, 1, 0, 0)
    assert NP.collection.level((("a", "a"), "b")).ranks() == (0, 2, 0, 0)


def test_normalize_commutes_with_restriction():
    Q = corpus.indiscrete_operad(F5, "simplicial", 2,
                                 disk=corpus.acyclic_disk(F5, 2))
    alpha = {"p": "a", "q": "b"}
    NR = normalize_operad(restrict_colors(alpha, Q, ("p", "q")))
    RN = restrict_colors(alpha, normalize_operad(Q), ("p", "q"))
    for s in NR.collection.signatures():
        assert NR.collection.level(s).ranks() == RN.collection.level(s).ranks()
    for c in ("p", "q"):
        s1 = ((c,), c)
        assert NR.composition(s1, 0, s1) == RN.composition(s1, 0, s1)
    cross = ((("q",), "p"), 0, (("p",), "q"))
    assert NR.composition(*cross) == RN.composition(*cross)


# -- homotopy category and the equivalence verdict ----------------------------


def test_homotopy_category_of_the_regular_representation():
    ho = homotopy_category(associative_operad(ZZ, "chain", 2, 1))
    assert ho.identities[X] == (1,)
    assert ho.compose_classes(X, X, X, (1,), (1,)) == (1,)
    assert ho.compose_classes(X, X, X, (2,), (3,)) == (6,)


def test_dk_positive_with_planted_inverses():
    T = corpus.trivial_operad(F5, "simplicial", 2)
    Q = corpus.indiscrete_operad(F5, "simplicial", 2,
                                 disk=corpus.acyclic_disk(F5, 2))
    v = dk_equivalence(corpus.point_inclusion(T, Q, "a"))
    assert v.status == "equivalence"
    assert v.witnesses["b"][0] == "a"
    c, u_cls, v_cls = v.witnesses["b"]
    ho = homotopy_category(Q)
    assert ho.compose_classes("a", "b", "a", v_cls, u_cls) == ho.identities["a"]
    assert ho.compose_classes("b", "a", "b", u_cls, v_cls) == ho.identities["b"]


def test_dk_negative_essential_surjectivity():
    T = corpus.trivial_operad(F5, "simplicial", 2)
    Q = corpus.disconnected_operad(F5, "simplicial", 2,
                                   disk=corpus.acyclic_disk(F5, 2))
    v = dk_equivalence(corpus.point_inclusion(T, Q, "a"))
    assert v.status == "not_equivalence"
    assert any("not isomorphic" in r for r in v.reasons)
    assert all(ok for ok in v.levelwise.values())


def test_dk_negative_levelwise():
    T = corpus.trivial_operad(F5, "simplicial", 2)
    Q = corpus.indiscrete_operad(F5, "simplicial", 2,
                                 disk=corpus.loop_disk(F5, 2))
    v = dk_equivalence(corpus.point_inclusion(T, Q, "a"))
    assert v.status == "not_equivalence"
    assert any("quasi-isomorphism" in r for r in v.reasons)


def test_dk_inconclusive_over_the_integers():
    T = corpus.trivial_operad(ZZ, "chain", 1)
    Q = corpus.scaled_pair_operad(ZZ, 4)
    v = dk_equivalence(corpus.point_inclusion(T, Q, "a"))
    assert v.status == "inconclusive"
    assert any("within bound" in r for r in v.reasons)


def test_dk_unit_factor_over_the_integers_is_definitive():
    T = corpus.trivial_operad(ZZ, "chain", 1)
    Q = corpus.scaled_pair_operad(ZZ, 1)
    assert dk_equivalence(corpus.point_inclusion(T, Q, "a")).status == \
        "equivalence"


@pytest.mark.parametrize("maker,expect", [
    (lambda: corpus.indiscrete_operad(F5, "simplicial", 2,
                                      disk=corpus.acyclic_disk(F5, 2)),
     "equivalence"),
    (lambda: corpus.disconnected_operad(F5, "simplicial", 2,
                                        disk=corpus.acyclic_disk(F5, 2)),
     "not_equivalence"),
])
def test_dk_verdict_transports_through_normalization(maker, expect):
    T = corpus.trivial_operad(F5, "simplicial", 2)
    phi = corpus.point_inclusion(T, maker(), "a")
    before = dk_equivalence(phi)
    after = dk_equivalence(integrated_normalize(phi))
    assert before.status == expect
    assert after.status == expect


def test_normalized_morphism_levels_are_the_normalized_maps():
    T = corpus.trivial_operad(F5, "simplicial", 2)
    Q = corpus.indiscrete_operad(F5, "simplicial", 2,
                                 disk=corpus.acyclic_disk(F5, 2))
    phi = corpus.point_inclusion(T, Q, "a")
    nphi = integrated_normalize(phi)
    s1 = (("*",), "*")
    assert nphi.source.collection.level(s1).ranks() == (1, 0, 0)
    assert nphi.level_map(s1).component(0).entries == {(0, 0): F5.one}
