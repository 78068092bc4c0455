"""Normalization of simplicial modules and its inverse construction.

`normalize` carries a truncated simplicial module to the complex of
intersected face kernels, together with the inclusion into the Moore
complex and the projection splitting it off.  `gamma` rebuilds a
simplicial module from a complex as a direct sum indexed by monotone
surjections; normalizing a `gamma` image returns the input complex on
the nose, and `counit` realizes the comparison in the other order.
The Eilenberg-Zilber maps `aw` and `shuffle` relate the normalization
of a tensor product to the tensor product of the normalizations, and
`gamma_oplax` assembles them into the oplax structure map of gamma.

None of the sign or direction conventions below are taken on faith:
every map is constructed with its defining property checked (chain
maps commute with d, simplicial maps with all faces and degeneracies,
corestrictions are solved for exactly), so a wrong convention fails at
construction time rather than producing a plausible-looking matrix.
"""

from __future__ import annotations

from itertools import combinations
from typing import Optional

from . import permutations
from .chain import ChainComplex, ChainMap, tensor_blocks
from .chain import tensor as tensor_complex
from .exactlin import (
    FreeModule,
    LinearMap,
    compose,
    hnf_columns,
    hstack,
    kernel,
    projection_to_summand,
    solve,
    vstack,
)
from .simp import (
    SimplicialMap,
    SimplicialModule,
    compose_monotone,
    delta,
    monotone_surjections,
    moore_complex,
    sigma,
    simplicial_operator,
    surjection_from_word,
)
from .simp import tensor as tensor_simplicial


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------


class Normalization:
    """A normalized complex together with its Moore-complex splitting.

    `incl` includes the complex into the Moore complex (same levels as
    the simplicial module, alternating face sum differential); `proj`
    retracts onto it, killing the degenerate part: proj . incl = id.
    """

    __slots__ = ("complex", "moore", "incl", "proj")

    def __init__(self, complex: ChainComplex, moore: ChainComplex,
                 incl: ChainMap, proj: ChainMap):
        self.complex = complex
        self.moore = moore
        self.incl = incl
        self.proj = proj

    def __repr__(self):
        return f"Normalization(ranks={self.complex.ranks()})"


def normalize(A: SimplicialModule) -> Normalization:
    """N(A)_n = ker d_1 intersect .. intersect ker d_n, with d_0.

    The splitting projection comes from a basis of each level that
    extends a kernel basis by a basis of the degenerate part; the two
    span complementary summands, so the change of basis is invertible
    over the ring and its top rows retract onto the kernel.
    """
    ring = A.ring
    D = A.max_degree
    moore = moore_complex(A)
    incls = [LinearMap.identity(A.level(0))]
    for n in range(1, D + 1):
        _, incl = kernel(vstack([A.face(n, i) for i in range(1, n + 1)]))
        incls.append(incl)
    levels = [f.source for f in incls]
    diffs = []
    for n in range(1, D + 1):
        d = solve(incls[n - 1], compose(A.face(n, 0), incls[n]))
        assert d is not None, "d_0 does not preserve the face kernels"
        diffs.append(d)
    N = ChainComplex(ring, levels, diffs)
    projs = [LinearMap.identity(A.level(0))]
    for n in range(1, D + 1):
        degim = hnf_columns(hstack([A.degeneracy(n - 1, i) for i in range(n)]))
        change = hstack([incls[n], degim])
        assert change.is_iso(), "kernel and degenerate part do not split the level"
        projs.append(compose(projection_to_summand([levels[n], degim.source], 0),
                             change.inverse()))
    # both constructions are checked: the degenerate part is a
    # subcomplex of the Moore complex, so proj is a chain map too
    incl = ChainMap(N, moore, incls)
    proj = ChainMap(moore, N, projs)
    return Normalization(N, moore, incl, proj)


def normalize_map(f: SimplicialMap,
                  source: Optional[Normalization] = None,
                  target: Optional[Normalization] = None) -> ChainMap:
    """N(f).  Simplicial maps preserve face kernels, so the restriction
    is solved for exactly against the target inclusion."""
    if source is None:
        source = normalize(f.source)
    if target is None:
        target = normalize(f.target)
    comps = []
    for n in range(f.source.max_degree + 1):
        c = solve(target.incl.component(n),
                  compose(f.component(n), source.incl.component(n)))
        assert c is not None, "map does not preserve the face kernels"
        comps.append(c)
    return ChainMap(source.complex, target.complex, comps)


# ---------------------------------------------------------------------------
# the inverse construction
# ---------------------------------------------------------------------------


def gamma_summands(K: ChainComplex, n: int):
    """Index of gamma(K) at level n: (k, eta, offset) over eta: [n] ->> [k].

    The identity surjection comes first (k descending, eta lexicographic
    within each k), so every level starts with a verbatim copy of K_n
    and normalizing the result reads off exactly that copy.
    """
    out = []
    off = 0
    for k in range(n, -1, -1):
        for eta in monotone_surjections(n, k):
            out.append((k, eta, off))
            off += K.level(k).rank
    return out


def _gamma_level(K: ChainComplex, n: int) -> FreeModule:
    labels = []
    for k, eta, _ in gamma_summands(K, n):
        tag = ".".join(map(str, eta))
        labels.extend(f"{tag}|{a}" for a in K.level(k).labels)
    return FreeModule(K.ring, tuple(labels))


def _gamma_operator(K: ChainComplex, theta, src, tgt, src_level, tgt_level):
    # theta: [m] -> [n] acts from level n to level m.  On the summand
    # eta: [n] ->> [k], factor eta . theta through its image: a full
    # image gives the identity block, image {1..k} feeds the complex
    # differential into the shifted summand, anything else vanishes.
    ring = K.ring
    tgt_off = {(k, eta): off for k, eta, off in tgt}
    entries = {}
    for k, eta, off in src:
        if K.level(k).rank == 0:
            continue
        c = compose_monotone(eta, theta)
        image = sorted(set(c))
        if len(image) == k + 1:
            to = tgt_off[(k, c)]
            for i in range(K.level(k).rank):
                entries[(to + i, off + i)] = ring.one
        elif image == list(range(1, k + 1)):
            to = tgt_off[(k - 1, tuple(v - 1 for v in c))]
            for (i, j), v in K.d(k).entries.items():
                entries[(to + i, off + j)] = v
    return LinearMap(src_level, tgt_level, entries)


def gamma(K: ChainComplex, max_degree: Optional[int] = None) -> SimplicialModule:
    """Simplicial module with level n the sum of K_k over [n] ->> [k]."""
    D = K.max_degree if max_degree is None else max_degree
    summands = [gamma_summands(K, n) for n in range(D + 1)]
    levels = [_gamma_level(K, n) for n in range(D + 1)]
    faces = [[_gamma_operator(K, delta(i, n), summands[n], summands[n - 1],
                              levels[n], levels[n - 1])
              for i in range(n + 1)]
             for n in range(1, D + 1)]
    degeneracies = [[_gamma_operator(K, sigma(i, n), summands[n], summands[n + 1],
                                     levels[n], levels[n + 1])
                     for i in range(n + 1)]
                    for n in range(D)]
    return SimplicialModule(K.ring, levels, faces, degeneracies)


def gamma_map(f: ChainMap, max_degree: Optional[int] = None) -> SimplicialMap:
    """Summandwise application of f; simplicial because the structure
    blocks of gamma are identities and components of the differential."""
    D = f.source.max_degree if max_degree is None else max_degree
    A, B = gamma(f.source, D), gamma(f.target, D)
    comps = []
    for n in range(D + 1):
        tgt_off = {(k, eta): off for k, eta, off in gamma_summands(f.target, n)}
        entries = {}
        for k, eta, off in gamma_summands(f.source, n):
            to = tgt_off[(k, eta)]
            for (i, j), v in f.component(k).entries.items():
                entries[(to + i, off + j)] = v
        comps.append(LinearMap(A.level(n), B.level(n), entries))
    return SimplicialMap(A, B, comps)


def counit(A: SimplicialModule, nz: Optional[Normalization] = None) -> SimplicialMap:
    """gamma(N(A)) -> A, acting on the eta-summand by A(eta) after incl.

    Constructing this as a SimplicialMap checks commutation with every
    face and degeneracy, which pins the structure rule of `gamma`
    against honestly computed simplicial operators.
    """
    if nz is None:
        nz = normalize(A)
    G = gamma(nz.complex, A.max_degree)
    comps = []
    for n in range(A.max_degree + 1):
        parts = [compose(simplicial_operator(A, eta, k), nz.incl.component(k))
                 for k, eta, _ in gamma_summands(nz.complex, n)]
        comps.append(LinearMap(G.level(n), A.level(n), hstack(parts).entries))
    return SimplicialMap(G, A, comps)


# ---------------------------------------------------------------------------
# Eilenberg-Zilber maps
# ---------------------------------------------------------------------------


def aw(A: SimplicialModule, B: SimplicialModule,
       na: Optional[Normalization] = None,
       nb: Optional[Normalization] = None,
       nab: Optional[Normalization] = None) -> ChainMap:
    """Alexander-Whitney map N(A (x) B) -> N(A) (x) N(B).

    The (p, q) block is front face tensor back face: restrict a to its
    first p vertices and b to its last q, then project both to the
    normalized summands.
    """
    AB = tensor_simplicial(A, B)
    if na is None:
        na = normalize(A)
    if nb is None:
        nb = normalize(B)
    if nab is None:
        nab = normalize(AB)
    D = AB.max_degree
    NN = tensor_complex(na.complex, nb.complex, bound=D)
    comps = []
    for n in range(D + 1):
        entries = {}
        for p, q, off in tensor_blocks(na.complex, nb.complex, n):
            front = simplicial_operator(A, tuple(range(p + 1)), n)
            back = simplicial_operator(B, tuple(range(p, n + 1)), n)
            fa = compose(na.proj.component(p), front)
            fb = compose(nb.proj.component(q), back)
            blk = compose(fa.tensor(fb), nab.incl.component(n))
            for (i, j), v in blk.entries.items():
                entries[(off + i, j)] = v
        comps.append(LinearMap(nab.complex.level(n), NN.level(n), entries))
    return ChainMap(nab.complex, NN, comps)


def shuffle(A: SimplicialModule, B: SimplicialModule,
            na: Optional[Normalization] = None,
            nb: Optional[Normalization] = None,
            nab: Optional[Normalization] = None) -> ChainMap:
    """Shuffle map N(A) (x) N(B) -> N(A (x) B).

    The (p, q) block sends x (x) y to the signed sum over complementary
    index sets mu, nu inside {0..p+q-1} of s_nu x (x) s_mu y.  The
    stacked blocks land in the face kernels of the product, and the
    corestriction is solved for exactly rather than projected.
    """
    AB = tensor_simplicial(A, B)
    if na is None:
        na = normalize(A)
    if nb is None:
        nb = normalize(B)
    if nab is None:
        nab = normalize(AB)
    D = AB.max_degree
    ring = A.ring
    NN = tensor_complex(na.complex, nb.complex, bound=D)
    comps = []
    for n in range(D + 1):
        entries = {}
        for p, q, off in tensor_blocks(na.complex, nb.complex, n):
            if na.complex.level(p).rank == 0 or nb.complex.level(q).rank == 0:
                continue
            acc: dict = {}
            for mu in combinations(range(n), p):
                nu = tuple(i for i in range(n) if i not in mu)
                sgn = ring.normalize(permutations.sign(mu + nu))
                sa = simplicial_operator(
                    A, surjection_from_word(tuple(reversed(nu)), p), p)
                sb = simplicial_operator(
                    B, surjection_from_word(tuple(reversed(mu)), q), q)
                term = compose(sa, na.incl.component(p)).tensor(
                    compose(sb, nb.incl.component(q)))
                for key, v in term.entries.items():
                    acc[key] = ring.add(acc.get(key, ring.zero), ring.mul(sgn, v))
            for (i, j), v in acc.items():
                if v != ring.zero:
                    entries[(i, off + j)] = v
        total = LinearMap(NN.level(n), AB.level(n), entries)
        c = solve(nab.incl.component(n), total)
        assert c is not None, "shuffle image escapes the face kernels"
        comps.append(c)
    return ChainMap(NN, nab.complex, comps)


def gamma_oplax(K: ChainComplex, L: ChainComplex,
                max_degree: Optional[int] = None) -> SimplicialMap:
    """Oplax structure map gamma(K (x) L) -> gamma(K) (x) gamma(L).

    Built as the counit after gamma applied to the shuffle map of the
    two gamma images; since normalization undoes gamma on the nose, the
    shuffle starts from (a padding of) K (x) L itself.  The default
    truncation keeps all of K (x) L.
    """
    D = K.max_degree + L.max_degree if max_degree is None else max_degree
    GK, GL = gamma(K, D), gamma(L, D)
    AB = tensor_simplicial(GK, GL)
    nab = normalize(AB)
    nabla = shuffle(GK, GL, nab=nab)
    eps = counit(AB, nab)
    lifted = gamma_map(nabla, D)
    comps = [compose(eps.component(n), lifted.component(n)) for n in range(D + 1)]
    return SimplicialMap(lifted.source, eps.target, comps)


# ---------------------------------------------------------------------------
# normalization of operads
# ---------------------------------------------------------------------------


def normalize_operad_data(P):
    """Normalization applied to every level of a simplicial operad.

    Returns the chain operad together with the per-signature
    Normalization records, so morphisms can be transported without
    recomputing kernels.  Structure maps are conjugated through the
    shuffle map, which is compatible with both associativities because
    the simplicial tensor is strict and the shuffle is associative and
    symmetric; the result is replayed through the full law check and a
    violation is an internal error, not a property of the input.
    """
    from . import operad as _op
    coll = P.collection
    assert coll.base == "simplicial", "only simplicial operads normalize"
    ring, D = coll.ring, coll.max_degree
    ops = _op._ops_for("chain", ring, D)
    nz: dict = {}

    def norm(sig):
        sig = (tuple(sig[0]), sig[1])
        if sig not in nz:
            nz[sig] = normalize(coll.level(sig))
        return nz[sig]

    levels = {sig: norm(sig).complex for sig in coll.signatures()}
    actions = {}
    for sig in coll.signatures():
        if len(sig[0]) < 2:
            continue
        actions[sig] = {
            s: normalize_map(f, norm(sig), norm(_op.sig_act(sig, s)))
            for s, f in coll.actions[sig].items()}

    units = {}
    usrc = ops.unit_obj()
    for c in coll.colors:
        u = P.unit(c)
        nu = normalize_map(u, normalize(u.source), norm(((c,), c)))
        assert nu.source.ranks() == usrc.ranks()
        units[c] = ChainMap(
            usrc, nu.target,
            [LinearMap(usrc.level(n), nu.target.level(n),
                       nu.component(n).entries) for n in range(D + 1)],
            check=False)

    comps = {}
    for (osig, i, isig), f in P.compositions.items():
        X, Y = coll.level(osig), coll.level(isig)
        nX, nY = norm(osig), norm(isig)
        gsig = _op.graft_signature(osig, i, isig)
        nab = normalize(tensor_simplicial(X, Y))
        nf = normalize_map(f, nab, norm(gsig))
        comps[(osig, i, isig)] = nf @ shuffle(X, Y, nX, nY, nab)

    newcoll = _op.Collection(ring, "chain", coll.colors, coll.max_arity, D,
                             levels, actions, truncated=coll.truncated)
    Q = _op.Operad(newcoll, units, comps)
    bad = _op.operad_check(Q)
    if bad:
        raise RuntimeError(f"normalized operad violates the laws: {bad[:3]}")
    return Q, nz


def normalize_operad(P):
    """The chain operad with levels N(P(sig)) and shuffled compositions."""
    return normalize_operad_data(P)[0]
