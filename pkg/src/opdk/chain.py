"""Connective chain complexes over an exact ring.

Everything is degree-truncated: a complex carries an explicit max_degree D
and levels 0..D. Truncation is honest; homology at degree D is flagged
unreliable because d_{D+1} is not part of the data.

Sign convention for tensors: d(x (x) y) = dx (x) y + (-1)^|x| x (x) dy.
"""

from __future__ import annotations

from itertools import combinations
from typing import Optional, Sequence

from .exactlin import (
    FreeModule,
    LinearMap,
    cokernel,
    compose,
    free_module,
    hstack,
    kernel,
    matrix_from_json,
    matrix_to_json,
    solve,
)
from .rings import Ring


class ChainComplex:
    """Levels 0..max_degree with differentials d_n: level(n) -> level(n-1).

    d*d = 0 is checked at construction; an invalid complex is never a
    value of this type.
    """

    __slots__ = ("ring", "max_degree", "levels", "differentials")

    def __init__(self, ring: Ring, levels: Sequence[FreeModule],
                 differentials: Sequence[LinearMap], check: bool = True):
        levels = tuple(levels)
        differentials = tuple(differentials)
        assert levels, "need at least degree 0"
        assert len(differentials) == len(levels) - 1
        for M in levels:
            assert M.ring == ring
        for n, d in enumerate(differentials, start=1):
            assert d.source.compatible(levels[n])
            assert d.target.compatible(levels[n - 1])
        self.ring = ring
        self.max_degree = len(levels) - 1
        self.levels = levels
        self.differentials = differentials
        if check:
            for n in range(1, self.max_degree):
                dd = compose(self.d(n), self.d(n + 1))
                if not dd.is_zero():
                    raise ValueError(f"d^2 != 0 between degrees {n + 1} and {n - 1}")

    def level(self, n: int) -> FreeModule:
        if 0 <= n <= self.max_degree:
            return self.levels[n]
        return FreeModule(self.ring, ())

    def d(self, n: int) -> LinearMap:
        """Differential out of degree n; zero maps off the ends."""
        if 1 <= n <= self.max_degree:
            return self.differentials[n - 1]
        return LinearMap.zero(self.level(n), self.level(n - 1))

    def ranks(self):
        return tuple(M.rank for M in self.levels)

    def total_rank(self) -> int:
        return sum(self.ranks())

    def __eq__(self, other):
        if not isinstance(other, ChainComplex):
            return NotImplemented
        return (self.ring == other.ring
                and self.ranks() == other.ranks()
                and all(a.entries == b.entries
                        for a, b in zip(self.differentials, other.differentials)))

    def __hash__(self):
        return hash((self.ring, self.ranks()))

    def __repr__(self):
        return f"ChainComplex({self.ring.name()}, ranks={self.ranks()})"


def zero_complex(ring: Ring, max_degree: int = 0) -> ChainComplex:
    levels = [FreeModule(ring, ()) for _ in range(max_degree + 1)]
    diffs = [LinearMap.zero(levels[n], levels[n - 1]) for n in range(1, max_degree + 1)]
    return ChainComplex(ring, levels, diffs)


def unit_complex(ring: Ring) -> ChainComplex:
    return ChainComplex(ring, [free_module(ring, 1, "u")], [])


def concentrated(ring: Ring, degree: int, rank: int = 1, prefix: str = "e") -> ChainComplex:
    """rank^degree: one nonzero level, everything else 0."""
    levels = [free_module(ring, rank if n == degree else 0, prefix)
              for n in range(degree + 1)]
    diffs = [LinearMap.zero(levels[n], levels[n - 1]) for n in range(1, degree + 1)]
    return ChainComplex(ring, levels, diffs)


def two_term(ring: Ring, rows: Sequence[Sequence]) -> ChainComplex:
    """d_1 given by a dense matrix; degree 1 has len(rows[0]) generators."""
    cols = len(rows[0]) if rows else 0
    M1 = free_module(ring, cols, "a")
    M0 = free_module(ring, len(rows), "b")
    return ChainComplex(ring, [M0, M1], [LinearMap.from_rows(M1, M0, rows)])


def direct_sum(K: ChainComplex, L: ChainComplex) -> ChainComplex:
    assert K.ring == L.ring and K.max_degree == L.max_degree
    levels = []
    for n in range(K.max_degree + 1):
        labels = tuple(f"l:{a}" for a in K.level(n).labels) + \
            tuple(f"r:{b}" for b in L.level(n).labels)
        levels.append(FreeModule(K.ring, labels))
    diffs = []
    for n in range(1, K.max_degree + 1):
        blk = K.d(n).direct_sum(L.d(n))
        diffs.append(LinearMap(levels[n], levels[n - 1], blk.entries))
    return ChainComplex(K.ring, levels, diffs, check=False)


def pad(K: ChainComplex, max_degree: int) -> ChainComplex:
    """Extend by zero levels up to max_degree. Identity if already there."""
    assert max_degree >= K.max_degree
    if max_degree == K.max_degree:
        return K
    levels = list(K.levels)
    diffs = list(K.differentials)
    for n in range(K.max_degree + 1, max_degree + 1):
        levels.append(FreeModule(K.ring, ()))
        diffs.append(LinearMap.zero(levels[n], levels[n - 1]))
    return ChainComplex(K.ring, levels, diffs, check=False)


class ChainMap:
    """Degreewise map commuting with the differentials.

    Source and target must share max_degree; use pad() to align.
    """

    __slots__ = ("source", "target", "components")

    def __init__(self, source: ChainComplex, target: ChainComplex,
                 components: Sequence[LinearMap], check: bool = True):
        assert source.ring == target.ring, "ring mismatch"
        assert source.max_degree == target.max_degree, \
            "source and target truncated at different degrees; pad first"
        components = tuple(components)
        assert len(components) == source.max_degree + 1
        for n, f in enumerate(components):
            assert f.source.compatible(source.level(n))
            assert f.target.compatible(target.level(n))
        self.source = source
        self.target = target
        self.components = components
        if check:
            for n in range(1, source.max_degree + 1):
                lhs = compose(target.d(n), components[n])
                rhs = compose(components[n - 1], source.d(n))
                if lhs.entries != rhs.entries:
                    raise ValueError(f"does not commute with d at degree {n}")

    @classmethod
    def identity(cls, K: ChainComplex) -> "ChainMap":
        return cls(K, K, [LinearMap.identity(M) for M in K.levels], check=False)

    @classmethod
    def zero(cls, K: ChainComplex, L: ChainComplex) -> "ChainMap":
        return cls(K, L, [LinearMap.zero(a, b) for a, b in zip(K.levels, L.levels)],
                   check=False)

    def component(self, n: int) -> LinearMap:
        if 0 <= n <= self.source.max_degree:
            return self.components[n]
        return LinearMap.zero(self.source.level(n), self.target.level(n))

    def __matmul__(self, other: "ChainMap") -> "ChainMap":
        assert other.target.ranks() == self.source.ranks()
        comps = [compose(a, b) for a, b in zip(self.components, other.components)]
        return ChainMap(other.source, self.target, comps, check=False)

    def __add__(self, other: "ChainMap") -> "ChainMap":
        comps = [a + b for a, b in zip(self.components, other.components)]
        return ChainMap(self.source, self.target, comps, check=False)

    def __sub__(self, other: "ChainMap") -> "ChainMap":
        comps = [a - b for a, b in zip(self.components, other.components)]
        return ChainMap(self.source, self.target, comps, check=False)

    def __eq__(self, other):
        if not isinstance(other, ChainMap):
            return NotImplemented
        return (self.source.ranks() == other.source.ranks()
                and self.target.ranks() == other.target.ranks()
                and all(a.entries == b.entries
                        for a, b in zip(self.components, other.components)))

    def __hash__(self):
        return hash((self.source.ranks(), self.target.ranks()))

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.components)

    def is_iso(self) -> bool:
        return all(f.is_iso() for f in self.components)

    def inverse(self) -> "ChainMap":
        comps = [f.inverse() for f in self.components]
        return ChainMap(self.target, self.source, comps, check=False)

    def __repr__(self):
        return f"ChainMap({self.source.ranks()} -> {self.target.ranks()})"


# ---------------------------------------------------------------------------
# tensor products
# ---------------------------------------------------------------------------


def tensor_blocks(K: ChainComplex, L: ChainComplex, n: int):
    """Summands of (K (x) L)_n as (p, q, offset), p ascending."""
    out = []
    off = 0
    for p in range(max(0, n - L.max_degree), min(n, K.max_degree) + 1):
        q = n - p
        out.append((p, q, off))
        off += K.level(p).rank * L.level(q).rank
    return out


def _tensor_level(K: ChainComplex, L: ChainComplex, n: int) -> FreeModule:
    labels = []
    for p, q, _ in tensor_blocks(K, L, n):
        for a in K.level(p).labels:
            for b in L.level(q).labels:
                labels.append(f"{p}|({a})(x)({b})")
    return FreeModule(K.ring, tuple(labels))


def tensor(K: ChainComplex, L: ChainComplex, bound: Optional[int] = None) -> ChainComplex:
    """(K (x) L)_n = sum over p+q=n of K_p (x) L_q, Koszul differential."""
    if K.ring != L.ring:
        raise ValueError("ring mismatch")
    D = K.max_degree + L.max_degree
    if bound is not None:
        D = min(D, bound)
    levels = [_tensor_level(K, L, n) for n in range(D + 1)]
    diffs = []
    for n in range(1, D + 1):
        entries = {}
        tgt_off = {(p, q): off for p, q, off in tensor_blocks(K, L, n - 1)}
        for p, q, off in tensor_blocks(K, L, n):
            if p >= 1 and (p - 1, q) in tgt_off:
                blk = K.d(p).tensor(LinearMap.identity(L.level(q)))
                to = tgt_off[(p - 1, q)]
                for (i, j), v in blk.entries.items():
                    entries[(to + i, off + j)] = v
            if q >= 1 and (p, q - 1) in tgt_off:
                blk = LinearMap.identity(K.level(p)).tensor(L.d(q))
                sign = K.ring.normalize(-1) if p % 2 else K.ring.one
                to = tgt_off[(p, q - 1)]
                for (i, j), v in blk.entries.items():
                    key = (to + i, off + j)
                    entries[key] = K.ring.add(entries.get(key, K.ring.zero),
                                              K.ring.mul(sign, v))
        diffs.append(LinearMap(levels[n], levels[n - 1],
                               {k: v for k, v in entries.items() if v != K.ring.zero}))
    return ChainComplex(K.ring, levels, diffs)


def tensor_map(f: ChainMap, g: ChainMap, bound: Optional[int] = None) -> ChainMap:
    """f (x) g degreewise. Both maps have degree 0, so no signs appear."""
    src = tensor(f.source, g.source, bound)
    tgt = tensor(f.target, g.target, bound)
    D = max(src.max_degree, tgt.max_degree)
    src, tgt = pad(src, D), pad(tgt, D)
    comps = []
    for n in range(D + 1):
        entries = {}
        tgt_off = {(p, q): off for p, q, off in tensor_blocks(f.target, g.target, n)}
        for p, q, off in tensor_blocks(f.source, g.source, n):
            if (p, q) not in tgt_off:
                continue
            blk = f.component(p).tensor(g.component(q))
            to = tgt_off[(p, q)]
            for (i, j), v in blk.entries.items():
                entries[(to + i, off + j)] = v
        comps.append(LinearMap(src.level(n), tgt.level(n), entries))
    return ChainMap(src, tgt, comps, check=False)


def tensor_many(factors: Sequence[ChainComplex], bound: Optional[int] = None) -> ChainComplex:
    """Left-associated iterated tensor; empty product is the unit."""
    if not factors:
        raise ValueError("empty tensor product has no ring to live over")
    out = factors[0]
    for F in factors[1:]:
        out = tensor(out, F, bound)
    return out


def tensor_map_many(maps: Sequence[ChainMap], bound: Optional[int] = None) -> ChainMap:
    out = maps[0]
    for g in maps[1:]:
        out = tensor_map(out, g, bound)
    return out


def braiding(K: ChainComplex, L: ChainComplex,
             bound: Optional[int] = None) -> ChainMap:
    """K (x) L -> L (x) K, x (x) y |-> (-1)^{pq} y (x) x."""
    src, tgt = tensor(K, L, bound), tensor(L, K, bound)
    comps = []
    for n in range(src.max_degree + 1):
        entries = {}
        tgt_off = {(q, p): off for q, p, off in tensor_blocks(L, K, n)}
        for p, q, off in tensor_blocks(K, L, n):
            to = tgt_off[(q, p)]
            rk, rl = K.level(p).rank, L.level(q).rank
            sign = K.ring.one if (p * q) % 2 == 0 else K.ring.normalize(-1)
            for i in range(rk):
                for j in range(rl):
                    entries[(to + j * rk + i, off + i * rl + j)] = sign
        comps.append(LinearMap(src.level(n), tgt.level(n), entries))
    return ChainMap(src, tgt, comps)


def associator(K: ChainComplex, L: ChainComplex, M: ChainComplex,
               bound: Optional[int] = None) -> ChainMap:
    """(K (x) L) (x) M -> K (x) (L (x) M), pure reindexing, no signs.

    With a bound the same truncation is applied to every intermediate
    tensor; the surviving triple blocks agree on both sides, so the map
    is still an isomorphism.
    """
    KL, LM = tensor(K, L, bound), tensor(L, M, bound)
    src, tgt = tensor(KL, M, bound), tensor(K, LM, bound)
    comps = []
    for n in range(src.max_degree + 1):
        entries = {}
        # target index of the basis vector (p, q, r, i, j, k)
        tgt_pos = {}
        for p, t, off in tensor_blocks(K, LM, n):
            inner = {(q, r): ioff for q, r, ioff in tensor_blocks(L, M, t)}
            for (q, r), ioff in inner.items():
                rj, rk = L.level(q).rank, M.level(r).rank
                for i in range(K.level(p).rank):
                    for j in range(rj):
                        for k in range(rk):
                            tgt_pos[(p, q, r, i, j, k)] = (
                                off + i * LM.level(t).rank + ioff + j * rk + k)
        col = 0
        for s, r, off in tensor_blocks(KL, M, n):
            inner = tensor_blocks(K, L, s)
            rm = M.level(r).rank
            for p, q, ioff in inner:
                rj = L.level(q).rank
                for i in range(K.level(p).rank):
                    for j in range(rj):
                        src_a = ioff + i * rj + j
                        for k in range(rm):
                            col = off + src_a * rm + k
                            entries[(tgt_pos[(p, q, r, i, j, k)], col)] = K.ring.one
        comps.append(LinearMap(src.level(n), tgt.level(n), entries))
    return ChainMap(src, tgt, comps)


def left_unitor(K: ChainComplex) -> ChainMap:
    """unit (x) K -> K."""
    src = tensor(unit_complex(K.ring), K)
    comps = [LinearMap(src.level(n), K.level(n),
                       {(i, i): K.ring.one for i in range(K.level(n).rank)})
             for n in range(K.max_degree + 1)]
    return ChainMap(src, K, comps)


def right_unitor(K: ChainComplex) -> ChainMap:
    """K (x) unit -> K."""
    src = tensor(K, unit_complex(K.ring))
    comps = [LinearMap(src.level(n), K.level(n),
                       {(i, i): K.ring.one for i in range(K.level(n).rank)})
             for n in range(K.max_degree + 1)]
    return ChainMap(src, K, comps)


# ---------------------------------------------------------------------------
# homology
# ---------------------------------------------------------------------------


class HomologyResult:
    """H_n as a presentation, plus the data needed to map in and out.

    kernel_incl : cycles -> level(n)
    boundaries  : generators of the boundary lattice in cycle coordinates
    presentation: cycles / boundaries
    """

    __slots__ = ("degree", "rank", "invariant_factors", "boundary_unreliable",
                 "kernel_incl", "boundaries", "presentation")

    def __init__(self, degree, kernel_incl, boundaries, presentation,
                 boundary_unreliable):
        self.degree = degree
        self.kernel_incl = kernel_incl
        self.boundaries = boundaries
        self.presentation = presentation
        self.rank = presentation.presentation.free_rank
        self.invariant_factors = presentation.presentation.invariant_factors
        self.boundary_unreliable = boundary_unreliable

    def __repr__(self):
        flag = ", truncation-boundary" if self.boundary_unreliable else ""
        return (f"H_{self.degree} = rank {self.rank}"
                f" + {list(self.invariant_factors)}{flag}")

    def is_zero(self) -> bool:
        return self.rank == 0 and not self.invariant_factors


def homology(K: ChainComplex, n: int) -> HomologyResult:
    """ker(d_n)/im(d_{n+1}); at n == max_degree only a truncation artifact."""
    assert 0 <= n <= K.max_degree
    cycles, incl = kernel(K.d(n))
    dn1 = K.d(n + 1)
    X = solve(incl, dn1)
    assert X is not None, "boundaries must lie in the cycle lattice"
    pres = cokernel(X)
    return HomologyResult(n, incl, X, pres,
                          boundary_unreliable=(n == K.max_degree))


def homology_map(f: ChainMap, n: int):
    """Induced map on degree-n homology, in presentation generators.

    Returns (map, H_src, H_tgt); the map is proj_tgt composed with the lift
    of f through the target cycle lattice.
    """
    Hs = homology(f.source, n)
    Ht = homology(f.target, n)
    lifted = solve(Ht.kernel_incl, compose(f.component(n), Hs.kernel_incl))
    assert lifted is not None, "chain maps send cycles to cycles"
    induced = compose(Ht.presentation.proj, lifted)
    return induced, Hs, Ht


def _presentation_iso(induced: LinearMap, Hs: HomologyResult, Ht: HomologyResult) -> bool:
    """Is the induced map an isomorphism of finitely presented modules?

    `induced` goes from the source cycle module to the target presentation
    generators. Surjectivity: image plus target relations spans everything.
    Injectivity: the preimage of the target relation lattice is no bigger
    than the source boundary lattice (the reverse inclusion is automatic).
    """
    rel_t = compose(Ht.presentation.proj, Ht.boundaries)
    if not cokernel(hstack([induced, rel_t])).presentation.is_trivial():
        return False
    big = hstack([induced, rel_t])
    kmod, kincl = kernel(big)
    # pairs (v, w) with induced v = -rel_t w; drop the w rows. Over Z the
    # kernel is saturated, so the projection is the full preimage lattice.
    pre_entries = {(i, j): v for (i, j), v in kincl.entries.items()
                   if i < induced.source.rank}
    pre = LinearMap(kmod, induced.source, pre_entries)
    return solve(Hs.boundaries, pre) is not None


def is_quasi_iso(f: ChainMap, degrees: Optional[Sequence[int]] = None) -> bool:
    """Does f induce isomorphisms on homology in the given degrees?

    Defaults to all degrees strictly below max_degree (the top one is a
    truncation artifact).
    """
    if degrees is None:
        degrees = range(f.source.max_degree)
    for n in degrees:
        induced, Hs, Ht = homology_map(f, n)
        if not _presentation_iso(induced, Hs, Ht):
            return False
    return True


# ---------------------------------------------------------------------------
# colimits
# ---------------------------------------------------------------------------


class ChainColimit:
    """A finite colimit presented degreewise as a free quotient.

    injections[v] need not be injective; they are the cocone legs, one per
    diagram vertex, in diagram order.
    """

    __slots__ = ("complex", "injections", "_sections", "_projs")

    def __init__(self, complex: ChainComplex, injections, sections, projs):
        self.complex = complex
        self.injections = injections
        self._sections = sections
        self._projs = projs

    def mediating(self, legs: Sequence[ChainMap]) -> ChainMap:
        """The unique map with h . injections[v] = legs[v] for all v.

        Legs are padded to the colimit's degree automatically.
        """
        assert len(legs) == len(self.injections)
        D = self.complex.max_degree
        W = pad(legs[0].target, max(D, max(l.target.max_degree for l in legs)))
        assert W.max_degree == D, "cocone target exceeds colimit truncation"
        legs = [ChainMap(pad(leg.source, D), W,
                         [leg.component(n) for n in range(D + 1)], check=False)
                for leg in legs]
        comps = []
        for n in range(D + 1):
            stacked = hstack([leg.component(n) for leg in legs])
            comps.append(compose(stacked, self._sections[n]))
        h = ChainMap(self.complex, W, comps)
        for v, leg in enumerate(legs):
            if not (h @ self.injections[v]) == leg:
                raise ValueError(f"cocone leg {v} does not factor")
        return h


def diagram_colimit(vertices: Sequence[ChainComplex],
                    edges: Sequence[tuple],
                    ) -> ChainColimit:
    """Colimit of a finite diagram of complexes, degreewise.

    edges are (src_index, tgt_index, ChainMap). The result must be free in
    every degree; torsion raises.
    """
    assert vertices
    ring = vertices[0].ring
    D = max(V.max_degree for V in vertices)
    vs = [pad(V, D) for V in vertices]
    es = [(s, t, ChainMap(vs[s], vs[t], [f.component(n) for n in range(D + 1)],
                          check=False))
          for s, t, f in edges]

    levels, projs, sections = [], [], []
    offsets_per_degree = []
    for n in range(D + 1):
        offs, total = [], 0
        for V in vs:
            offs.append(total)
            total += V.level(n).rank
        offsets_per_degree.append(offs)
        big = free_module(ring, total, "v")
        cols = []
        for s, t, f in es:
            fe = f.component(n)
            entries = {}
            for (i, j), v in fe.entries.items():
                entries[(offs[t] + i, j)] = v
            for j in range(fe.source.rank):
                key = (offs[s] + j, j)
                entries[key] = ring.sub(entries.get(key, ring.zero), ring.one)
            cols.append(LinearMap(vs[s].level(n), big, entries))
        rel = hstack(cols) if cols else LinearMap.zero(FreeModule(ring, ()), big)
        pres = cokernel(rel)
        if pres.presentation.invariant_factors:
            raise ValueError(f"colimit has torsion at degree {n}; "
                             "not representable as a free complex")
        levels.append(pres.generators)
        projs.append(pres.proj)
        sections.append(pres.section)

    diffs = []
    for n in range(1, D + 1):
        offs_n, offs_m = offsets_per_degree[n], offsets_per_degree[n - 1]
        entries = {}
        for vi, V in enumerate(vs):
            for (i, j), v in V.d(n).entries.items():
                entries[(offs_m[vi] + i, offs_n[vi] + j)] = v
        big_d = LinearMap(projs[n].source, projs[n - 1].source, entries)
        diffs.append(compose(compose(projs[n - 1], big_d), sections[n]))
    out = ChainComplex(ring, levels, diffs)

    injections = []
    for vi, V in enumerate(vs):
        comps = []
        for n in range(D + 1):
            off = offsets_per_degree[n][vi]
            incl = LinearMap(V.level(n), projs[n].source,
                             {(off + i, i): ring.one for i in range(V.level(n).rank)})
            comps.append(compose(projs[n], incl))
        injections.append(ChainMap(vs[vi], out, comps))
    return ChainColimit(out, injections, sections, projs)


class ChainPushout:
    """Degreewise pushout with its two cocone legs."""

    __slots__ = ("complex", "inl", "inr", "_colim", "_left")

    def __init__(self, colim: ChainColimit, left: ChainMap):
        self.complex = colim.complex
        self.inl = colim.injections[1]
        self.inr = colim.injections[2]
        self._colim = colim
        self._left = left

    def mediating(self, u: ChainMap, v: ChainMap) -> ChainMap:
        """Unique h with h . inl = u and h . inr = v; raises if the cocone
        does not commute."""
        D = self.complex.max_degree
        assert u.target.max_degree <= D, "cocone target exceeds pushout truncation"
        u = ChainMap(pad(u.source, D), pad(u.target, D),
                     [u.component(n) for n in range(D + 1)], check=False)
        v = ChainMap(pad(v.source, D), pad(v.target, D),
                     [v.component(n) for n in range(D + 1)], check=False)
        s_leg = u @ self._left
        return self._colim.mediating([s_leg, u, v])


def pushout_complex(f: ChainMap, g: ChainMap) -> ChainPushout:
    """Pushout of target(f) <- source -> target(g), degreewise."""
    if f.source.ranks() != g.source.ranks():
        raise ValueError("source mismatch")
    D = max(f.target.max_degree, g.target.max_degree, f.source.max_degree)
    S = pad(f.source, D)
    B = pad(f.target, D)
    C = pad(g.target, D)
    fb = ChainMap(S, B, [f.component(n) for n in range(D + 1)], check=False)
    gc = ChainMap(S, C, [g.component(n) for n in range(D + 1)], check=False)
    colim = diagram_colimit([S, B, C], [(0, 1, fb), (0, 2, gc)])
    return ChainPushout(colim, fb)


def pushout_product(f: ChainMap, g: ChainMap, bound: Optional[int] = None) -> ChainMap:
    """f square g: from the corner pushout to target(f) (x) target(g)."""
    if f.source.ring != g.source.ring:
        raise ValueError("ring mismatch")
    top = tensor_map(f, ChainMap.identity(g.source), bound)      # X(x)Y -> A(x)Y
    left = tensor_map(ChainMap.identity(f.source), g, bound)     # X(x)Y -> X(x)B
    po = pushout_complex(top, left)
    u = tensor_map(ChainMap.identity(f.target), g, bound)        # A(x)Y -> A(x)B
    v = tensor_map(f, ChainMap.identity(g.target), bound)        # X(x)B -> A(x)B
    return po.mediating(u, v)


def iterated_pushout_product(f: ChainMap, n: int, bound: Optional[int] = None) -> ChainMap:
    """f^{square n}, left-associated."""
    assert n >= 1
    out = f
    for _ in range(n - 1):
        out = pushout_product(out, f, bound)
    return out


def punctured_cube_colimit(f: ChainMap, n: int) -> ChainColimit:
    """Colimit over proper subsets S of {1..n} of the tensor with f's
    target in slots S and f's source elsewhere."""
    assert n >= 1
    X, A = f.source, f.target
    subsets = []
    for size in range(n):
        for c in combinations(range(n), size):
            subsets.append(frozenset(c))
    subsets.sort(key=lambda s: (len(s), sorted(s)))
    index = {s: i for i, s in enumerate(subsets)}
    verts = [tensor_many([A if i in S else X for i in range(n)]) for S in subsets]
    edges = []
    for S in subsets:
        for i in range(n):
            if i in S:
                continue
            T = S | {i}
            if T not in index:
                continue
            emap = tensor_map_many([
                (ChainMap.identity(A) if k in S else
                 (f if k == i else ChainMap.identity(X)))
                for k in range(n)])
            edges.append((index[S], index[T], emap))
    return diagram_colimit(verts, edges)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def chain_to_json(K: ChainComplex) -> dict:
    return {
        "ring": K.ring.name(),
        "max_degree": K.max_degree,
        "levels": list(K.ranks()),
        "differentials": [matrix_to_json(d) for d in K.differentials],
    }


def chain_from_json(data: dict) -> ChainComplex:
    from .rings import ring_from_name
    ring = ring_from_name(data["ring"])
    levels = [free_module(ring, r) for r in data["levels"]]
    diffs = []
    for n, dj in enumerate(data["differentials"], start=1):
        m = matrix_from_json(dj)
        diffs.append(LinearMap(levels[n], levels[n - 1], m.entries))
    return ChainComplex(ring, levels, diffs)
