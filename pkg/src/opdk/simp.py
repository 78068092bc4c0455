"""Degree-truncated simplicial modules.

A simplicial module stores explicit face and degeneracy matrices up to a
truncation degree D (faces for 1..D, degeneracies for 0..D-1). Construction
checks shapes only; `validate` reports which simplicial identities fail, so
deliberately corrupted objects can be built and examined.

Monotone maps between finite ordinals are tuples of values; they compose,
factor into faces and degeneracies, and induce operators contravariantly.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .chain import ChainComplex
from .exactlin import (
    FreeModule,
    LinearMap,
    compose,
    free_module,
    matrix_from_json,
    matrix_to_json,
)
from .rings import Ring


# ---------------------------------------------------------------------------
# monotone map combinatorics
# ---------------------------------------------------------------------------


def delta(i: int, n: int):
    """The injection [n-1] -> [n] missing i."""
    return tuple(t if t < i else t + 1 for t in range(n))


def sigma(i: int, n: int):
    """The surjection [n+1] -> [n] hitting i twice."""
    return tuple(t if t <= i else t - 1 for t in range(n + 2))


def compose_monotone(f, g):
    """f after g, as value tuples."""
    return tuple(f[v] for v in g)


def is_monotone(f) -> bool:
    return all(f[t] <= f[t + 1] for t in range(len(f) - 1))


def monotone_surjections(n: int, k: int):
    """All surjective monotone [n] -> [k], lexicographic by value tuple.

    >>> monotone_surjections(2, 1)
    [(0, 0, 1), (0, 1, 1)]
    """
    if k > n or k < 0:
        return []
    out = []

    def build(prefix, last):
        if len(prefix) == n + 1:
            if last == k:
                out.append(tuple(prefix))
            return
        remaining = n + 1 - len(prefix)
        for v in (last, last + 1):
            if v > k:
                continue
            if k - v <= remaining - 1:
                build(prefix + [v], v)

    build([0], 0)
    return out


def epi_factor_word(eta) -> tuple:
    """The duplicate positions of a surjection, decreasing: eta equals
    s-word s_{j_l}..s_{j_1} with this index tuple read left to right."""
    dups = [i for i in range(len(eta) - 1) if eta[i] == eta[i + 1]]
    return tuple(reversed(dups))


def surjection_from_word(word, k: int):
    """Inverse of epi_factor_word: word is strictly decreasing."""
    eta = tuple(range(k + 1))
    for j in reversed(word):
        eta = compose_monotone(eta, sigma(j, len(eta) - 1))
    return eta


# ---------------------------------------------------------------------------
# simplicial modules
# ---------------------------------------------------------------------------


class SimplicialModule:
    """Levels 0..D with face and degeneracy matrices.

    faces[n-1][i] is d_i: level(n) -> level(n-1); degeneracies[n][i] is
    s_i: level(n) -> level(n+1).
    """

    __slots__ = ("ring", "max_degree", "levels", "faces", "degeneracies")

    def __init__(self, ring: Ring, levels: Sequence[FreeModule],
                 faces, degeneracies):
        levels = tuple(levels)
        D = len(levels) - 1
        faces = tuple(tuple(fs) for fs in faces)
        degeneracies = tuple(tuple(ss) for ss in degeneracies)
        assert len(faces) == D
        assert len(degeneracies) == D if D > 0 else not degeneracies
        for n in range(1, D + 1):
            assert len(faces[n - 1]) == n + 1, f"need d_0..d_{n} at degree {n}"
            for d in faces[n - 1]:
                assert d.source.compatible(levels[n])
                assert d.target.compatible(levels[n - 1])
        for n in range(D):
            assert len(degeneracies[n]) == n + 1, f"need s_0..s_{n} at degree {n}"
            for s in degeneracies[n]:
                assert s.source.compatible(levels[n])
                assert s.target.compatible(levels[n + 1])
        self.ring = ring
        self.max_degree = D
        self.levels = levels
        self.faces = faces
        self.degeneracies = degeneracies

    def level(self, n: int) -> FreeModule:
        if 0 <= n <= self.max_degree:
            return self.levels[n]
        return FreeModule(self.ring, ())

    def face(self, n: int, i: int) -> LinearMap:
        assert 1 <= n <= self.max_degree and 0 <= i <= n
        return self.faces[n - 1][i]

    def degeneracy(self, n: int, i: int) -> LinearMap:
        assert 0 <= n < self.max_degree and 0 <= i <= n
        return self.degeneracies[n][i]

    def ranks(self):
        return tuple(M.rank for M in self.levels)

    def __eq__(self, other):
        if not isinstance(other, SimplicialModule):
            return NotImplemented
        return (self.ring == other.ring and self.ranks() == other.ranks()
                and all(a.entries == b.entries
                        for fa, fb in zip(self.faces, other.faces)
                        for a, b in zip(fa, fb))
                and all(a.entries == b.entries
                        for sa, sb in zip(self.degeneracies, other.degeneracies)
                        for a, b in zip(sa, sb)))

    def __hash__(self):
        return hash((self.ring, self.ranks()))

    def __repr__(self):
        return f"SimplicialModule({self.ring.name()}, ranks={self.ranks()})"

    def replace_face(self, n: int, i: int, new: LinearMap) -> "SimplicialModule":
        """Copy with one face matrix swapped out (for negative controls)."""
        faces = [list(fs) for fs in self.faces]
        faces[n - 1][i] = new
        return SimplicialModule(self.ring, self.levels, faces, self.degeneracies)


class SimplicialMap:
    __slots__ = ("source", "target", "components")

    def __init__(self, source: SimplicialModule, target: SimplicialModule,
                 components: Sequence[LinearMap], check: bool = True):
        assert source.ring == target.ring
        assert source.max_degree == target.max_degree
        components = tuple(components)
        assert len(components) == source.max_degree + 1
        self.source = source
        self.target = target
        self.components = components
        if check:
            D = source.max_degree
            for n in range(1, D + 1):
                for i in range(n + 1):
                    lhs = compose(target.face(n, i), components[n])
                    rhs = compose(components[n - 1], source.face(n, i))
                    if lhs.entries != rhs.entries:
                        raise ValueError(f"does not commute with d_{i} at degree {n}")
            for n in range(D):
                for i in range(n + 1):
                    lhs = compose(target.degeneracy(n, i), components[n])
                    rhs = compose(components[n + 1], source.degeneracy(n, i))
                    if lhs.entries != rhs.entries:
                        raise ValueError(f"does not commute with s_{i} at degree {n}")

    @classmethod
    def identity(cls, A: SimplicialModule) -> "SimplicialMap":
        return cls(A, A, [LinearMap.identity(M) for M in A.levels], check=False)

    def component(self, n: int) -> LinearMap:
        return self.components[n]

    def __matmul__(self, other: "SimplicialMap") -> "SimplicialMap":
        comps = [compose(a, b) for a, b in zip(self.components, other.components)]
        return SimplicialMap(other.source, self.target, comps, check=False)

    def __eq__(self, other):
        if not isinstance(other, SimplicialMap):
            return NotImplemented
        return all(a.entries == b.entries
                   for a, b in zip(self.components, other.components))

    def __hash__(self):
        return hash(tuple(len(c.entries) for c in self.components))

    def is_iso(self) -> bool:
        return all(f.is_iso() for f in self.components)

    def inverse(self) -> "SimplicialMap":
        return SimplicialMap(self.target, self.source,
                             [f.inverse() for f in self.components], check=False)

    def __repr__(self):
        return f"SimplicialMap({self.source.ranks()} -> {self.target.ranks()})"


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate(A: SimplicialModule) -> list:
    """Every violated simplicial identity, as (kind, degree, i, j) tuples.

    Checks all five families wherever both composites stay within the
    truncation window.
    """
    bad = []
    D = A.max_degree
    # d_i d_j = d_{j-1} d_i for i < j
    for n in range(2, D + 1):
        for j in range(n + 1):
            for i in range(j):
                lhs = compose(A.face(n - 1, i), A.face(n, j))
                rhs = compose(A.face(n - 1, j - 1), A.face(n, i))
                if lhs.entries != rhs.entries:
                    bad.append(("dd", n, i, j))
    # d_i s_j = s_{j-1} d_i for i < j
    for n in range(1, D):
        for j in range(n + 1):
            for i in range(j):
                lhs = compose(A.face(n + 1, i), A.degeneracy(n, j))
                rhs = compose(A.degeneracy(n - 1, j - 1), A.face(n, i))
                if lhs.entries != rhs.entries:
                    bad.append(("ds<", n, i, j))
    # d_j s_j = id = d_{j+1} s_j
    for n in range(D):
        for j in range(n + 1):
            ident = LinearMap.identity(A.level(n))
            if compose(A.face(n + 1, j), A.degeneracy(n, j)).entries != ident.entries:
                bad.append(("ds=", n, j, j))
            if compose(A.face(n + 1, j + 1), A.degeneracy(n, j)).entries != ident.entries:
                bad.append(("ds=", n, j + 1, j))
    # d_i s_j = s_j d_{i-1} for i > j + 1
    for n in range(1, D):
        for j in range(n):
            for i in range(j + 2, n + 2):
                lhs = compose(A.face(n + 1, i), A.degeneracy(n, j))
                rhs = compose(A.degeneracy(n - 1, j), A.face(n, i - 1))
                if lhs.entries != rhs.entries:
                    bad.append(("ds>", n, i, j))
    # s_i s_j = s_{j+1} s_i for i <= j
    for n in range(D - 1):
        for j in range(n + 1):
            for i in range(j + 1):
                lhs = compose(A.degeneracy(n + 1, i), A.degeneracy(n, j))
                rhs = compose(A.degeneracy(n + 1, j + 1), A.degeneracy(n, i))
                if lhs.entries != rhs.entries:
                    bad.append(("ss", n, i, j))
    return bad


# ---------------------------------------------------------------------------
# induced operators
# ---------------------------------------------------------------------------


def simplicial_operator(A: SimplicialModule, f, n: int) -> LinearMap:
    """A(f): level(n) -> level(p) for a monotone f: [p] -> [n].

    Peels f into faces (largest missing value first) then degeneracies,
    composing the stored matrices contravariantly.
    """
    p = len(f) - 1
    assert all(0 <= v <= n for v in f) and is_monotone(f)
    op = LinearMap.identity(A.level(n))
    cur = f
    hi = n
    while True:
        present = set(cur)
        missing = [a for a in range(hi + 1) if a not in present]
        if not missing:
            break
        a = max(missing)
        op = compose(A.face(hi, a), op)
        cur = tuple(v if v < a else v - 1 for v in cur)
        hi -= 1
    # cur: [p] ->> [hi]; peel first duplicates inward
    word = []
    while len(cur) - 1 > hi:
        i = next(t for t in range(len(cur) - 1) if cur[t] == cur[t + 1])
        word.append(i)
        cur = cur[:i] + cur[i + 1:]
    for lvl_offset, i in enumerate(reversed(word)):
        op = compose(A.degeneracy(hi + lvl_offset, i), op)
    return op


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def from_simplicial_set(simplices: dict, ring: Ring, max_degree: int
                        ) -> SimplicialModule:
    """Linearize a finite simplicial set given by nondegenerate simplices.

    `simplices` maps name -> list of faces (d_0..d_n order); vertices map
    to []. A face is either a name (nondegenerate) or (name, word) with a
    strictly decreasing degeneracy word, so dim(name) + len(word) = n - 1.
    Level n gets one generator per pair (x, eta) with x nondegenerate and
    eta: [n] ->> [dim x]; operators are induced by monotone composition.
    """
    names = list(simplices)
    dims = {}
    for name, faces in simplices.items():
        dims[name] = len(faces) - 1 if faces else 0
    face_pairs = {}
    for name, faces in simplices.items():
        lst = []
        for spec in faces:
            if isinstance(spec, str):
                y, word = spec, ()
            else:
                y, word = spec[0], tuple(spec[1])
            assert y in dims, f"face {y!r} of {name!r} not listed"
            assert dims[y] + len(word) == dims[name] - 1, \
                f"face of {name!r} has wrong dimension"
            assert all(word[t] > word[t + 1] for t in range(len(word) - 1)), \
                "degeneracy word must be strictly decreasing"
            lst.append((y, surjection_from_word(word, dims[y])))
        face_pairs[name] = lst

    def evaluate(x, g):
        # value of the simplicial set at monotone g: [p] -> [dim x], in
        # normal form (nondegenerate, surjection)
        while True:
            m = dims[x]
            present = set(g)
            missing = [a for a in range(m + 1) if a not in present]
            if not missing:
                return x, g
            a = max(missing)
            x1, eta1 = face_pairs[x][a]
            g = compose_monotone(eta1, tuple(v if v < a else v - 1 for v in g))
            x = x1

    order = {name: k for k, name in enumerate(names)}
    basis = []
    index = {}
    for n in range(max_degree + 1):
        level = []
        for name in sorted(names, key=lambda s: (dims[s], order[s])):
            if dims[name] > n:
                continue
            for eta in monotone_surjections(n, dims[name]):
                level.append((name, eta))
        basis.append(level)
        for pos, key in enumerate(level):
            index[(n, key)] = pos

    def label(name, eta):
        word = epi_factor_word(eta)
        if not word:
            return name
        return "".join(f"s{j}" for j in word) + "|" + name

    levels = [FreeModule(ring, tuple(label(*key) for key in basis[n]))
              for n in range(max_degree + 1)]
    faces = []
    for n in range(1, max_degree + 1):
        fs = []
        for i in range(n + 1):
            entries = {}
            for col, (x, eta) in enumerate(basis[n]):
                y, zeta = evaluate(x, compose_monotone(eta, delta(i, n)))
                entries[(index[(n - 1, (y, zeta))], col)] = ring.one
            fs.append(LinearMap(levels[n], levels[n - 1], entries))
        faces.append(fs)
    degeneracies = []
    for n in range(max_degree):
        ss = []
        for i in range(n + 1):
            entries = {}
            for col, (x, eta) in enumerate(basis[n]):
                key = (x, compose_monotone(eta, sigma(i, n)))
                entries[(index[(n + 1, key)], col)] = ring.one
            ss.append(LinearMap(levels[n], levels[n + 1], entries))
        degeneracies.append(ss)
    return SimplicialModule(ring, levels, faces, degeneracies)


def standard_simplex(k: int, ring: Ring, max_degree: int) -> SimplicialModule:
    """The linearized k-simplex: one nondegenerate face per subset."""
    from itertools import combinations

    simplices = {}
    for size in range(1, k + 2):
        for verts in combinations(range(k + 1), size):
            name = "v" + "".join(str(v) for v in verts)
            if size == 1:
                simplices[name] = []
            else:
                faces = []
                for drop in range(size):
                    sub = verts[:drop] + verts[drop + 1:]
                    faces.append("v" + "".join(str(v) for v in sub))
                simplices[name] = faces
    return from_simplicial_set(simplices, ring, max_degree)


def constant_module(ring: Ring, max_degree: int, rank: int = 1) -> SimplicialModule:
    """All levels equal, all operators the identity."""
    M = free_module(ring, rank, "c")
    levels = [M] * (max_degree + 1)
    faces = [[LinearMap.identity(M) for _ in range(n + 1)]
             for n in range(1, max_degree + 1)]
    degeneracies = [[LinearMap.identity(M) for _ in range(n + 1)]
                    for n in range(max_degree)]
    return SimplicialModule(ring, levels, faces, degeneracies)


def tensor(A: SimplicialModule, B: SimplicialModule) -> SimplicialModule:
    """Degreewise tensor; operators act diagonally."""
    if A.ring != B.ring:
        raise ValueError("ring mismatch")
    D = min(A.max_degree, B.max_degree)
    levels = []
    for n in range(D + 1):
        labels = tuple(f"({a})(x)({b})" for a in A.level(n).labels
                       for b in B.level(n).labels)
        levels.append(FreeModule(A.ring, labels))
    faces = []
    for n in range(1, D + 1):
        fs = []
        for i in range(n + 1):
            blk = A.face(n, i).tensor(B.face(n, i))
            fs.append(LinearMap(levels[n], levels[n - 1], blk.entries))
        faces.append(fs)
    degeneracies = []
    for n in range(D):
        ss = []
        for i in range(n + 1):
            blk = A.degeneracy(n, i).tensor(B.degeneracy(n, i))
            ss.append(LinearMap(levels[n], levels[n + 1], blk.entries))
        degeneracies.append(ss)
    return SimplicialModule(A.ring, levels, faces, degeneracies)


def tensor_map(f: SimplicialMap, g: SimplicialMap) -> SimplicialMap:
    """f (x) g degreewise between the tensor modules."""
    src = tensor(f.source, g.source)
    tgt = tensor(f.target, g.target)
    comps = []
    for n in range(src.max_degree + 1):
        blk = f.component(n).tensor(g.component(n))
        comps.append(LinearMap(src.level(n), tgt.level(n), blk.entries))
    return SimplicialMap(src, tgt, comps, check=False)


def direct_sum(A: SimplicialModule, B: SimplicialModule) -> SimplicialModule:
    assert A.ring == B.ring and A.max_degree == B.max_degree
    D = A.max_degree
    levels = []
    for n in range(D + 1):
        labels = tuple(f"l:{a}" for a in A.level(n).labels) + \
            tuple(f"r:{b}" for b in B.level(n).labels)
        levels.append(FreeModule(A.ring, labels))
    faces = []
    for n in range(1, D + 1):
        fs = []
        for i in range(n + 1):
            blk = A.face(n, i).direct_sum(B.face(n, i))
            fs.append(LinearMap(levels[n], levels[n - 1], blk.entries))
        faces.append(fs)
    degeneracies = []
    for n in range(D):
        ss = []
        for i in range(n + 1):
            blk = A.degeneracy(n, i).direct_sum(B.degeneracy(n, i))
            ss.append(LinearMap(levels[n], levels[n + 1], blk.entries))
        degeneracies.append(ss)
    return SimplicialModule(A.ring, levels, faces, degeneracies)


def swap_map(A: SimplicialModule, B: SimplicialModule) -> SimplicialMap:
    """A (x) B -> B (x) A, transposing basis pairs; no signs degreewise."""
    AB, BA = tensor(A, B), tensor(B, A)
    comps = []
    for n in range(AB.max_degree + 1):
        ra, rb = A.level(n).rank, B.level(n).rank
        entries = {}
        for i in range(ra):
            for j in range(rb):
                entries[(j * ra + i, i * rb + j)] = A.ring.one
        comps.append(LinearMap(AB.level(n), BA.level(n), entries))
    return SimplicialMap(AB, BA, comps)


def moore_complex(A: SimplicialModule) -> ChainComplex:
    """Same levels, differential the alternating face sum."""
    diffs = []
    for n in range(1, A.max_degree + 1):
        d = LinearMap.zero(A.level(n), A.level(n - 1))
        for i in range(n + 1):
            term = A.face(n, i)
            d = d + term if i % 2 == 0 else d - term
        diffs.append(d)
    return ChainComplex(A.ring, A.levels, diffs)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def simp_to_json(A: SimplicialModule) -> dict:
    return {
        "ring": A.ring.name(),
        "max_degree": A.max_degree,
        "levels": list(A.ranks()),
        "faces": [[matrix_to_json(d) for d in fs] for fs in A.faces],
        "degeneracies": [[matrix_to_json(s) for s in ss] for ss in A.degeneracies],
    }


def simp_from_json(data: dict) -> SimplicialModule:
    from .rings import ring_from_name
    ring = ring_from_name(data["ring"])
    levels = [free_module(ring, r) for r in data["levels"]]
    faces = []
    for n, fs in enumerate(data["faces"], start=1):
        faces.append([LinearMap(levels[n], levels[n - 1], matrix_from_json(m).entries)
                      for m in fs])
    degeneracies = []
    for n, ss in enumerate(data["degeneracies"]):
        degeneracies.append([LinearMap(levels[n], levels[n + 1],
                                       matrix_from_json(m).entries) for m in ss])
    return SimplicialModule(ring, levels, faces, degeneracies)
