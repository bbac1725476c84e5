"""Nerve levels, the realization spectral sequence, and kernel certificates.

The nerve used here is semi-simplicial: level s holds the strictly
descending object chains of length s, each carrying the product components
of its constituent morphism spaces.  The first page is levelwise homology
with d1 the alternating sum of face maps; the second page is computed by
exact integer homology.  Assembly of total homology refuses to guess:
whenever a higher differential cannot be ruled out, an Indeterminate value
names the blocking cells instead of an answer.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field

from .flowcat import (FlowCategory, LocallyFiniteFamily, validate_category,
                      window)
from .zhom import (FGAbelianGroup, GradedGroup, SparseIntMatrix, column_rank,
                   graded_tensor, kernel_basis)


class MissingDegreeAnnotation(KeyError):
    """An inner face relates two H1 carriers with no declared degree."""


class UnsupportedHomology(ValueError):
    """Induced maps beyond rank-one H1 bookkeeping were requested."""


class PeriodicityViolation(ValueError):
    """A declared stencil periodicity fails at some index."""

    def __init__(self, index: int, detail: str = ""):
        self.index = index
        super().__init__(f"periodicity fails first at index {index}" +
                         (f": {detail}" if detail else ""))


# ---------------------------------------------------------------------------
# Nerve levels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelComponent:
    chain: tuple[str, ...]     # objects p0 > p1 > ... > ps
    factors: tuple[str, ...]   # one morphism component id per arrow
    homology: GradedGroup


@dataclass
class LevelData:
    s: int
    chains: list[tuple[str, ...]]
    components: list[LevelComponent]
    index: dict[tuple[tuple[str, ...], tuple[str, ...]], int]


def _product_homology(cat: FlowCategory, factors: tuple[str, ...]) -> GradedGroup:
    if not factors:
        return GradedGroup([FGAbelianGroup(1)])
    acc = cat.homology_of(factors[0])
    for f in factors[1:]:
        acc = graded_tensor(acc, cat.homology_of(f))
    return acc


def nerve_level(cat: FlowCategory, s: int) -> LevelData:
    """Level s of the semi-simplicial nerve: nondegenerate chains only, with
    product components enumerated in fixed lexicographic order."""
    if s == 0:
        chains = [(p.id,) for p in cat.objects]
        comps = [LevelComponent(ch, (), GradedGroup([FGAbelianGroup(1)]))
                 for ch in chains]
        return LevelData(0, chains, comps,
                         {(c.chain, c.factors): i for i, c in enumerate(comps)})
    order = {p.id: i for i, p in enumerate(cat.objects)}
    pairs = cat.nonidentity_pairs()
    succ: dict[str, list[str]] = defaultdict(list)
    for p, q in pairs:
        succ[p].append(q)
    for p in succ:
        succ[p].sort(key=lambda q: order[q])
    chains: list[tuple[str, ...]] = []

    def extend(chain):
        if len(chain) == s + 1:
            chains.append(tuple(chain))
            return
        for q in succ.get(chain[-1], ()):
            chain.append(q)
            extend(chain)
            chain.pop()

    for p in cat.objects:
        extend([p.id])
    components: list[LevelComponent] = []
    for ch in chains:
        factor_lists = [[c.id for c in cat.hom_components(ch[i], ch[i + 1])]
                        for i in range(s)]
        for combo in itertools.product(*factor_lists):
            components.append(
                LevelComponent(ch, combo, _product_homology(cat, combo)))
    return LevelData(s, chains, components,
                     {(c.chain, c.factors): i for i, c in enumerate(components)})


def nerve_levels(cat: FlowCategory, max_s: int | None = None) -> list[LevelData]:
    """All nonempty levels from 0 up; chain length is capped by the object
    count, so the list is finite."""
    cap = len(cat.objects) - 1 if max_s is None else max_s
    levels = []
    for s in range(cap + 1):
        lev = nerve_level(cat, s)
        if s > 0 and not lev.components:
            break
        levels.append(lev)
    return levels


def face_image(cat: FlowCategory, comp: LevelComponent, m: int):
    """Face d_m of a level component: returns (chain, factors, composed_pos)
    where composed_pos is the position of the freshly composed factor, or
    None for the two outer faces."""
    s = len(comp.factors)
    if not 0 <= m <= s:
        raise IndexError(f"face {m} out of range for level {s}")
    if m == 0:
        return comp.chain[1:], comp.factors[1:], None
    if m == s:
        return comp.chain[:-1], comp.factors[:-1], None
    out = cat.compose(comp.factors[m - 1], comp.factors[m])
    chain = comp.chain[:m] + comp.chain[m + 1:]
    factors = comp.factors[:m - 1] + (out,) + comp.factors[m + 1:]
    return chain, factors, m - 1


# ---------------------------------------------------------------------------
# Homology bases and face matrices
# ---------------------------------------------------------------------------

def _h_basis(cat: FlowCategory, level: LevelData, r: int):
    """Free basis of H_r of a level: (component index, degree multi-index,
    generator multi-index) triples in enumeration order."""
    basis = []
    for ci, comp in enumerate(level.components):
        if not comp.factors:
            if r == 0:
                basis.append((ci, (), ()))
            continue
        hs = [cat.homology_of(f) for f in comp.factors]

        def walk(pos, remaining, degs, gens):
            if pos == len(hs):
                if remaining == 0:
                    basis.append((ci, tuple(degs), tuple(gens)))
                return
            top = min(remaining, hs[pos].top)
            for d in range(top + 1):
                rank = hs[pos].at(d).rank
                for g in range(rank):
                    degs.append(d)
                    gens.append(g)
                    walk(pos + 1, remaining - d, degs, gens)
                    degs.pop()
                    gens.pop()

        walk(0, r, [], [])
    return basis


def _face_basis_image(cat: FlowCategory, comp: LevelComponent, m: int,
                      degs: tuple[int, ...], gens: tuple[int, ...]):
    """Image of one H_r basis element under face d_m.

    Returns (chain, factors, degs', gens', coefficient); coefficient 0 means
    the class dies (projection kills positive degrees of a dropped factor,
    or the composed target has no homology in the needed degree).
    """
    s = len(comp.factors)
    chain, factors, cpos = face_image(cat, comp, m)
    if cpos is None:
        drop = 0 if m == 0 else s - 1
        if degs and degs[drop] > 0:
            return chain, factors, (), (), 0
        nd = degs[:drop] + degs[drop + 1:]
        ng = gens[:drop] + gens[drop + 1:]
        return chain, factors, nd, ng, 1
    a, b = degs[cpos], degs[cpos + 1]
    out = factors[cpos]
    nd = degs[:cpos] + (a + b,) + degs[cpos + 2:]
    ng = gens[:cpos] + (0,) + gens[cpos + 2:]
    if a + b == 0:
        return chain, factors, nd, ng, 1
    out_h = cat.homology_of(out)
    if out_h.at(a + b).rank == 0:
        return chain, factors, (), (), 0
    if a + b == 1:
        left, right = comp.factors[m - 1], comp.factors[m]
        if out_h.at(1).rank > 1 or \
                cat.homology_of(left).at(1).rank > 1 or \
                cat.homology_of(right).at(1).rank > 1:
            raise UnsupportedHomology(
                f"rank-one H1 bookkeeping cannot express ({left}, {right})")
        degree = cat.degrees.get((left, right))
        if degree is None:
            raise MissingDegreeAnnotation((left, right))
        return chain, factors, nd, ng, degree
    raise UnsupportedHomology(
        f"composition into degree {a + b} homology of {out}")


def face_maps_h(cat: FlowCategory, s: int, r: int,
                levels: list[LevelData] | None = None) -> list[SparseIntMatrix]:
    """The s+1 face matrices from level s to level s-1 on H_r.

    Columns follow the level-s basis, rows the level-(s-1) basis; outer faces
    drop an end arrow, inner faces compose through the table.
    """
    if levels is None:
        levels = [nerve_level(cat, t) for t in range(s + 1)]
    src, dst = levels[s], levels[s - 1]
    src_basis = _h_basis(cat, src, r)
    dst_basis = _h_basis(cat, dst, r)
    dst_index = {b: i for i, b in enumerate(dst_basis)}
    col_of = {b: j for j, b in enumerate(src_basis)}
    mats = []
    for m in range(s + 1):
        entries = []
        for (ci, degs, gens) in src_basis:
            comp = src.components[ci]
            chain, factors, nd, ng, coeff = _face_basis_image(
                cat, comp, m, degs, gens)
            if coeff == 0:
                continue
            ti = dst.index[(chain, factors)]
            entries.append((dst_index[(ti, nd, ng)],
                            col_of[(ci, degs, gens)], coeff))
        mats.append(SparseIntMatrix(len(dst_basis), len(src_basis), entries))
    return mats


# ---------------------------------------------------------------------------
# Spectral pages
# ---------------------------------------------------------------------------

@dataclass
class SpectralPage:
    page: int
    entries: dict[tuple[int, int], FGAbelianGroup]
    d1: dict[tuple[int, int], SparseIntMatrix]
    top: int
    max_r: int
    levels: list[LevelData]
    category: FlowCategory
    basis_dims: dict[tuple[int, int], int] = field(default_factory=dict)
    winding_zero: dict[tuple[int, int], bool] = field(default_factory=dict)

    def entry(self, r: int, s: int) -> FGAbelianGroup:
        return self.entries.get((r, s), FGAbelianGroup(0))


def e1_page(cat: FlowCategory, max_r: int = 3) -> SpectralPage:
    """First page: entry (r, s) is H_r of level s, d1 the alternating face
    sum.  The category is validated first and d1 after d1 = 0 is checked at
    every cell."""
    report = validate_category(cat)
    if not report.ok:
        raise ValueError(f"invalid category:\n{report}")
    levels = nerve_levels(cat)
    top = len(levels) - 1
    entries = {}
    dims = {}
    bases = {}
    for s, lev in enumerate(levels):
        for r in range(max_r + 1):
            group = FGAbelianGroup(0)
            for comp in lev.components:
                group = group.direct_sum(comp.homology.at(r))
            entries[(r, s)] = group
            bases[(r, s)] = _h_basis(cat, lev, r)
            dims[(r, s)] = len(bases[(r, s)])
            if group.torsion:
                # free bookkeeping below would miss torsion generators
                raise UnsupportedHomology(
                    f"torsion in E1 entry ({r}, {s}) is not supported "
                    "by the face-matrix bookkeeping")
    d1 = {}
    for s in range(1, top + 1):
        for r in range(max_r + 1):
            mats = face_maps_h(cat, s, r, levels)
            total = {}
            for m, mat in enumerate(mats):
                sign = -1 if m % 2 else 1
                for (i, j), v in mat.items():
                    total[(i, j)] = total.get((i, j), 0) + sign * v
            d1[(r, s)] = SparseIntMatrix(dims[(r, s - 1)], dims[(r, s)],
                                         [(i, j, v) for (i, j), v in total.items()])
    for s in range(2, top + 1):
        for r in range(max_r + 1):
            if not (d1[(r, s - 1)] @ d1[(r, s)]).is_zero():
                raise AssertionError(f"d1 after d1 != 0 at (r={r}, s={s})")
    return SpectralPage(1, entries, d1, top, max_r, levels, cat,
                        basis_dims=dims)


def e2_page(page1: SpectralPage) -> SpectralPage:
    """Second page: entry (r, s) is ker(d1 at (r, s)) / im(d1 at (r, s+1)),
    computed exactly over Z.  Where the page supports it, a chain-level
    winding certificate marks d2 maps out of the bottom row as zero."""
    if page1.page != 1:
        raise ValueError("e2_page expects a first page")
    from .zhom import homology_at
    entries = {}
    for (r, s), dim in page1.basis_dims.items():
        d_out = page1.d1.get((r, s))
        if d_out is None:
            d_out = SparseIntMatrix.zero(0, dim)
        d_in = page1.d1.get((r, s + 1))
        entries[(r, s)] = homology_at(d_out, d_in)
    page2 = SpectralPage(2, entries, dict(page1.d1), page1.top, page1.max_r,
                         page1.levels, page1.category,
                         basis_dims=dict(page1.basis_dims))
    for s in range(2, page1.top + 1):
        src = entries.get((0, s), FGAbelianGroup(0))
        tgt = entries.get((1, s - 2), FGAbelianGroup(0))
        if not src.is_trivial and not tgt.is_trivial:
            verdict = _d2_zero_by_winding(page1, s)
            if verdict is not None:
                page2.winding_zero[(0, s)] = verdict
    return page2


def _d2_zero_by_winding(page1: SpectralPage, s: int) -> bool | None:
    """Chain-level certificate that d2 out of E2_{0,s} is the zero map.

    Classes in the bottom-row kernel are integer combinations of product
    components all of whose factors are points.  Their face chains pair off
    inside interval components; the connecting paths compose into arcs of
    the marked circle, and the d2 image is the resulting 1-cycle's class.
    The certificate passes exactly when every kernel generator's arc chain
    cancels identically, which decides the class in an annulus.  Returns
    None when the category carries no circle geometry or the bookkeeping
    does not apply; the caller then stays agnostic.
    """
    cat = page1.category
    geo = cat.geometry
    if geo is None or s < 2:
        return None
    mat = page1.d1.get((0, s))
    if mat is None:
        return None
    kvecs = kernel_basis(mat)
    if not kvecs:
        return True
    lev, lev1 = page1.levels[s], page1.levels[s - 1]
    for comp in lev.components:
        for f in comp.factors:
            if cat.component_by_id[f].tag.kind != "point":
                return None
    for vec in kvecs:
        marks: dict[int, dict[tuple, int]] = defaultdict(lambda: defaultdict(int))
        moving: dict[int, tuple[int, str]] = {}
        for ci, lam in enumerate(vec):
            if lam == 0:
                continue
            comp = lev.components[ci]
            for m in range(s + 1):
                chain, factors, cpos = face_image(cat, comp, m)
                ti = lev1.index[(chain, factors)]
                coeff = -lam if m % 2 else lam
                if cpos is None:
                    marks[ti][("pt",)] += coeff
                    continue
                out = factors[cpos]
                kind = cat.component_by_id[out].tag.kind
                if kind == "point":
                    marks[ti][("pt",)] += coeff
                elif kind == "interval":
                    if out not in geo.arcs:
                        return None
                    v = geo.vertex_of((comp.factors[cpos],
                                       comp.factors[cpos + 1]))
                    if v is None:
                        return None
                    marks[ti][("v", v)] += coeff
                    prev = moving.get(ti)
                    if prev is not None and prev != (cpos, out):
                        return None
                    moving[ti] = (cpos, out)
                else:
                    return None
        chain_sum: dict[tuple[str, str], int] = defaultdict(int)
        for ti, mk in marks.items():
            mk = {k: v for k, v in mk.items() if v}
            if not mk:
                continue
            if ti not in moving:
                # net marks on a single point would contradict ker(d1)
                return None
            cpos, out = moving[ti]
            if any(k == ("pt",) for k in mk):
                return None
            arc = geo.arcs[out]
            coeffs = {arc.v0: 0, arc.v1: 0}
            for k, v in mk.items():
                if k[1] not in coeffs:
                    return None
                coeffs[k[1]] += v
            if coeffs[arc.v0] + coeffs[arc.v1]:
                return None
            a = coeffs[arc.v1]
            if a == 0:
                continue
            tcomp = lev1.components[ti]
            for m2 in range(1, len(tcomp.factors)):
                if cpos not in (m2 - 1, m2):
                    continue
                out2 = cat.compose(tcomp.factors[m2 - 1], tcomp.factors[m2])
                kind2 = cat.component_by_id[out2].tag.kind
                if kind2 in ("point", "interval", "disk"):
                    continue
                if out2 not in geo.cylinders:
                    return None
                sign = -1 if m2 % 2 else 1
                chain_sum[(out2, arc.edge)] += sign * a
        if any(v for v in chain_sum.values()):
            return False
    return True


# ---------------------------------------------------------------------------
# Total homology
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Indeterminate:
    reason: str
    blockers: tuple[str, ...] = ()

    def __str__(self):
        extra = f" [{', '.join(self.blockers)}]" if self.blockers else ""
        return f"indeterminate: {self.reason}{extra}"


def total_homology(page2: SpectralPage, n: int):
    """Degree-n homology of the realization, assembled from the second page.

    The group is returned when every higher differential touching the
    antidiagonal r + s = n is ruled out (zero source or target at page two,
    or a winding certificate for a d2 out of the bottom row) and the
    surviving entries assemble without extension ambiguity; otherwise an
    Indeterminate naming the blockers.
    """
    if page2.page != 2:
        raise ValueError("total_homology expects a second page")
    top = page2.top
    live = [(r, n - r) for r in range(n + 1)
            if 0 <= n - r <= top and not page2.entry(r, n - r).is_trivial]
    if not live:
        return FGAbelianGroup(0)
    blockers = []
    max_page = top + 1
    for (r, s) in live:
        for k in range(2, max_page + 1):
            ro, so = r + k - 1, s - k
            if so >= 0 and not page2.entry(ro, so).is_trivial:
                if not (k == 2 and r == 0 and
                        page2.winding_zero.get((0, s)) is True):
                    blockers.append(f"d{k}: ({r},{s}) -> ({ro},{so})")
            ri, si = r - k + 1, s + k
            if ri >= 0 and si <= top and not page2.entry(ri, si).is_trivial:
                if not (k == 2 and ri == 0 and
                        page2.winding_zero.get((0, si)) is True):
                    blockers.append(f"d{k}: ({ri},{si}) -> ({r},{s})")
    if blockers:
        return Indeterminate("higher differentials not ruled out",
                             tuple(sorted(set(blockers))))
    groups = [page2.entry(r, s) for (r, s) in live]
    if len(groups) == 1:
        return groups[0]
    if all(not g.torsion for g in groups):
        return groups[0].direct_sum(*groups[1:])
    return Indeterminate("extension ambiguity between antidiagonal entries",
                         tuple(f"({r},{s})" for (r, s) in live))


def homology_table(page2: SpectralPage, n_max: int | None = None):
    if n_max is None:
        n_max = page2.top + page2.max_r
    return [total_homology(page2, n) for n in range(n_max + 1)]


# ---------------------------------------------------------------------------
# Windowed kernel certificates
# ---------------------------------------------------------------------------

@dataclass
class KernelCertificate:
    level: int
    window: int | None
    columns: int
    rank: int
    periodicity: str
    periodicity_ok: bool
    verdict: str
    kernel_rank: int
    generators: list[list[tuple[int, tuple[str, ...]]]]

    @property
    def full_rank(self) -> bool:
        return self.rank == self.columns


def _h0_d1(cat: FlowCategory, s: int):
    """d1 on the H_0 row at level s, with its two level datas."""
    levels = [nerve_level(cat, t) for t in range(s + 1)]
    mats = face_maps_h(cat, s, 0, levels)
    total = {}
    for m, mat in enumerate(mats):
        sign = -1 if m % 2 else 1
        for (i, j), v in mat.items():
            total[(i, j)] = total.get((i, j), 0) + sign * v
    rows = len(levels[s - 1].components)
    cols = len(levels[s].components)
    d1 = SparseIntMatrix(rows, cols,
                         [(i, j, v) for (i, j), v in total.items()])
    return d1, levels[s], levels[s - 1]


def _normalized_kernel(vecs, lev: LevelData):
    from math import gcd
    gens = []
    for vec in vecs:
        g = 0
        for v in vec:
            g = gcd(g, v)
        if g > 1:
            vec = tuple(v // g for v in vec)
        lead = next((v for v in vec if v), 1)
        if lead < 0:
            vec = tuple(-v for v in vec)
        gens.append([(v, lev.components[i].factors)
                     for i, v in enumerate(vec) if v])
    return gens


def windowed_kernel_certificate(family_or_cat, s: int = 3,
                                N: int = 32) -> KernelCertificate:
    """Exact-rank certificate for ker(d1) on the bottom row at level s.

    For a locally finite family, the window of size N is built (full
    codomain via stencil closure), the d1 column rank is computed over Z,
    and the boundary stencil of generator i+period is checked to be the
    index shift of that of generator i across the window.  Full column rank
    plus a passed periodicity check certifies that no finitely supported
    chain lies in the kernel: any such chain lives in some window, and all
    larger windows repeat the same stencil structure shifted.

    A finite category is treated as trivially periodic; if the kernel is
    nonzero its rank and content-normalized generators are reported.
    """
    if isinstance(family_or_cat, LocallyFiniteFamily):
        family = family_or_cat
        cat = window(family, N)
        win: int | None = N
    else:
        family = None
        cat = family_or_cat
        win = None
    d1, lev, lev1 = _h0_d1(cat, s)
    rank = column_rank(d1)
    cols = d1.cols

    if family is None:
        periodicity = "finite category, trivially periodic"
        periodicity_ok = True
    else:
        last = N - family.period
        if last < family.period_start:
            periodicity = "window too small to contain a shifted pair"
        else:
            periodicity = (f"stencil shift checked for indices "
                           f"{family.period_start}..{last} "
                           f"(period {family.period})")
        periodicity_ok = True
        columns_by_comp: dict[tuple[str, ...], list[tuple]] = defaultdict(list)
        col_labels = [c.factors for c in lev.components]
        row_labels = [(c.chain, c.factors) for c in lev1.components]
        for (i, j), v in d1.items():
            columns_by_comp[col_labels[j]].append((row_labels[i], v))
        shift = family.shift_id
        for i in range(family.period_start, N - family.period + 1):
            gid = family.generator_id(i)
            for factors in col_labels:
                if gid not in factors:
                    continue
                shifted = tuple(shift(f) for f in factors)
                expect = sorted(
                    (((ch, tuple(shift(f) for f in fs)), v)
                     for (ch, fs), v in columns_by_comp[factors]))
                got = sorted(columns_by_comp.get(shifted, []))
                if expect != got:
                    raise PeriodicityViolation(i, f"column {factors}")

    if rank == cols and periodicity_ok:
        return KernelCertificate(s, win, cols, rank, periodicity,
                                 periodicity_ok, "KernelZeroForAllWindows",
                                 0, [])
    gens = _normalized_kernel(kernel_basis(d1), lev)
    return KernelCertificate(s, win, cols, rank, periodicity, periodicity_ok,
                             "KernelFoundRank", cols - rank, gens)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def page_to_json(page: SpectralPage) -> dict:
    """Fixed-order JSON view of a page: entries with rank and torsion, and
    (on page one) the d1 matrices as triplet lists."""
    entries = []
    for (r, s) in sorted(page.entries):
        g = page.entries[(r, s)]
        entries.append({"r": r, "s": s, "rank": g.rank,
                        "torsion": list(g.torsion)})
    data = {"page": page.page, "entries": entries}
    if page.page == 1:
        d1 = []
        for (r, s) in sorted(page.d1):
            mat = page.d1[(r, s)]
            triples = sorted([i, j, v] for (i, j), v in mat.items())
            d1.append({"r": r, "s": s, "rows": mat.rows, "cols": mat.cols,
                       "matrix": triples})
        data["d1"] = d1
    return data


def homology_to_csv(table) -> str:
    lines = ["n,rank,torsion,status"]
    for n, h in enumerate(table):
        if isinstance(h, Indeterminate):
            lines.append(f"{n},,,{h.reason}")
        else:
            tor = ";".join(str(t) for t in h.torsion)
            lines.append(f"{n},{h.rank},{tor},determinate")
    return "\n".join(lines) + "\n"
