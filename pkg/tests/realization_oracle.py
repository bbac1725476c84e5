"""Independent homology oracle for the classifying space.

Builds an explicit cellular model of the realization: every morphism-space
component gets a small CW model (points, arcs with their endpoint markings,
bubbles as two edges and a filling cell, the cylinder as two marked core
circles joined by rungs and squares), products are tensored, and the face
maps become exact chain maps via witness-chain flattening.  The homology of
the resulting total complex is the homology of the realization, computed
without any spectral bookkeeping; the only shared code with the engine is
the exact integer homology of a chain complex.
"""

from collections import defaultdict

from morseflow.zhom import SparseIntMatrix, chain_complex_homology


def canonical_chain(cat, comp_id, _memo=None):
    """Flattened constituent chain of a point component."""
    if _memo is None:
        _memo = {}
    if comp_id in _memo:
        return _memo[comp_id]
    preimages = sorted((l, r) for (l, r), out in cat.composition.items()
                       if out == comp_id)
    if preimages and cat.component_by_id[comp_id].broken_only:
        l, r = preimages[0]
        chain = canonical_chain(cat, l, _memo) + canonical_chain(cat, r, _memo)
    else:
        chain = (comp_id,)
    _memo[comp_id] = chain
    return chain


def _x_of(geo, chain):
    hits = [c for c in chain if isinstance(c, str) and c in geo.vertices]
    if len(hits) != 1:
        raise AssertionError(f"chain {chain} has no unique circle vertex")
    return hits[0]


def _side_of(chain):
    named = [c for c in chain if isinstance(c, str)]
    if "g+" in named or "s+" in named:
        return "+"
    if "g-" in named or "s-" in named:
        return "-"
    raise AssertionError(f"cannot orient cylinder chain {chain}")


class Model:
    """Cellular model of one morphism component."""

    def __init__(self):
        self.verts: list = []
        self.edges: dict = {}    # name -> (v0, v1)
        self.cells2: dict = {}   # name -> list[(edge_name, coeff)]

    def add_vertex(self, name):
        if name not in self.verts:
            self.verts.append(name)
        return name


def build_models(cat):
    """Models for every nonidentity component, plus the vertex-naming map."""
    geo = cat.geometry
    canon = {}
    marked = defaultdict(set)
    for (l, r), out in cat.composition.items():
        pass  # marked chains are produced on demand below
    # collect every chain that is the image of an iterated composite
    chains = {cid: {canonical_chain(cat, cid, canon)}
              for cid, (p, q) in cat.component_space.items()
              if p != q and cat.component_by_id[cid].tag.kind == "point"}
    changed = True
    while changed:
        changed = False
        for (l, r), out in cat.composition.items():
            for wl in list(chains.get(l, ())):
                for wr in list(chains.get(r, ())):
                    w = wl + wr
                    if w not in chains.setdefault(out, set()):
                        chains[out].add(w)
                        changed = True

    def vertex_name(cid, chain):
        kind = cat.component_by_id[cid].tag.kind
        if kind == "point":
            return ("pt", cid)
        if kind == "interval":
            if geo is not None and cid in geo.arcs:
                return ("iv", cid, _x_of(geo, chain))
            return ("iv", cid, chain)
        if kind == "disk":
            return ("dk", cid, _x_of(geo, chain))
        if kind == "cylinder":
            return ("cy", cid, _x_of(geo, chain), _side_of(chain))
        raise AssertionError(f"no vertices expected on {cid}")

    models: dict[str, Model] = {}
    for cid, (p, q) in sorted(cat.component_space.items()):
        if p == q:
            continue
        tag = cat.component_by_id[cid].tag.kind
        m = Model()
        if tag == "point":
            m.add_vertex(("pt", cid))
        elif tag == "circle":
            v = m.add_vertex(("cv", cid))
            m.edges[("loop", cid)] = (v, v)
        elif tag == "interval":
            if geo is not None and cid in geo.arcs:
                arc = geo.arcs[cid]
                v0 = m.add_vertex(("iv", cid, arc.v0))
                v1 = m.add_vertex(("iv", cid, arc.v1))
            else:
                names = sorted(vertex_name(cid, w)
                               for w in chains.get(cid, ()))
                assert len(names) <= 2, (cid, names)
                for k in range(2 - len(names)):
                    names.append(("iv", cid, ("far", k)))
                for n in names:
                    m.add_vertex(n)
                v0, v1 = names[0], names[1]
            m.edges[("ie", cid)] = (v0, v1)
        elif tag in ("disk", "cylinder"):
            pass  # built below once the incoming pairings are known
        else:
            raise AssertionError(f"oracle cannot model tag {tag!r}")
        models[cid] = m

    # named edges: one per pairing that pushes an interval edge forward
    pairing_edges = {}
    for (l, r), out in sorted(cat.composition.items()):
        lk = cat.component_by_id[l].tag.kind
        rk = cat.component_by_id[r].tag.kind
        if "interval" not in (lk, rk):
            continue
        iv, pt_partner, left_is_iv = (l, r, True) if lk == "interval" \
            else (r, l, False)
        (v0, v1) = models[iv].edges[("ie", iv)]

        def push(vn):
            if vn[0] == "iv" and isinstance(vn[2], tuple) \
                    and vn[2] and vn[2][0] == "far":
                raise AssertionError("anonymous endpoint without geometry")
            out_kind = cat.component_by_id[out].tag.kind
            if geo is not None and iv in geo.arcs:
                x = vn[2]
                if out_kind == "disk":
                    return ("dk", out, x)
                if out_kind == "cylinder":
                    probe = canonical_chain(cat, pt_partner, canon)
                    side = "+" if ("g+" in probe or "s+" in probe) else "-"
                    return ("cy", out, x, side)
            chain_iv = vn[2]
            partner = canonical_chain(cat, pt_partner, canon)
            w = partner + chain_iv if not left_is_iv else chain_iv + partner
            return vertex_name(out, w)

        name = ("ce", out, l, r)
        pairing_edges[(l, r)] = name
        w0, w1 = push(v0), push(v1)
        models[out].add_vertex(w0)
        models[out].add_vertex(w1)
        models[out].edges[name] = (w0, w1)

    # add the marked composite vertices on disks and cylinders
    for cid, m in models.items():
        tag = cat.component_by_id[cid].tag.kind
        if tag in ("disk", "cylinder"):
            for w in chains.get(cid, ()):
                m.add_vertex(vertex_name(cid, w))

    # disks: two parallel edges between the same corners plus a filler
    for cid, m in models.items():
        if cat.component_by_id[cid].tag.kind != "disk":
            continue
        names = [n for n in m.edges if n[0] == "ce"]
        assert len(names) == 2, (cid, names)
        e0, e1 = names
        assert m.edges[e0] == m.edges[e1], (cid, m.edges)
        m.cells2[("d2", cid)] = [(e0, 1), (e1, -1)]

    # cylinders: walk the circle graph, close it if it is a path, add the
    # second core circle, rungs, and filling squares
    for cid, m in models.items():
        if cat.component_by_id[cid].tag.kind != "cylinder":
            continue
        assert geo is not None
        adj = defaultdict(list)
        edge_ends = {}
        for arc in geo.arcs.values():
            if arc.edge not in edge_ends:
                edge_ends[arc.edge] = (arc.v0, arc.v1)
                adj[arc.v0].append((arc.edge, arc.v1))
                adj[arc.v1].append((arc.edge, arc.v0))
        degrees = {v: len(nbrs) for v, nbrs in adj.items()}
        odd = sorted(v for v, d in degrees.items() if d == 1)
        assert len(odd) in (0, 2), odd
        start = odd[0] if odd else min(adj)
        walk = [start]
        walk_edges = []
        seen = set()
        v = start
        while True:
            step = next(((e, w) for e, w in adj[v] if e not in seen), None)
            if step is None:
                break
            e, w = step
            seen.add(e)
            walk_edges.append((e, v, w))
            walk.append(w)
            v = w
        if odd:
            walk_edges.append(("__far__", walk[-1], walk[0]))
        positions = walk[:-1] if not odd else walk
        # edge lookup per (side, circle edge)
        by_slot = {}
        for (l, r), name in pairing_edges.items():
            if name[1] != cid:
                continue
            iv = l if cat.component_by_id[l].tag.kind == "interval" else r
            pt = r if iv == l else l
            probe = canonical_chain(cat, pt, canon)
            side = "+" if ("g+" in probe or "s+" in probe) else "-"
            slot = (side, geo.arcs[iv].edge)
            assert slot not in by_slot, slot
            by_slot[slot] = name
        for side in "+-":
            for x in positions:
                m.add_vertex(("cy", cid, x, side))
            if odd:
                m.edges[("fe", cid, side)] = (("cy", cid, walk[-1], side),
                                              ("cy", cid, walk[0], side))
                by_slot[(side, "__far__")] = ("fe", cid, side)
        for x in positions:
            m.edges[("rg", cid, x)] = (("cy", cid, x, "+"),
                                       ("cy", cid, x, "-"))
        for k, (e, a, b) in enumerate(walk_edges):
            boundary = []
            for side, sgn in (("+", 1), ("-", -1)):
                name = by_slot[(side, e)]
                ends = m.edges[name]
                orient = 1 if ends == (("cy", cid, a, side),
                                       ("cy", cid, b, side)) else -1
                assert ends in ((("cy", cid, a, side), ("cy", cid, b, side)),
                                (("cy", cid, b, side), ("cy", cid, a, side)))
                boundary.append((name, sgn * orient))
            boundary.append((("rg", cid, b), 1))
            boundary.append((("rg", cid, a), -1))
            m.cells2[("sq", cid, k)] = boundary

    def composite_vertex(l, r, vl, vr):
        out = cat.compose(l, r)
        out_kind = cat.component_by_id[out].tag.kind
        if out_kind == "point":
            return ("pt", out)
        wl = vl[2] if vl[0] == "iv" else canonical_chain(cat, l, canon) \
            if vl[0] == "pt" else vl
        wr = vr[2] if vr[0] == "iv" else canonical_chain(cat, r, canon) \
            if vr[0] == "pt" else vr
        if vl[0] == "pt":
            wl = canonical_chain(cat, l, canon)
        if vr[0] == "pt":
            wr = canonical_chain(cat, r, canon)
        if geo is not None and out_kind in ("disk", "cylinder"):
            pieces = []
            for w, comp in ((wl, l), (wr, r)):
                pieces.extend(w if isinstance(w, tuple) else (w,))
            xs = [c for c in pieces if c in geo.vertices]
            named = [c for c in pieces if isinstance(c, str)]
            if out_kind == "disk":
                return ("dk", out, xs[0])
            side = "+" if ("g+" in named or "s+" in named) else "-"
            return ("cy", out, xs[0], side)
        if not (isinstance(wl, tuple) and isinstance(wr, tuple)):
            raise AssertionError("anonymous composite needs geometry")
        return vertex_name(out, wl + wr)

    return models, pairing_edges, composite_vertex


def realization_homology(cat, top_degree=4):
    """Homology of the realization, from the total complex of the model."""
    from morseflow.nervess import face_image, nerve_levels

    models, pairing_edges, composite_vertex = build_models(cat)
    levels = nerve_levels(cat)

    # enumerate product cells per total degree
    def component_cells(factors):
        # list of (dim, per-factor cell refs); each ref is ("v", name) or
        # ("e", name) or ("f", name)
        options = []
        for f in factors:
            m = models[f]
            opts = [(0, ("v", v)) for v in m.verts]
            opts += [(1, ("e", e)) for e in m.edges]
            opts += [(2, ("f", c)) for c in m.cells2]
            options.append(opts)
        cells = [((), 0)]
        for opts in options:
            cells = [(combo + (ref,), d + dim)
                     for combo, d in cells for dim, ref in opts]
        return cells

    cells_by_degree = defaultdict(list)
    for s, lev in enumerate(levels):
        for comp in lev.components:
            if s == 0:
                cells_by_degree[0].append((0, comp.chain, comp.factors,
                                           (("v", ("ob", comp.chain[0])),)))
                continue
            for combo, d in component_cells(comp.factors):
                cells_by_degree[d + s].append((s, comp.chain, comp.factors,
                                               combo))
    for n in cells_by_degree:
        cells_by_degree[n].sort(key=repr)
    index = {n: {cell: i for i, cell in enumerate(cells_by_degree[n])}
             for n in cells_by_degree}

    def vertical_boundary(cell):
        s, chain, factors, combo = cell
        out = []
        pre_dim = 0
        for k, (kind, name) in enumerate(combo):
            m = models[factors[k]]
            sign = -1 if pre_dim % 2 else 1
            if kind == "e":
                v0, v1 = m.edges[name]
                for v, c in ((v1, 1), (v0, -1)):
                    nc = combo[:k] + (("v", v),) + combo[k + 1:]
                    out.append(((s, chain, factors, nc), sign * c))
                pre_dim += 1
            elif kind == "f":
                for e, c in m.cells2[name]:
                    nc = combo[:k] + (("e", e),) + combo[k + 1:]
                    out.append(((s, chain, factors, nc), sign * c))
                pre_dim += 2
        return out

    def face_chain(cell, m_face):
        s, chain, factors, combo = cell

        class _C:
            pass

        comp = _C()
        comp.chain = chain
        comp.factors = factors
        tchain, tfactors, cpos = face_image(cat, comp, m_face)
        if s == 1:
            if combo[0][0] != "v":
                return []
            return [((0, tchain, tfactors,
                      (("v", ("ob", tchain[0])),)), 1)]
        if cpos is None:
            drop = 0 if m_face == 0 else s - 1
            if combo[drop][0] != "v":
                return []
            nc = combo[:drop] + combo[drop + 1:]
            return [((s - 1, tchain, tfactors, nc), 1)]
        (ka, na), (kb, nb) = combo[cpos], combo[cpos + 1]
        l, r = factors[cpos], factors[cpos + 1]
        out = tfactors[cpos]
        out_kind = cat.component_by_id[out].tag.kind
        if ka == "v" and kb == "v":
            ref = ("v", composite_vertex(l, r, na, nb))
        elif "f" in (ka, kb):
            return []
        else:
            if out_kind in ("point",):
                return []
            name = pairing_edges.get((l, r))
            if name is None:
                raise AssertionError(f"no pushed edge for ({l}, {r})")
            ref = ("e", name)
        nc = combo[:cpos] + (ref,) + combo[cpos + 2:]
        return [((s - 1, tchain, tfactors, nc), 1)]

    n_max = max(cells_by_degree) if cells_by_degree else 0
    dims = [len(cells_by_degree.get(n, [])) for n in range(n_max + 1)]
    boundaries = []
    for n in range(1, n_max + 1):
        entries = []
        for j, cell in enumerate(cells_by_degree.get(n, [])):
            s, chain, factors, combo = cell
            r_dim = n - s
            for tcell, coeff in vertical_boundary(cell):
                entries.append((index[n - 1][tcell], j, coeff))
            h_sign = -1 if r_dim % 2 else 1
            if s >= 1:
                for m_face in range(s + 1):
                    f_sign = -1 if m_face % 2 else 1
                    for tcell, coeff in face_chain(cell, m_face):
                        entries.append((index[n - 1][tcell], j,
                                        h_sign * f_sign * coeff))
        boundaries.append(SparseIntMatrix(dims[n - 1], dims[n], entries))
    for a, b in zip(boundaries, boundaries[1:]):
        assert (a @ b).is_zero(), "total differential does not square to zero"
    table = chain_complex_homology(dims, boundaries)
    return table
