"""Combinatorial flow categories.

A category here is the pi_0-level image of a gradient flow setup: critical
points as objects, morphism spaces recorded as lists of path components with
homotopy-type tags, and composition as a total map on component pairs.  That
is exactly the data the realization spectral sequence consumes: H_* of each
component plus the induced maps on H_0 (and, via optional degree annotations,
on H_1).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .zhom import (FGAbelianGroup, GradedGroup, SparseIntMatrix,
                   chain_complex_homology)


class InvalidComplex(ValueError):
    """Malformed abstract simplicial complex data."""


class SchemaError(ValueError):
    """A category file violates the JSON schema."""


class ValidationFailure(ValueError):
    """A parsed category fails structural validation."""


class StencilEscape(ValueError):
    """Windowing a family would need components beyond the declared radius."""


# ---------------------------------------------------------------------------
# Homotopy tags and component homology
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HomotopyTag:
    """Homotopy type of one moduli-space component.

    kind is one of point, interval, disk, circle, cylinder, complex; facets
    carry the maximal simplices when kind == "complex".
    """

    kind: str
    facets: tuple[tuple[int, ...], ...] = ()

    def __str__(self):
        return self.kind


POINT = HomotopyTag("point")
INTERVAL = HomotopyTag("interval")
DISK = HomotopyTag("disk")
CIRCLE = HomotopyTag("circle")
CYLINDER = HomotopyTag("cylinder")

_TAG_KINDS = {"point", "interval", "disk", "circle", "cylinder", "complex"}


def finite_complex(facets: Iterable[Iterable[int]]) -> HomotopyTag:
    return HomotopyTag("complex", tuple(tuple(sorted(f)) for f in facets))


def simplicial_boundaries(facets) -> tuple[list[int], list[SparseIntMatrix]]:
    """Chain-group dimensions and boundary matrices of the downward closure
    of the given facets."""
    simplices: set[tuple[int, ...]] = set()
    for f in facets:
        f = tuple(sorted(f))
        if len(set(f)) != len(f) or not f:
            raise InvalidComplex(f"bad facet {f!r}")
        for k in range(1, len(f) + 1):
            simplices.update(itertools.combinations(f, k))
    if not simplices:
        raise InvalidComplex("empty complex")
    top = max(len(s) for s in simplices) - 1
    by_dim = [sorted(s for s in simplices if len(s) == d + 1)
              for d in range(top + 1)]
    index = [{s: i for i, s in enumerate(level)} for level in by_dim]
    dims = [len(level) for level in by_dim]
    boundaries = []
    for d in range(1, top + 1):
        entries = []
        for j, s in enumerate(by_dim[d]):
            for k in range(len(s)):
                face = s[:k] + s[k + 1:]
                entries.append((index[d - 1][face], j, (-1) ** k))
        boundaries.append(SparseIntMatrix(dims[d - 1], dims[d], entries))
    return dims, boundaries


_Z = FGAbelianGroup(1)
_CONTRACTIBLE = GradedGroup([_Z])
_CIRCLE_H = GradedGroup([_Z, _Z])


def component_homology(tag: HomotopyTag) -> GradedGroup:
    """Integral homology of a tagged component."""
    if tag.kind in ("point", "interval", "disk"):
        return _CONTRACTIBLE
    if tag.kind in ("circle", "cylinder"):
        return _CIRCLE_H
    if tag.kind == "complex":
        dims, boundaries = simplicial_boundaries(tag.facets)
        return chain_complex_homology(dims, boundaries)
    raise InvalidComplex(f"unknown tag kind {tag.kind!r}")


# ---------------------------------------------------------------------------
# Category data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalPoint:
    id: str
    index: int                      # Morse index
    value: Fraction | float | int   # critical value


@dataclass(frozen=True)
class Component:
    id: str
    tag: HomotopyTag
    broken_only: bool = False


@dataclass(frozen=True)
class MorphismSpace:
    source: str
    target: str
    components: tuple[Component, ...]

    @property
    def is_identity(self) -> bool:
        return self.source == self.target


@dataclass(frozen=True)
class ArcGeometry:
    """An interval component lying over one arc of the perturbation circle."""
    edge: str
    v0: str   # component id of the point generator at one end
    v1: str


@dataclass(frozen=True)
class CircleGeometry:
    """Winding bookkeeping for categories built over a marked circle.

    vertices are point-generator component ids sitting on the circle, arcs
    map interval components to the circle arc they traverse, and cylinders
    names the components whose H_1 is the circle class.  Not serialized;
    builder-attached only.
    """
    vertices: frozenset[str]
    arcs: dict[str, ArcGeometry]
    cylinders: frozenset[str]

    def vertex_of(self, pair: tuple[str, str]) -> str | None:
        hits = [c for c in pair if c in self.vertices]
        return hits[0] if len(hits) == 1 else None


class FlowCategory:
    """Objects, per-pair component lists, and a composition table.

    Immutable after construction; all queries are pure.  Identity spaces are
    stored explicitly (one point component per object) but never take part in
    composition entries or nerve chains.
    """

    def __init__(self, objects: Sequence[CriticalPoint],
                 spaces: Iterable[MorphismSpace],
                 composition: dict[tuple[str, str], str],
                 degrees: dict[tuple[str, str], int] | None = None,
                 tame: bool = True,
                 geometry: CircleGeometry | None = None):
        self.objects = tuple(objects)
        self.obj = {p.id: p for p in self.objects}
        if len(self.obj) != len(self.objects):
            raise ValidationFailure("duplicate object ids")
        self.spaces: dict[tuple[str, str], MorphismSpace] = {}
        self.component_space: dict[str, tuple[str, str]] = {}
        self.component_by_id: dict[str, Component] = {}
        for sp in spaces:
            key = (sp.source, sp.target)
            if key in self.spaces:
                raise ValidationFailure(f"duplicate morphism space {key}")
            self.spaces[key] = sp
            for c in sp.components:
                if c.id in self.component_by_id:
                    raise ValidationFailure(f"duplicate component id {c.id!r}")
                self.component_by_id[c.id] = c
                self.component_space[c.id] = key
        for p in self.objects:
            key = (p.id, p.id)
            if key not in self.spaces:
                ident = MorphismSpace(p.id, p.id,
                                      (Component(f"id_{p.id}", POINT),))
                self.spaces[key] = ident
                c = ident.components[0]
                self.component_by_id[c.id] = c
                self.component_space[c.id] = key
        self.composition = dict(composition)
        self.degrees = dict(degrees or {})
        self.tame = bool(tame)
        self.geometry = geometry

    # -- queries ------------------------------------------------------------

    def space(self, p: str, q: str) -> MorphismSpace | None:
        return self.spaces.get((p, q))

    def hom_components(self, p: str, q: str) -> tuple[Component, ...]:
        sp = self.spaces.get((p, q))
        return sp.components if sp else ()

    def nonidentity_pairs(self) -> list[tuple[str, str]]:
        return [key for key, sp in self.spaces.items()
                if not sp.is_identity and sp.components]

    def compose(self, left: str, right: str) -> str:
        """Component of the composite; identities act as strict units."""
        lc = self.component_space[left]
        rc = self.component_space[right]
        if lc[0] == lc[1]:
            return right
        if rc[0] == rc[1]:
            return left
        return self.composition[(left, right)]

    def homology_of(self, component_id: str) -> GradedGroup:
        return component_homology(self.component_by_id[component_id].tag)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    issues: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, code: str, message: str):
        self.issues.append(f"{code}: {message}")

    def __str__(self):
        return "valid" if self.ok else "\n".join(self.issues)


def _has_h1(cat: FlowCategory, comp_id: str) -> bool:
    return cat.homology_of(comp_id).at(1).rank > 0


def validate_category(cat: FlowCategory) -> ValidationReport:
    """Structural validation: units, totality, associativity, strict descent
    of the critical value, acyclicity, and degree-annotation completeness.
    An empty report means valid."""
    rep = ValidationReport()

    for p in cat.objects:
        sp = cat.space(p.id, p.id)
        if sp is None or len(sp.components) != 1 or sp.components[0].tag != POINT:
            rep.add("identity", f"object {p.id} lacks a unique point identity")

    succ: dict[str, set[str]] = {p.id: set() for p in cat.objects}
    for (p, q), sp in cat.spaces.items():
        if p == q or not sp.components:
            continue
        if p not in cat.obj or q not in cat.obj:
            rep.add("objects", f"morphism space ({p}, {q}) names unknown objects")
            continue
        succ[p].add(q)
        if not cat.obj[p].value > cat.obj[q].value:
            rep.add("f-decrease",
                    f"value({p}) = {cat.obj[p].value} does not exceed "
                    f"value({q}) = {cat.obj[q].value} on a nonempty space")

    # acyclicity of the reachability relation
    color: dict[str, int] = {}

    def dfs(v: str) -> bool:
        color[v] = 1
        for w in succ.get(v, ()):
            c = color.get(w, 0)
            if c == 1 or (c == 0 and dfs(w)):
                return True
        color[v] = 2
        return False

    for p in cat.objects:
        if color.get(p.id, 0) == 0 and dfs(p.id):
            rep.add("acyclic", f"cycle through {p.id} in the flow order")
            break

    # composition references and totality
    for (l, r), out in cat.composition.items():
        for cid in (l, r, out):
            if cid not in cat.component_by_id:
                rep.add("dangling", f"composition entry names unknown "
                                    f"component {cid!r}")
                break
        else:
            (pl, ql) = cat.component_space[l]
            (pr, qr) = cat.component_space[r]
            (po, qo) = cat.component_space[out]
            if ql != pr or (po, qo) != (pl, qr):
                rep.add("composition",
                        f"entry ({l}, {r}) -> {out} does not match spaces")
    pairs = cat.nonidentity_pairs()
    for (p, r) in pairs:
        for (r2, q) in pairs:
            if r2 != r:
                continue
            for c1 in cat.hom_components(p, r):
                for c2 in cat.hom_components(r, q):
                    if (c1.id, c2.id) not in cat.composition:
                        rep.add("totality",
                                f"missing composite ({c1.id}, {c2.id})")

    # associativity over all composable triples
    if not rep.issues:
        for (p, r) in pairs:
            for (r2, s) in pairs:
                if r2 != r:
                    continue
                for (s2, q) in pairs:
                    if s2 != s:
                        continue
                    for c1 in cat.hom_components(p, r):
                        for c2 in cat.hom_components(r, s):
                            for c3 in cat.hom_components(s, q):
                                ab = cat.compose(c1.id, c2.id)
                                bc = cat.compose(c2.id, c3.id)
                                if cat.compose(ab, c3.id) != cat.compose(c1.id, bc):
                                    rep.add(
                                        "associativity",
                                        f"({c1.id} . {c2.id}) . {c3.id} != "
                                        f"{c1.id} . ({c2.id} . {c3.id})")

    # every component must be path connected for pi0-level face maps to make
    # sense (a component is a path component by definition)
    for cid, comp in cat.component_by_id.items():
        try:
            h0 = cat.homology_of(cid).at(0)
        except InvalidComplex as exc:
            rep.add("complex", f"component {cid}: {exc}")
            continue
        if h0.rank != 1 or h0.torsion:
            rep.add("connected", f"component {cid} is not connected")

    # degree annotations where a composable pair and its target both carry H1
    for (l, r), out in cat.composition.items():
        if (l, r) in cat.degrees:
            continue
        if out in cat.component_by_id and l in cat.component_by_id \
                and r in cat.component_by_id:
            if (_has_h1(cat, l) or _has_h1(cat, r)) and _has_h1(cat, out):
                rep.add("degree-annotation",
                        f"pair ({l}, {r}) -> {out} relates H1 carriers "
                        "without a degree annotation")
    return rep


# ---------------------------------------------------------------------------
# JSON category files
# ---------------------------------------------------------------------------

def _value_to_json(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, bool):
        raise SchemaError("boolean critical value")
    return v


def _value_from_json(v):
    if isinstance(v, str):
        try:
            num, den = v.split("/")
            return Fraction(int(num), int(den))
        except Exception as exc:
            raise SchemaError(f"bad rational value {v!r}") from exc
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return v
    raise SchemaError(f"bad critical value {v!r}")


def _tag_to_json(tag: HomotopyTag):
    if tag.kind == "complex":
        return {"complex": [list(f) for f in tag.facets]}
    return tag.kind


def _tag_from_json(data) -> HomotopyTag:
    if isinstance(data, str):
        if data not in _TAG_KINDS or data == "complex":
            raise SchemaError(f"unknown tag string {data!r}")
        return HomotopyTag(data)
    if isinstance(data, dict) and set(data) == {"complex"}:
        try:
            return finite_complex(data["complex"])
        except Exception as exc:
            raise SchemaError(f"bad complex tag: {exc}") from exc
    raise SchemaError(f"unknown tag {data!r}")


def category_to_json(cat: FlowCategory) -> dict:
    """Serialize to the fixed category file schema.

    Identity spaces are implicit in the format and reconstructed on parse;
    geometry attachments are builder-only and never serialized.
    """
    morphisms = {}
    for (p, q), sp in sorted(cat.spaces.items()):
        if p == q or not sp.components:
            continue
        morphisms[f"{p}->{q}"] = [
            {"id": c.id, "tag": _tag_to_json(c.tag), "broken_only": c.broken_only}
            for c in sp.components]
    composition = []
    for (l, r), out in sorted(cat.composition.items()):
        via = cat.component_space[l][1]
        entry = {"via": via, "left": l, "right": r, "out": out}
        if (l, r) in cat.degrees:
            entry["degree"] = cat.degrees[(l, r)]
        composition.append(entry)
    return {
        "objects": [{"id": p.id, "index": p.index,
                     "value": _value_to_json(p.value)} for p in cat.objects],
        "morphisms": morphisms,
        "composition": composition,
        "tame": cat.tame,
    }


def category_from_json(data: dict) -> FlowCategory:
    """Parse and validate a category from the fixed schema; unknown keys and
    malformed fields raise SchemaError, structural problems ValidationFailure."""
    if not isinstance(data, dict):
        raise SchemaError("top level must be an object")
    expected = {"objects", "morphisms", "composition", "tame"}
    if set(data) != expected:
        unknown = set(data) - expected
        missing = expected - set(data)
        raise SchemaError(f"unknown keys {sorted(unknown)}, "
                          f"missing keys {sorted(missing)}")
    objects = []
    for od in data["objects"]:
        if not isinstance(od, dict) or set(od) != {"id", "index", "value"}:
            raise SchemaError(f"bad object entry {od!r}")
        if not isinstance(od["index"], int) or od["index"] < 0:
            raise SchemaError(f"bad Morse index {od['index']!r}")
        objects.append(CriticalPoint(str(od["id"]), od["index"],
                                     _value_from_json(od["value"])))
    spaces = []
    for key, comps in data["morphisms"].items():
        try:
            p, q = key.split("->")
        except ValueError:
            raise SchemaError(f"bad morphism key {key!r}")
        parsed = []
        for cd in comps:
            if not isinstance(cd, dict) or set(cd) != {"id", "tag", "broken_only"}:
                raise SchemaError(f"bad component entry {cd!r}")
            parsed.append(Component(str(cd["id"]), _tag_from_json(cd["tag"]),
                                    bool(cd["broken_only"])))
        spaces.append(MorphismSpace(p, q, tuple(parsed)))
    composition = {}
    degrees = {}
    for ent in data["composition"]:
        if not isinstance(ent, dict):
            raise SchemaError(f"bad composition entry {ent!r}")
        keys = set(ent)
        if not {"via", "left", "right", "out"} <= keys or \
                keys - {"via", "left", "right", "out", "degree"}:
            raise SchemaError(f"bad composition entry keys {sorted(keys)}")
        composition[(ent["left"], ent["right"])] = ent["out"]
        if "degree" in ent:
            if not isinstance(ent["degree"], int):
                raise SchemaError("degree annotation must be an integer")
            degrees[(ent["left"], ent["right"])] = ent["degree"]
    if not isinstance(data["tame"], bool):
        raise SchemaError("tame must be a boolean")
    try:
        cat = FlowCategory(objects, spaces, composition, degrees, data["tame"])
    except ValidationFailure:
        raise
    report = validate_category(cat)
    if not report.ok:
        raise ValidationFailure(str(report))
    return cat


def write_category(cat: FlowCategory, path) -> None:
    with open(path, "w") as fh:
        json.dump(category_to_json(cat), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_category(path) -> FlowCategory:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: line {exc.lineno}, column {exc.colno}: "
                              f"{exc.msg}") from exc
    return category_from_json(data)


# ---------------------------------------------------------------------------
# Locally finite families and windows
# ---------------------------------------------------------------------------

@dataclass
class Stencil:
    """Everything one indexed generator brings into a window: the components
    it touches (including itself) and the composition entries it takes part
    in, plus the largest dependent family index referenced."""
    components: list[tuple[tuple[str, str], Component]]
    compositions: list[tuple[str, str, str]]
    max_family_index: int


@dataclass
class LocallyFiniteFamily:
    """A flow-category schema with one countably indexed component family.

    The indexed generators live in a single morphism space; each generator
    has a finite stencil, and from period_start on, the stencil of generator
    i + period is the index shift of the stencil of generator i.
    """
    name: str
    objects: tuple[CriticalPoint, ...]
    fixed_components: list[tuple[tuple[str, str], Component]]
    fixed_compositions: list[tuple[str, str, str]]
    generator_id: Callable[[int], str]
    stencil: Callable[[int], Stencil]
    stencil_radius: int
    period_start: int
    period: int
    shift_id: Callable[[str], str]
    geometry_builder: Callable[[int], CircleGeometry] | None = None
    tame: bool = False


def window(family: LocallyFiniteFamily, N: int) -> FlowCategory:
    """Finite truncation containing generators of index <= N, every fixed
    component, and the stencil closure of the included generators."""
    if N < 0:
        raise ValueError("window size must be nonnegative")
    comps: dict[str, tuple[tuple[str, str], Component]] = {}
    comp_entries: dict[tuple[str, str], str] = {}
    for pair, c in family.fixed_components:
        comps[c.id] = (pair, c)
    for l, r, out in family.fixed_compositions:
        comp_entries[(l, r)] = out
    for i in range(N + 1):
        st = family.stencil(i)
        if st.max_family_index > N + family.stencil_radius:
            raise StencilEscape(
                f"generator {i} needs family index {st.max_family_index} "
                f"> {N} + radius {family.stencil_radius}")
        for pair, c in st.components:
            prev = comps.get(c.id)
            if prev is not None and prev != (pair, c):
                raise ValidationFailure(f"stencil conflict on {c.id!r}")
            comps[c.id] = (pair, c)
        for l, r, out in st.compositions:
            if comp_entries.get((l, r), out) != out:
                raise ValidationFailure(f"stencil conflict on pair ({l}, {r})")
            comp_entries[(l, r)] = out
    by_pair: dict[tuple[str, str], list[Component]] = {}
    for cid in comps:
        pair, c = comps[cid]
        by_pair.setdefault(pair, []).append(c)

    def natural(cid: str):
        head = cid.rstrip("0123456789")
        tail = cid[len(head):]
        return (head, int(tail) if tail else -1)

    spaces = [MorphismSpace(p, q, tuple(sorted(cs, key=lambda c: natural(c.id))))
              for (p, q), cs in sorted(by_pair.items())]
    geometry = family.geometry_builder(N) if family.geometry_builder else None
    return FlowCategory(family.objects, spaces, comp_entries,
                        tame=family.tame, geometry=geometry)
