"""Builders for the example categories.

This module is the single source of truth for the component schema of the
perturbed S2 x S1 category: which arc each point generator belongs to on
either side of the marked circle, where compositions land, and which window
of the infinite family a finite computation sees.
"""

from __future__ import annotations

from fractions import Fraction

from .flowcat import (ArcGeometry, CIRCLE, CYLINDER, CircleGeometry, Component,
                      CriticalPoint, DISK, FlowCategory, INTERVAL,
                      LocallyFiniteFamily, MorphismSpace, POINT, Stencil,
                      read_category, validate_category, window)

__all__ = [
    "build_elementary", "build_torus", "build_counterexample",
    "counterexample_family", "counterexample_window", "transversal",
    "parse_category_file", "catalog_names", "build_example",
]


def build_elementary(name: str) -> FlowCategory:
    """Sanity categories: height flows on the circle and the round 2-sphere."""
    if name == "circle":
        objects = [CriticalPoint("p1", 1, 1), CriticalPoint("p2", 0, -1)]
        spaces = [MorphismSpace("p1", "p2",
                                (Component("e", POINT), Component("w", POINT)))]
        return FlowCategory(objects, spaces, {}, tame=True)
    if name == "sphere2":
        objects = [CriticalPoint("p1", 2, 1), CriticalPoint("p2", 0, -1)]
        spaces = [MorphismSpace("p1", "p2", (Component("mer", CIRCLE),))]
        return FlowCategory(objects, spaces, {}, tame=True)
    raise ValueError(f"unknown elementary category {name!r}")


# ---------------------------------------------------------------------------
# The vertical torus
# ---------------------------------------------------------------------------

def build_torus() -> FlowCategory:
    """Height function on the upright 2-torus.

    Top/saddle/saddle/bottom critical points; the two closed-interval
    components of the top-to-bottom moduli space each have endpoints given by
    the two triple-broken chains that share the middle saddle-to-saddle flow
    and use matching front/back flows at top and bottom.  The four mixed
    chains are isolated points.
    """
    objects = [CriticalPoint("p1", 2, 3), CriticalPoint("p2", 1, 1),
               CriticalPoint("p3", 1, -1), CriticalPoint("p4", 0, -3)]

    a = {x: Component(f"a_{x}", POINT) for x in "fb"}
    b = {y: Component(f"b_{y}", POINT) for y in "lr"}
    c = {z: Component(f"c_{z}", POINT) for z in "fb"}
    ab = {(x, y): Component(f"ab_{x}{y}", POINT, broken_only=True)
          for x in "fb" for y in "lr"}
    bc = {(y, z): Component(f"bc_{y}{z}", POINT, broken_only=True)
          for y in "lr" for z in "fb"}
    intervals = {"l": Component("int_l", INTERVAL), "r": Component("int_r", INTERVAL)}
    mixed = {(x, y, z): Component(f"p_{x}{y}{z}", POINT, broken_only=True)
             for x in "fb" for y in "lr" for z in "fb" if x != z}

    def triple(x, y, z):
        return intervals[y].id if x == z else mixed[(x, y, z)].id

    composition = {}
    for x in "fb":
        for y in "lr":
            composition[(a[x].id, b[y].id)] = ab[(x, y)].id
    for y in "lr":
        for z in "fb":
            composition[(b[y].id, c[z].id)] = bc[(y, z)].id
    for x in "fb":
        for y in "lr":
            for z in "fb":
                composition[(a[x].id, bc[(y, z)].id)] = triple(x, y, z)
                composition[(ab[(x, y)].id, c[z].id)] = triple(x, y, z)

    spaces = [
        MorphismSpace("p1", "p2", (a["f"], a["b"])),
        MorphismSpace("p2", "p3", (b["l"], b["r"])),
        MorphismSpace("p3", "p4", (c["f"], c["b"])),
        MorphismSpace("p1", "p3", tuple(ab[(x, y)] for x in "fb" for y in "lr")),
        MorphismSpace("p2", "p4", tuple(bc[(y, z)] for y in "lr" for z in "fb")),
        MorphismSpace("p1", "p4",
                      (intervals["l"], intervals["r"]) +
                      tuple(mixed[k] for k in sorted(mixed))),
    ]
    return FlowCategory(objects, spaces, composition, tame=True)


# ---------------------------------------------------------------------------
# The perturbed S2 x S1 category
# ---------------------------------------------------------------------------

def _ce_objects(r: Fraction) -> tuple[CriticalPoint, ...]:
    return (CriticalPoint("p1", 3, 1 + r), CriticalPoint("p2", 2, 1 - r),
            CriticalPoint("p3", 1, -(1 - r)), CriticalPoint("p4", 0, -(1 + r)))


P12 = ("p1", "p2")
P23 = ("p2", "p3")
P34 = ("p3", "p4")
P13 = ("p1", "p3")
P24 = ("p2", "p4")
P14 = ("p1", "p4")


def counterexample_family(r: Fraction = Fraction(1, 2)) -> LocallyFiniteFamily:
    """The infinite family over the zero set {0} u {1/n}.

    Point generators x_i sit on the marked circle; x_0 and x_1 bound the long
    arc of the plus side, x_{2k}, x_{2k+1} bound plus arc k, and x_{2k+1},
    x_{2k+2} bound minus arc k, with x_0 alone on the minus side.
    """
    fixed_components = [
        (P12, Component("g+", POINT)), (P12, Component("g-", POINT)),
        (P34, Component("s+", POINT)), (P34, Component("s-", POINT)),
        (P24, Component("Az-", POINT, broken_only=True)),
        (P13, Component("Bz-", POINT, broken_only=True)),
        (P14, Component("C0", CYLINDER)),
        (P14, Component("P0", POINT, broken_only=True)),
    ]
    fixed_compositions = [
        ("g+", "Az-", "P0"), ("g-", "Az-", "C0"),
        ("Bz-", "s+", "C0"), ("Bz-", "s-", "P0"),
    ]

    def stencil(i: int) -> Stencil:
        kp = i // 2
        comps = [(P23, Component(f"x{i}", POINT)),
                 (P24, Component(f"A+{kp}", INTERVAL)),
                 (P13, Component(f"B+{kp}", INTERVAL)),
                 (P14, Component(f"D+{kp}", DISK))]
        entries = [
            ("g-", f"x{i}", f"B+{kp}"),
            (f"x{i}", "s+", f"A+{kp}"),
            ("g+", f"A+{kp}", "C0"), ("g-", f"A+{kp}", f"D+{kp}"),
            (f"B+{kp}", "s+", f"D+{kp}"), (f"B+{kp}", "s-", "C0"),
        ]
        if i == 0:
            entries += [("g+", "x0", "Bz-"), ("x0", "s-", "Az-")]
        else:
            km = (i - 1) // 2
            comps += [(P24, Component(f"A-{km}", INTERVAL)),
                      (P13, Component(f"B-{km}", INTERVAL)),
                      (P14, Component(f"D-{km}", DISK))]
            entries += [
                ("g+", f"x{i}", f"B-{km}"),
                (f"x{i}", "s-", f"A-{km}"),
                ("g+", f"A-{km}", f"D-{km}"), ("g-", f"A-{km}", "C0"),
                (f"B-{km}", "s+", "C0"), (f"B-{km}", "s-", f"D-{km}"),
            ]
        return Stencil(comps, entries, max_family_index=i)

    def shift_id(cid: str) -> str:
        for prefix, step in (("x", 2), ("A+", 1), ("A-", 1), ("B+", 1),
                             ("B-", 1), ("D+", 1), ("D-", 1)):
            if cid.startswith(prefix) and cid[len(prefix):].isdigit():
                return f"{prefix}{int(cid[len(prefix):]) + step}"
        return cid

    def geometry(N: int) -> CircleGeometry:
        vertices = frozenset(f"x{i}" for i in range(N + 2))
        arcs = {}
        for k in range(N // 2 + 1):
            edge = ArcGeometry(f"I{2 * k}", f"x{2 * k + 1}", f"x{2 * k}")
            arcs[f"A+{k}"] = edge
            arcs[f"B+{k}"] = edge
        for k in range((N - 1) // 2 + 1) if N >= 1 else ():
            edge = ArcGeometry(f"I{2 * k + 1}", f"x{2 * k + 2}", f"x{2 * k + 1}")
            arcs[f"A-{k}"] = edge
            arcs[f"B-{k}"] = edge
        return CircleGeometry(vertices, arcs, frozenset({"C0"}))

    return LocallyFiniteFamily(
        name="counterexample",
        objects=_ce_objects(r),
        fixed_components=fixed_components,
        fixed_compositions=fixed_compositions,
        generator_id=lambda i: f"x{i}",
        stencil=stencil,
        stencil_radius=1,
        period_start=2,
        period=2,
        shift_id=shift_id,
        geometry_builder=geometry,
        tame=False,
    )


def counterexample_window(N: int, r: Fraction = Fraction(1, 2)) -> FlowCategory:
    return window(counterexample_family(r), N)


def transversal(k: int, r: Fraction = Fraction(1, 2)) -> FlowCategory:
    """Variant where the unstable circle meets the marked circle in k points.

    k must be even so the arcs alternate sides; generators t_0 .. t_{k-1} sit
    in cyclic order with arc j running from t_j to t_{j+1 mod k}, landing on
    the plus side for even j and the minus side for odd j.
    """
    if k < 2 or k % 2:
        raise ValueError("transversal count must be even and >= 2")

    def evenarc(j):
        return j if j % 2 == 0 else (j - 1) % k

    def oddarc(j):
        return j if j % 2 == 1 else (j - 1) % k

    t = [Component(f"t{j}", POINT) for j in range(k)]
    aplus = {j: Component(f"A+{j}", INTERVAL) for j in range(0, k, 2)}
    aminus = {j: Component(f"A-{j}", INTERVAL) for j in range(1, k, 2)}
    bplus = {j: Component(f"B+{j}", INTERVAL) for j in range(0, k, 2)}
    bminus = {j: Component(f"B-{j}", INTERVAL) for j in range(1, k, 2)}
    disks = [Component(f"D{j}", DISK) for j in range(k)]

    composition = {}
    for j in range(k):
        composition[("g+", f"t{j}")] = f"B-{oddarc(j)}"
        composition[("g-", f"t{j}")] = f"B+{evenarc(j)}"
        composition[(f"t{j}", "s+")] = f"A+{evenarc(j)}"
        composition[(f"t{j}", "s-")] = f"A-{oddarc(j)}"
    for j in range(0, k, 2):
        composition[("g+", f"A+{j}")] = "C0"
        composition[("g-", f"A+{j}")] = f"D{j}"
        composition[(f"B+{j}", "s+")] = f"D{j}"
        composition[(f"B+{j}", "s-")] = "C0"
    for j in range(1, k, 2):
        composition[("g+", f"A-{j}")] = f"D{j}"
        composition[("g-", f"A-{j}")] = "C0"
        composition[(f"B-{j}", "s+")] = "C0"
        composition[(f"B-{j}", "s-")] = f"D{j}"

    spaces = [
        MorphismSpace("p1", "p2", (Component("g+", POINT), Component("g-", POINT))),
        MorphismSpace("p2", "p3", tuple(t)),
        MorphismSpace("p3", "p4", (Component("s+", POINT), Component("s-", POINT))),
        MorphismSpace("p2", "p4", tuple(aplus[j] for j in sorted(aplus)) +
                      tuple(aminus[j] for j in sorted(aminus))),
        MorphismSpace("p1", "p3", tuple(bplus[j] for j in sorted(bplus)) +
                      tuple(bminus[j] for j in sorted(bminus))),
        MorphismSpace("p1", "p4", (Component("C0", CYLINDER),) + tuple(disks)),
    ]

    arcs = {}
    for j in range(k):
        edge = ArcGeometry(f"e{j}", f"t{j}", f"t{(j + 1) % k}")
        arcs[f"A{'+' if j % 2 == 0 else '-'}{j}"] = edge
        arcs[f"B{'+' if j % 2 == 0 else '-'}{j}"] = edge
    geometry = CircleGeometry(frozenset(f"t{j}" for j in range(k)), arcs,
                              frozenset({"C0"}))
    return FlowCategory(_ce_objects(r), spaces, composition, tame=True,
                        geometry=geometry)


def build_counterexample(mode: str = "family", n: int = 32, k: int = 4,
                         r: Fraction = Fraction(1, 2)):
    """Dispatch: mode is one of family, window (size n), transversal (count k)."""
    if mode == "family":
        return counterexample_family(r)
    if mode == "window":
        return counterexample_window(n, r)
    if mode == "transversal":
        return transversal(k, r)
    raise ValueError(f"unknown counterexample mode {mode!r}")


def parse_category_file(path) -> FlowCategory:
    """Read, schema-check, and validate a category file."""
    return read_category(path)


def catalog_names() -> list[str]:
    return ["circle", "sphere2", "torus", "counterexample",
            "transversal2", "transversal4", "transversal6"]


def build_example(name: str, window_size: int = 32):
    """CLI-facing lookup.  counterexample yields the family; transversalK a
    finite category; everything else a finite catalog category."""
    if name in ("circle", "sphere2"):
        return build_elementary(name)
    if name == "torus":
        return build_torus()
    if name == "counterexample":
        return counterexample_family()
    if name.startswith("transversal") and name[len("transversal"):].isdigit():
        return transversal(int(name[len("transversal"):]))
    raise ValueError(f"unknown example {name!r}")


def assert_catalog_valid():
    """Every finite catalog category validates cleanly."""
    for name in ("circle", "sphere2", "torus"):
        rep = validate_category(build_example(name))
        if not rep.ok:
            raise AssertionError(f"{name}: {rep}")
    for k in (2, 4, 6):
        rep = validate_category(transversal(k))
        if not rep.ok:
            raise AssertionError(f"transversal{k}: {rep}")
