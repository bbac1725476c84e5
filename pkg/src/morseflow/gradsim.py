"""Numerical gradient flow on S2 x S1 embedded in R4.

The manifold is the tube ((1 + r cos a) u, r sin a) over the unit sphere,
with height function the first ambient coordinate.  The standard field is
the negated tangential projection of e1; the perturbed field adds a twist
supported in a box around the inner equator, steering flows sideways by
theta(x) * Psi(y, z) exactly as the sign of theta dictates.

Integration uses scipy's adaptive RK45 stepper with a projection back onto
the embedded manifold after every accepted step.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import RK45


class StallWithoutCapture(RuntimeError):
    """The flow speed vanished away from every critical point."""


class ExitFailure(RuntimeError):
    """The box flow failed to reach the exit face within the step budget."""


class NoConnections(RuntimeError):
    """No sampled flow from the source reached the target."""


class ConfigError(ValueError):
    """Malformed simulation configuration."""


# ---------------------------------------------------------------------------
# Points on the embedded manifold
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmbeddedPoint:
    """Chart point: unit 3-vector u on the sphere plus tube angle ang."""

    u: tuple[float, float, float]
    ang: float
    r: float = 0.5

    def __post_init__(self):
        n = math.sqrt(sum(x * x for x in self.u))
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"|u| = {n} is not 1 within 1e-12")

    @property
    def ambient(self) -> np.ndarray:
        scale = 1.0 + self.r * math.cos(self.ang)
        u = np.asarray(self.u, dtype=float)
        return np.append(scale * u, self.r * math.sin(self.ang))

    @classmethod
    def from_ambient(cls, vec, r: float = 0.5) -> "EmbeddedPoint":
        w = np.asarray(vec[:3], dtype=float)
        y = float(vec[3])
        rho = float(np.linalg.norm(w))
        if rho == 0.0:
            raise ValueError("ambient point projects through the origin")
        u = w / rho
        cos_a = min(1.0, max(-1.0, (rho - 1.0) / r))
        sin_a = min(1.0, max(-1.0, y / r))
        return cls(tuple(u), math.atan2(sin_a, cos_a), r)


def project_to_manifold(vec, r: float = 0.5) -> np.ndarray:
    return EmbeddedPoint.from_ambient(vec, r).ambient


def height(vec) -> float:
    """The Morse function: first ambient coordinate."""
    return float(vec[0])


def critical_points(r: float = 0.5) -> dict[str, EmbeddedPoint]:
    return {
        "p1": EmbeddedPoint((1.0, 0.0, 0.0), 0.0, r),
        "p2": EmbeddedPoint((1.0, 0.0, 0.0), math.pi, r),
        "p3": EmbeddedPoint((-1.0, 0.0, 0.0), math.pi, r),
        "p4": EmbeddedPoint((-1.0, 0.0, 0.0), 0.0, r),
    }


def tangent_basis(vec, r: float = 0.5) -> np.ndarray:
    """Orthonormal tangent 3-frame at an ambient point, rows = vectors.

    The first two rows span the sphere directions, the last is the tube
    (angular) direction.
    """
    pt = EmbeddedPoint.from_ambient(vec, r)
    u = np.asarray(pt.u)
    # complete u to an orthonormal basis of R3
    a = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    v1 = a - np.dot(a, u) * u
    v1 /= np.linalg.norm(v1)
    v2 = np.cross(u, v1)
    sin_a, cos_a = math.sin(pt.ang), math.cos(pt.ang)
    t1 = np.append(v1, 0.0)
    t2 = np.append(v2, 0.0)
    t3 = np.append(-sin_a * u, cos_a)
    return np.stack([t1, t2, t3])


E1 = np.array([1.0, 0.0, 0.0, 0.0])


def standard_field(vec, r: float = 0.5) -> np.ndarray:
    """Negative gradient of the height function: minus the tangential part
    of e1, expressed in ambient coordinates."""
    frame = tangent_basis(vec, r)
    coeffs = frame @ E1
    return -(coeffs @ frame)


# ---------------------------------------------------------------------------
# Theta, Psi, and field specifications
# ---------------------------------------------------------------------------

def oscillating_theta(x: float) -> float:
    """Smooth function on R u {inf} vanishing exactly on {0} u {1/n}.

    Positive on the even arcs (including the long arc through infinity),
    negative on the odd arcs, with the magnitude profile exp(1/((x-a)(x-b)))
    on an arc (a, b).
    """
    if math.isinf(x):
        return 1.0
    if x == 0.0 or x == 1.0:
        return 0.0
    if x < 0.0 or x > 1.0:
        # long arc: exp(-1/(x(x-1))) with x(x-1) > 0
        return math.exp(-1.0 / (x * (x - 1.0)))
    n = round(1.0 / x)
    if n >= 1 and 1.0 / n == x:
        return 0.0
    k = math.floor(1.0 / x)
    a, b = 1.0 / (k + 1), 1.0 / k
    if not a < x < b:
        return 0.0  # boundary roundoff: x is a zero to machine precision
    t = (x - a) * (x - b)  # negative on the open arc
    mag = math.exp(1.0 / t)
    return mag if k % 2 == 0 else -mag


@dataclass(frozen=True)
class ThetaSpec:
    """Sideways-push profile on the marked circle.

    kind "oscillating" uses the exact accumulating zero set via the
    stereographic chart tan(angle/2); kind "finite_zeros" uses sin(k x / 2)
    with k equally spaced zeros (k even), which keeps magnitudes O(1) and is
    the variant used for numerical moduli discovery.
    """

    kind: str = "oscillating"
    k: int = 4

    def __post_init__(self):
        if self.kind not in ("oscillating", "finite_zeros"):
            raise ConfigError(f"unknown theta kind {self.kind!r}")
        if self.kind == "finite_zeros" and (self.k < 2 or self.k % 2):
            raise ConfigError("finite_zeros needs an even count >= 2")

    def on_circle(self, angle: float) -> float:
        if self.kind == "finite_zeros":
            half = self.k * angle / 2.0
            if abs(math.remainder(half, math.pi)) < 1e-12:
                return 0.0   # snap the nominal zeros to exact zeros
            return math.sin(half)
        half = math.remainder(angle, 2.0 * math.pi) / 2.0
        if abs(abs(half) - math.pi / 2.0) < 1e-15:
            return oscillating_theta(math.inf)
        return oscillating_theta(math.tan(half))

    def zeros(self) -> list[float]:
        if self.kind != "finite_zeros":
            raise ConfigError("only finite_zeros has a listable zero set")
        return [2.0 * math.pi * j / self.k for j in range(self.k)]


def _bump(t: float, lo: float, hi: float) -> float:
    if not lo < t < hi:
        return 0.0
    return math.exp(-1.0 / ((t - lo) * (hi - t)))


@dataclass(frozen=True)
class PsiSpec:
    """Nonnegative bump on [-1, 1] x [0, 1], vanishing within `margin` of the
    boundary and scaled so Psi(0, 1/2) = value."""

    value: float = 2.0
    margin: float = 0.05

    def __call__(self, y: float, z: float) -> float:
        m = self.margin
        norm = _bump(0.0, -1.0 + m, 1.0 - m) * _bump(0.5, m, 1.0 - m)
        return (self.value / norm) * _bump(y, -1.0 + m, 1.0 - m) * \
            _bump(z, m, 1.0 - m)


@dataclass(frozen=True)
class BoxSpec:
    """Tubular band around the inner equator: |ang - pi| <= ang_width spans
    the transverse y in [-1, 1], heights f in [0, f_height] span z in [0, 1]."""

    ang_width: float = 0.2
    f_height: float = 0.2


@dataclass(frozen=True)
class FieldSpec:
    variant: str = "standard"          # "standard" | "perturbed"
    r: float = 0.5
    theta: ThetaSpec = ThetaSpec()
    psi: PsiSpec = PsiSpec()
    delta: float = 1.0
    box: BoxSpec = BoxSpec()

    def __post_init__(self):
        if self.variant not in ("standard", "perturbed"):
            raise ConfigError(f"unknown field variant {self.variant!r}")
        if not 0.0 < self.r < 1.0:
            raise ConfigError("tube radius must lie in (0, 1)")
        if self.delta <= 0.0:
            raise ConfigError("delta must be positive")

    def box_coords(self, vec) -> tuple[float, float, float] | None:
        """(x, y, z) box coordinates of an ambient point, or None outside."""
        pt = EmbeddedPoint.from_ambient(vec, self.r)
        d_ang = math.remainder(pt.ang - math.pi, 2.0 * math.pi)
        y = -d_ang / self.box.ang_width
        if not -1.0 <= y <= 1.0:
            return None
        z = height(vec) / self.box.f_height
        if not 0.0 <= z <= 1.0:
            return None
        x = math.atan2(pt.u[2], pt.u[1])
        return x, y, z

    def __call__(self, vec) -> np.ndarray:
        base = standard_field(vec, self.r)
        if self.variant == "standard":
            return base
        coords = self.box_coords(vec)
        if coords is None:
            return base
        x, y, z = coords
        push = self.theta.on_circle(x) * self.psi(y, z)
        if push == 0.0:
            return base
        # velocity a * t3 changes y at rate -a / (r * ang_width)
        t3 = tangent_basis(vec, self.r)[2]
        return base - push * self.r * self.box.ang_width * t3


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    times: list[float]
    points: list[np.ndarray]
    f_values: list[float]
    start: str
    end: str                      # critical point id, "maxtime", or "exit"
    crossings: list[tuple[float, np.ndarray]]
    seed_param: float | None = None

    def f_monotone(self, slack: float = 1e-9) -> bool:
        return all(b <= a + slack
                   for a, b in zip(self.f_values, self.f_values[1:]))

    def max_abs_y(self) -> float:
        return max(abs(float(p[3])) for p in self.points)


@dataclass(frozen=True)
class IntegrateOptions:
    rtol: float = 1e-9
    atol: float = 1e-12
    max_time: float = 400.0
    capture_radius: float = 1e-6
    stall_speed: float = 1e-12
    levels: tuple[float, ...] = ()
    stop_level: float | None = None   # terminate once f drops below this

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0 or self.max_time <= 0 \
                or self.capture_radius <= 0:
            raise ConfigError("integration options must be positive")


def _nearest_critical(vec, crits) -> tuple[str, float]:
    best, dist = "", math.inf
    for name, cp in crits.items():
        d = float(np.linalg.norm(vec - cp.ambient))
        if d < dist:
            best, dist = name, d
    return best, dist


def integrate(fs: FieldSpec, x0, opts: IntegrateOptions = IntegrateOptions(),
              start: str = "") -> Trajectory:
    """Flow an initial point until capture at a critical point, recording
    requested level crossings along the way.

    The state is advanced with an adaptive RK45 pair and re-projected onto
    the embedded manifold after every accepted step; crossings are refined
    on the dense output.  A vanishing velocity away from all critical points
    raises StallWithoutCapture.
    """
    if isinstance(x0, EmbeddedPoint):
        y0 = x0.ambient
    else:
        y0 = project_to_manifold(np.asarray(x0, dtype=float), fs.r)
    crits = critical_points(fs.r)

    def rhs(_t, y):
        return fs(project_to_manifold(y, fs.r))

    solver = RK45(rhs, 0.0, y0, t_bound=opts.max_time,
                  rtol=opts.rtol, atol=opts.atol)
    times = [0.0]
    points = [y0.copy()]
    fvals = [height(y0)]
    crossings: list[tuple[float, np.ndarray]] = []
    end = "maxtime"
    name, dist = _nearest_critical(y0, crits)
    if dist < opts.capture_radius:
        end = name
    while end == "maxtime" and solver.status == "running":
        solver.step()
        if solver.status == "failed":
            raise StallWithoutCapture("step size underflow")
        dense = solver.dense_output()
        y = project_to_manifold(solver.y, fs.r)
        solver.y = y
        f_prev, f_now = fvals[-1], height(y)
        for level in opts.levels:
            if f_prev > level >= f_now:
                lo, hi = dense.t_min, dense.t_max
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if height(dense(mid)) > level:
                        lo = mid
                    else:
                        hi = mid
                crossings.append(
                    (level, project_to_manifold(dense(hi), fs.r)))
        times.append(solver.t)
        points.append(y)
        fvals.append(f_now)
        name, dist = _nearest_critical(y, crits)
        if dist < opts.capture_radius:
            end = name
            break
        if opts.stop_level is not None and f_now < opts.stop_level:
            end = "exit"
            break
        speed = float(np.linalg.norm(fs(y)))
        if speed < opts.stall_speed:
            raise StallWithoutCapture(
                f"speed {speed:.2e} at distance {dist:.2e} from Crit(f)")
    return Trajectory(times, points, fvals, start, end, crossings)


def box_lambda(x0: float, fs: FieldSpec,
               max_steps: int = 100000) -> float:
    """Exit displacement of the box flow started over angle x0.

    Integrates y' = theta(x0) * Psi(y, z), z' = -delta from (0, 1) down to
    z = 0 and returns the exit y; its sign equals the sign of theta(x0).
    """
    if fs.variant != "perturbed":
        raise ConfigError("box_lambda needs a perturbed field")
    th = fs.theta.on_circle(x0)

    def rhs(_t, yz):
        return [th * fs.psi(yz[0], yz[1]), -fs.delta]

    solver = RK45(rhs, 0.0, [0.0, 1.0], t_bound=10.0 / fs.delta,
                  rtol=1e-10, atol=1e-14)
    steps = 0
    while solver.status == "running":
        solver.step()
        steps += 1
        if steps > max_steps:
            raise ExitFailure("step budget exhausted before z = 0")
        if solver.y[1] <= 0.0:
            dense = solver.dense_output()
            lo, hi = dense.t_min, dense.t_max
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if dense(mid)[1] > 0.0:
                    lo = mid
                else:
                    hi = mid
            return float(dense(hi)[0])
    raise ExitFailure("integrator stopped before z = 0")


def trajectory_distance(a: Trajectory, b: Trajectory,
                        samples: int = 120) -> float:
    """Symmetrized sup-inf distance between the two sampled images."""
    pa = _resample(a, samples)
    pb = _resample(b, samples)
    d_ab = _sup_inf(pa, pb)
    d_ba = _sup_inf(pb, pa)
    return d_ab + d_ba


def _resample(tr: Trajectory, samples: int) -> np.ndarray:
    pts = np.asarray(tr.points)
    if len(pts) <= samples:
        return pts
    idx = np.linspace(0, len(pts) - 1, samples).round().astype(int)
    return pts[idx]


def _sup_inf(pa: np.ndarray, pb: np.ndarray) -> float:
    """max over points of pa of the distance to the polyline through pb."""
    if len(pb) == 1:
        dists = np.linalg.norm(pa - pb[0], axis=1)
        return float(dists.max())
    a = pa[:, None, :]
    b0 = pb[None, :-1, :]
    seg = pb[None, 1:, :] - b0
    denom = np.maximum((seg ** 2).sum(axis=2), 1e-300)
    t = np.clip(((a - b0) * seg).sum(axis=2) / denom, 0.0, 1.0)
    proj = b0 + t[..., None] * seg
    seg_d = np.linalg.norm(a - proj, axis=2).min(axis=1)
    # vertex distances keep coinciding samples at exactly zero
    vert_d = np.linalg.norm(a - pb[None, :, :], axis=2).min(axis=1)
    return float(np.minimum(seg_d, vert_d).max())


# ---------------------------------------------------------------------------
# Unstable seeds and empirical moduli
# ---------------------------------------------------------------------------

def flow_jacobian(fs: FieldSpec, p: EmbeddedPoint, h: float = 1e-6) -> np.ndarray:
    """Linearization of the field at a critical point, in the tangent frame."""
    v = p.ambient
    frame = tangent_basis(v, fs.r)
    jac = np.zeros((3, 3))
    for j in range(3):
        plus = fs(project_to_manifold(v + h * frame[j], fs.r))
        minus = fs(project_to_manifold(v - h * frame[j], fs.r))
        jac[:, j] = frame @ ((plus - minus) / (2.0 * h))
    return 0.5 * (jac + jac.T)


def unstable_seeds(fs: FieldSpec, p: EmbeddedPoint, n: int,
                   eps: float = 1e-3) -> list[tuple[float, np.ndarray]]:
    """n seed points on the unstable sphere of p, paired with a parameter.

    The unstable subspace is read off the field linearization.  For a
    one-dimensional subspace the two rays alternate; for two dimensions the
    seeds walk the unstable circle (the parameter is the angle); for three
    the axis directions are included and the rest fills a Fibonacci sphere.
    """
    v = p.ambient
    frame = tangent_basis(v, fs.r)
    evals, evecs = np.linalg.eigh(flow_jacobian(fs, p))
    unstable = [evecs[:, i] for i in range(3) if evals[i] > 1e-8]
    m = len(unstable)
    if m == 0:
        raise NoConnections("source has no unstable directions")
    seeds = []
    if m == 1:
        d = unstable[0] @ frame
        for i in range(n):
            sign = 1.0 if i % 2 == 0 else -1.0
            seeds.append((sign, project_to_manifold(v + sign * eps * d, fs.r)))
    elif m == 2:
        b0 = unstable[0] @ frame
        b1 = unstable[1] @ frame
        for i in range(n):
            phi = 2.0 * math.pi * i / n
            d = math.cos(phi) * b0 + math.sin(phi) * b1
            seeds.append((phi, project_to_manifold(v + eps * d, fs.r)))
    else:
        dirs = [frame[j] for j in range(3)] + [-frame[j] for j in range(3)]
        golden = math.pi * (3.0 - math.sqrt(5.0))
        for i in range(max(n - 6, 0)):
            z = 1.0 - 2.0 * (i + 0.5) / max(n - 6, 1)
            rad = math.sqrt(max(0.0, 1.0 - z * z))
            phi = golden * i
            c = np.array([math.cos(phi) * rad, math.sin(phi) * rad, z])
            dirs.append(c @ frame)
        for i, d in enumerate(dirs[:n]):
            seeds.append((float(i), project_to_manifold(v + eps * d, fs.r)))
    return seeds


def single_linkage(items, dist, eps: float) -> list[list[int]]:
    """Greedy single-linkage clustering at threshold eps."""
    n = len(items)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if dist(items[i], items[j]) <= eps:
                ri, rj = find(i), find(j)
            else:
                continue
            if ri != rj:
                parent[ri] = rj
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


@dataclass
class ModuliReport:
    source: str
    target: str
    method: str                       # "capture" or "bisection"
    cluster_count: int
    cluster_sizes: list[int]
    representatives: list[dict]
    trajectories: list[Trajectory]


def empirical_moduli(fs: FieldSpec, p: str, q: str, n: int = 32,
                     opts: IntegrateOptions | None = None,
                     cluster_eps: float | None = None) -> ModuliReport:
    """Sample flows off the unstable sphere of p and cluster the ones that
    reach q.

    When no direct sample is captured but the one-parameter seed family
    changes sides across the target's basin (read off the transverse
    coordinate at a level crossing below the box), the connection parameters
    are pinned by bisection before clustering; that is what resolves the
    measure-zero connections of the perturbed field.
    """
    if n < 8:
        raise ValueError("need at least 8 samples")
    crits = critical_points(fs.r)
    if p not in crits or q not in crits:
        raise ValueError(f"unknown critical points {p!r}, {q!r}")
    mid = 0.5 * (height(crits[p].ambient) + height(crits[q].ambient))
    below_box = -1.5 * fs.box.f_height
    base_opts = opts or IntegrateOptions()
    levels = tuple(sorted(set(base_opts.levels) | {mid, below_box},
                          reverse=True))
    run_opts = IntegrateOptions(base_opts.rtol, base_opts.atol,
                                base_opts.max_time, base_opts.capture_radius,
                                base_opts.stall_speed, levels)
    eps = cluster_eps if cluster_eps is not None else fs.r / 2.0

    seeds = unstable_seeds(fs, crits[p], n)
    flows = []
    for param, y0 in seeds:
        tr = integrate(fs, y0, run_opts, start=p)
        tr.seed_param = param
        flows.append(tr)
    captured = [tr for tr in flows if tr.end == q]
    # a circle of seeds can cross measure-zero connections between samples;
    # bisection on the post-box transverse sign finds those as well
    extra = _bisect_connections(fs, crits[p], flows, q, run_opts)
    known = set(map(id, captured))
    captured += [tr for tr in extra if id(tr) not in known]
    if not captured:
        raise NoConnections(f"no sampled flow from {p} reached {q}")
    method = "capture" if known else "bisection"
    clusters = single_linkage(captured, trajectory_distance, eps)
    reps = []
    for group in clusters:
        tr = captured[group[0]]
        reps.append({
            "seed_param": tr.seed_param,
            "crossings": [[lvl] + [round(float(c), 12) for c in pt]
                          for lvl, pt in tr.crossings],
        })
    return ModuliReport(p, q, method, len(clusters),
                        [len(g) for g in clusters], reps, captured)


def _transverse_sign(tr: Trajectory, level: float) -> float | None:
    for lvl, pt in tr.crossings:
        if abs(lvl - level) < 1e-12:
            return float(pt[3])
    return None


def _bisect_connections(fs, p_pt, flows, q, opts,
                        zero_tol: float = 1e-9) -> list[Trajectory]:
    """Root-hunt the seed angle where the post-box transverse coordinate
    changes sign; only meaningful for a circle of seeds.

    Probe integrations stop just below the tracking level instead of flowing
    all the way into a basin; only the converged root is integrated fully and
    kept when it is captured at the target.
    """
    below_box = -1.5 * fs.box.f_height
    params = [tr.seed_param for tr in flows]
    if any(pp is None for pp in params) or len(set(params)) != len(params):
        return []
    signs = [_transverse_sign(tr, below_box) for tr in flows]
    if any(s is None for s in signs):
        return []
    n = len(flows)
    v = p_pt.ambient
    frame = tangent_basis(v, fs.r)
    evals, evecs = np.linalg.eigh(flow_jacobian(fs, p_pt))
    unstable = [evecs[:, i] for i in range(3) if evals[i] > 1e-8]
    if len(unstable) != 2:
        return []
    b0, b1 = unstable[0] @ frame, unstable[1] @ frame
    probe_opts = IntegrateOptions(opts.rtol, opts.atol, opts.max_time,
                                  opts.capture_radius, opts.stall_speed,
                                  (below_box,), stop_level=below_box - 0.05)

    def seed_at(phi):
        d = math.cos(phi) * b0 + math.sin(phi) * b1
        return project_to_manifold(v + 1e-3 * d, fs.r)

    def finish(phi):
        tr = integrate(fs, seed_at(phi), opts, start="")
        tr.seed_param = phi % (2.0 * math.pi)
        return tr if tr.end == q else None

    found = []
    for i in range(n):
        j = (i + 1) % n
        si, sj = signs[i], signs[j]
        if abs(si) <= zero_tol:
            # an exact hit either captured q already or belongs to another
            # basin; only an unresolved run is worth retrying
            if flows[i].end == "maxtime":
                tr = finish(params[i])
                if tr is not None:
                    found.append(tr)
            continue
        if abs(sj) <= zero_tol or (si > 0) == (sj > 0):
            continue
        lo, hi = params[i], params[j]
        if hi < lo:
            hi += 2.0 * math.pi
        root = None
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            probe = integrate(fs, seed_at(mid), probe_opts, start="")
            s = _transverse_sign(probe, below_box)
            if s is None:
                break
            if abs(s) <= 1e-12 or hi - lo < 1e-12:
                root = mid
                break
            if (s > 0) == (si > 0):
                lo = mid
            else:
                hi = mid
        if root is not None:
            tr = finish(root)
            if tr is not None:
                found.append(tr)
    return found


# ---------------------------------------------------------------------------
# Config and trajectory dumps
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {"field", "r", "theta", "psi_value", "delta", "box", "rtol",
                "capture_radius", "max_time", "samples", "levels",
                "cluster_eps"}


@dataclass
class SimConfig:
    field: FieldSpec
    opts: IntegrateOptions
    samples: int = 64
    cluster_eps: float | None = None


def parse_config(data: dict) -> SimConfig:
    """Strict config parsing: unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    r = float(data.get("r", 0.5))
    theta_data = data.get("theta", {"kind": "oscillating"})
    if not isinstance(theta_data, dict) or \
            set(theta_data) - {"kind", "k"}:
        raise ConfigError(f"bad theta spec {theta_data!r}")
    theta = ThetaSpec(theta_data.get("kind", "oscillating"),
                      int(theta_data.get("k", 4)))
    box_data = data.get("box", {})
    if not isinstance(box_data, dict) or \
            set(box_data) - {"ang_width", "f_height"}:
        raise ConfigError(f"bad box spec {box_data!r}")
    box = BoxSpec(float(box_data.get("ang_width", 0.2)),
                  float(box_data.get("f_height", 0.2)))
    fs = FieldSpec(data.get("field", "standard"), r, theta,
                   PsiSpec(float(data.get("psi_value", 2.0))),
                   float(data.get("delta", 1.0)), box)
    opts = IntegrateOptions(
        rtol=float(data.get("rtol", 1e-9)),
        capture_radius=float(data.get("capture_radius", 1e-6)),
        max_time=float(data.get("max_time", 400.0)),
        levels=tuple(float(x) for x in data.get("levels", ())))
    samples = int(data.get("samples", 64))
    eps = data.get("cluster_eps")
    return SimConfig(fs, opts, samples, None if eps is None else float(eps))


def load_config(path) -> SimConfig:
    with open(path) as fh:
        return parse_config(json.load(fh))


def trajectory_csv(tr: Trajectory, r: float = 0.5) -> str:
    lines = ["t,u1,u2,u3,ang,a,b,c,y,f"]
    for t, pt in zip(tr.times, tr.points):
        ep = EmbeddedPoint.from_ambient(pt, r)
        vals = [t, *ep.u, ep.ang, *pt, height(pt)]
        lines.append(",".join(f"{v:.12g}" for v in vals))
    return "\n".join(lines) + "\n"
