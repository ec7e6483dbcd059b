"""Global statements assembled from local crossing data.

* local formula on closed 3-manifolds: ``W3 = -sum_a Ch(X_a; j) + sum_b sum_{l>j} Ch(Y_b; l)``
* Floquet indices ``I(U; j)`` and endpoint Chern numbers ``C(V; l)`` of maps on
  ``Sigma x [0, 1]``, their relations, and the homotopy verdict for pairs.
"""
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .chern import BOUNDARY_GAP_MIN, band_chern
from .crossings import (IDENTITY_SCALE, default_threshold, detect, detect_identity,
                        field_labels, identity_distance, surround)
from .errors import GridMismatch, IsolationFailure, NotFloquetMap
from .linalg import GAP_TOL, gap_values
from .manifolds import CLOSED_KIND, Grid3, build_grid, slice_mesh
from .propagator import glue, projector_flow, relative_evolution, sample, w1_reduce
from .winding import w3

SCHEMA = 1
HOMOTOPIC = "HOMOTOPIC"
NOT_HOMOTOPIC = "NOT_HOMOTOPIC"

_THREADS = {"n": 0}


def set_threads(n):
    """Worker threads for independent Chern computations (0 = one per CPU)."""
    _THREADS["n"] = int(n)


def _pmap(fn, items):
    items = list(items)
    n = _THREADS["n"] or os.cpu_count() or 1
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


@dataclass
class Check:
    name: str
    passed: bool
    expected: object = None
    computed: object = None
    detail: str = ""


@dataclass
class InvariantReport:
    model: str
    domain: str
    grid: tuple
    n: int
    w3: dict = None
    crossings: dict = field(default_factory=dict)
    identity: list = field(default_factory=list)
    floquet_indices: list = None
    endpoint_cherns: list = None
    checks: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, name, passed, expected=None, computed=None, detail=""):
        self.checks.append(Check(name, bool(passed), expected, computed, detail))

    def to_dict(self):
        d = asdict(self)
        d["schema"] = SCHEMA
        d["grid"] = list(self.grid)
        d["passed"] = self.passed
        return _plain(d)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def table(self):
        lines = [f"model {self.model}  domain {self.domain}  grid {'x'.join(map(str, self.grid))}  N={self.n}"]
        if self.w3:
            lines.append(f"W3 = {self.w3['value']:.6f} -> {self.w3['integer']} "
                         f"(residual {self.w3['residual']:.3g})")
        for j, comps in sorted(self.crossings.items()):
            for c in comps:
                lines.append(f"  Cr_{j}: {c['geometry']:<60s} Ch = {c.get('ch')}")
        for c in self.identity:
            lines.append(f"  U^-1(1): {c['geometry']:<56s} Ch = {c.get('ch')}")
        if self.floquet_indices is not None:
            lines.append(f"I(U; j) = {self.floquet_indices}")
        if self.endpoint_cherns is not None:
            lines.append(f"C(V; l) = {self.endpoint_cherns}")
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            lines.append(f"[{mark}] {c.name}: expected {c.expected}, computed {c.computed} {c.detail}")
        return "\n".join(lines)


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# ---------------------------------------------------------------------------
# closed manifolds

@dataclass
class LocalData:
    """Crossing components of one band with surfaces and charges attached."""

    j: int
    components: list
    charges: list
    identity: list
    identity_charges: list

    @property
    def rhs(self):
        total = -sum(self.charges)
        for ch in self.identity_charges:
            total += sum(ch[l] for l in ch if l > self.j)
        return total


def local_data(model, field, j, threshold=None, lam=None, radii=None, resolution=None):
    """Detect, surround and charge the crossings of band ``j`` and of ``U^-1(1)``.

    ``radii`` may map a component index (in detection order) to explicit
    radii; identity components are keyed ``("identity", b)``.
    """
    grid = field.grid
    lam = field_labels(field) if lam is None else lam
    thr = default_threshold(field, lam) if threshold is None else threshold
    n = field.n
    comps = detect(field, j, thr, lam)
    ids = detect_identity(field, IDENTITY_SCALE * thr, lam) if n >= 3 else []
    radii = radii or {}
    live = [c for c in comps if c.geometry.kind != "Bulk"]
    live_ids = [c for c in ids if c.geometry.kind != "Bulk"]

    def do(item):
        kind, i, c = item
        pool = live + live_ids
        others = [o for o in pool if o is not c]
        r = radii.get(i if kind == "cr" else ("identity", i))
        s = surround(c, model, grid, others, radii=r, resolution=resolution)
        if kind == "cr":
            return s, band_chern(s.mesh, model, j).value
        return s, {l: band_chern(s.mesh, model, l).value for l in range(j + 1, n + 1)}

    work = [("cr", i, c) for i, c in enumerate(live)] + [("id", i, c) for i, c in enumerate(live_ids)]
    out = _pmap(do, work)
    k = len(live)
    return LocalData(j, [o[0] for o in out[:k]], [o[1] for o in out[:k]],
                     [o[0] for o in out[k:]], [o[1] for o in out[k:]])


def verify_local_formula(model, grid, j, threshold=None, field=None, winding=None, radii=None):
    """Compare ``W3`` with the local right-hand side for band ``j``.

    Returns ``(passed, winding, LocalData)``.
    """
    field = sample(model, grid) if field is None else field
    winding = w3(field) if winding is None else winding
    data = local_data(model, field, j, threshold, radii=radii)
    return (winding.ok and data.rhs == winding.integer), winding, data


def verify_closed(model, grid, bands=None, threshold=None):
    """Full report for a map on a closed 3-manifold."""
    field = sample(model, grid)
    lam = field_labels(field)
    wr = w3(field)
    rep = InvariantReport(model.name, grid.kind, grid.sizes, model.n, w3=wr.as_dict(),
                          provenance=dict(getattr(model, "source", {})))
    bands = bands or list(range(1, model.n + 1))
    rep.add("W3 integral", wr.ok, "residual < %.2g" % wr.threshold, wr.residual)
    exp = getattr(model, "expected", {})
    if "W3" in exp:
        rep.add("W3 reference value", wr.integer == exp["W3"] and wr.ok, exp["W3"], wr.integer)
    rhs = {}
    for j in bands:
        data = local_data(model, field, j, threshold, lam)
        rep.crossings[j] = [{**c.report(), "ch": ch} for c, ch in zip(data.components, data.charges)]
        if j == bands[0] or not rep.identity:
            rep.identity = [{**c.report(), "ch": ch} for c, ch in zip(data.identity, data.identity_charges)]
        rhs[j] = data.rhs
        rep.add(f"local formula j={j}", wr.ok and data.rhs == wr.integer, wr.integer, data.rhs)
    rep.add("independent of j", len(set(rhs.values())) == 1, "equal", rhs)
    return rep


# ---------------------------------------------------------------------------
# Floquet maps on Sigma x [0, 1]

def check_floquet(field, gap_tol=GAP_TOL):
    """Raise NotFloquetMap unless the field starts at 1 and ends gapped."""
    if field.grid.kind not in CLOSED_KIND:
        raise NotFloquetMap(f"{field.grid.kind} is not a cylinder domain")
    start = np.max(np.abs(field.values[:, :, 0] - np.eye(field.n)))
    if start > 1e-8:
        raise NotFloquetMap(f"t=0 slice differs from the identity by {start:.2e}")
    lam = field_labels(field)
    end = np.min(gap_values(lam[:, :, -1]))
    if end <= gap_tol:
        raise NotFloquetMap(f"t=1 slice has a closed gap (min {end:.2e})")
    return lam


def collar_index(lam, threshold):
    """First time plane on which every gap exceeds the detection threshold."""
    g = np.min(gap_values(lam), axis=(0, 1, 3))
    ok = np.nonzero(g[1:] > max(threshold, BOUNDARY_GAP_MIN))[0]
    if not len(ok):
        raise IsolationFailure("no gapped time plane near t = 0")
    return int(ok[0]) + 1


@dataclass
class FloquetData:
    field: object
    lam: np.ndarray
    threshold: float
    collar: int
    interior: dict
    collar_charges: dict

    @property
    def eps(self):
        return float(self.field.grid.axis_values(2)[self.collar])


def floquet_data(model, grid, threshold=None, radii=None, field=None, resolution=None):
    """Interior crossings with charges and collar Chern numbers for all bands."""
    field = sample(model, grid) if field is None else field
    lam = check_floquet(field)
    thr = default_threshold(field, lam) if threshold is None else threshold
    m = collar_index(lam, thr)
    eps = float(grid.axis_values(2)[m])
    n = field.n
    radii = radii or {}
    interior = {}
    for j in range(1, n + 1):
        comps = detect(field, j, thr, lam)
        inner = [c for c in comps if np.min(c.vertices[:, 2]) > 0]
        edge = [c for c in comps if np.min(c.vertices[:, 2]) == 0]
        for c in inner:
            if np.min(c.vertices[:, 2]) <= m:
                raise IsolationFailure("a crossing reaches into the collar near t = 0")

        def do(item, j=j, inner=inner, edge=edge):
            i, c = item
            others = [o for o in inner if o is not c] + edge
            s = surround(c, model, grid, others, radii=radii.get((j, i)), resolution=resolution)
            return s, band_chern(s.mesh, model, j).value

        interior[j] = _pmap(do, list(enumerate(inner)))
    mesh = slice_mesh(grid, eps, outward=1, resolution=resolution or (48, 48))
    collar = {l: band_chern(mesh, model, l).value for l in range(1, n + 1)}
    return FloquetData(field, lam, thr, m, interior, collar)


def floquet_index(data, j):
    """``I(U; j) = -sum_a Ch(X_a; j) + sum_{l=j+1}^N Ch(Sigma x {eps}; l)``."""
    n = data.field.n
    local = -sum(ch for _, ch in data.interior[j])
    return local + sum(data.collar_charges[l] for l in range(j + 1, n + 1))


def floquet_indices(data):
    return [floquet_index(data, j) for j in range(1, data.field.n + 1)]


def endpoint_cherns(model, grid, resolution=(48, 48)):
    """``C(V; l)`` for the endpoint slice, seen as the boundary of the return half."""
    hi = grid.bounds[2][1]
    mesh = slice_mesh(grid, hi, outward=1, resolution=resolution)
    c = [-band_chern(mesh, model, l, gap_min=GAP_TOL).value for l in range(1, model.n + 1)]
    if sum(c) != 0:
        raise IsolationFailure(f"endpoint Chern numbers {c} do not sum to zero")
    return c


def check_index_relations(model, grid, data=None, cherns=None, flow_steps=24):
    """Relations between indices, endpoint Chern numbers and winding numbers.

    Returns a list of :class:`Check`.
    """
    data = floquet_data(model, grid) if data is None else data
    cherns = endpoint_cherns(model, grid) if cherns is None else cherns
    idx = floquet_indices(data)
    n = model.n
    out = []
    for p in range(1, n + 1):
        for q in range(p, n + 1):
            lhs = idx[q - 1] - idx[p - 1]
            rhs = sum(cherns[l - 1] for l in range(p + 1, q + 1))
            out.append(Check(f"I({q})-I({p}) = sum C", lhs == rhs, rhs, lhs))
    rel = w3(relative_evolution(data.field, n))
    out.append(Check(f"W3(relative evolution) = I({n})", rel.ok and rel.integer == idx[n - 1],
                     idx[n - 1], rel.integer, f"value {rel.value:.4f}"))
    closed = Grid3(CLOSED_KIND[grid.kind], (grid.sizes[0], grid.sizes[1], flow_steps),
                   grid.orientation)
    v = data.field.values[:, :, -1]
    for j in range(1, n):
        flow = w3(w1_reduce(projector_flow(v, j, closed)))
        target = sum(cherns[:j])
        out.append(Check(f"W3(projector flow {j}) = sum C(l<= {j})",
                         flow.ok and flow.integer == target, target, flow.integer,
                         f"value {flow.value:.4f}"))
    return out


def verify_floquet(model, grid, threshold=None):
    """Full report for a Floquet map on a cylinder domain."""
    data = floquet_data(model, grid, threshold)
    idx = floquet_indices(data)
    cherns = endpoint_cherns(model, grid)
    rep = InvariantReport(model.name, grid.kind, grid.sizes, model.n,
                          floquet_indices=idx, endpoint_cherns=cherns,
                          provenance=dict(getattr(model, "source", {})))
    for j, items in data.interior.items():
        rep.crossings[j] = [{**c.report(), "ch": ch} for c, ch in items]
    rep.identity = [{"j": "identity", "geometry": f"collar slice t={data.eps:.4g}",
                     "ch": data.collar_charges}]
    exp = getattr(model, "expected", {})
    if "I" in exp:
        rep.add("indices reference", list(exp["I"]) == idx, list(exp["I"]), idx)
    if "I1" in exp:
        rep.add("index j=1 reference", exp["I1"] == idx[0], exp["I1"], idx[0])
    if "C" in exp:
        rep.add("endpoint Chern reference", list(exp["C"]) == cherns, list(exp["C"]), cherns)
    rep.add("sum of endpoint Chern numbers", sum(cherns) == 0, 0, sum(cherns))
    rep.checks.extend(check_index_relations(model, grid, data, cherns))
    return rep


def verify(model, grid=None, bands=None, threshold=None):
    grid = grid or build_grid(model.domain_kind, model.default_grid)
    if grid.kind in CLOSED_KIND:
        return verify_floquet(model, grid, threshold)
    return verify_closed(model, grid, bands, threshold)


@dataclass
class Verdict:
    verdict: str
    indices: tuple
    cherns: tuple
    criterion_indices: bool
    criterion_mixed: bool
    glue_w3: dict = None
    glue_consistent: bool = None

    def to_dict(self):
        return _plain({**asdict(self), "schema": SCHEMA})


def classify(model_a, model_b, grid, threshold=None):
    """Homotopy verdict for two Floquet maps on the same cylinder grid."""
    if model_a.domain_kind != model_b.domain_kind or model_a.n != model_b.n:
        raise GridMismatch("the two maps live on different domains or sizes")
    if grid.kind != model_a.domain_kind:
        raise GridMismatch(f"grid kind {grid.kind} does not match {model_a.domain_kind}")
    da = floquet_data(model_a, grid, threshold)
    db = floquet_data(model_b, grid, threshold)
    ia, ib = floquet_indices(da), floquet_indices(db)
    ca, cb = endpoint_cherns(model_a, grid), endpoint_cherns(model_b, grid)
    crit2 = ia == ib
    crit3 = ia[0] == ib[0] and ca == cb
    v = Verdict(HOMOTOPIC if crit2 else NOT_HOMOTOPIC, (ia, ib), (ca, cb), crit2, crit3)
    ends = np.max(np.abs(da.field.values[:, :, -1] - db.field.values[:, :, -1]))
    if ends < 1e-8:
        gw = w3(glue(da.field, db.field))
        v.glue_w3 = gw.as_dict()
        diffs = {a - b for a, b in zip(ia, ib)}
        v.glue_consistent = gw.ok and len(diffs) == 1 and gw.integer in diffs
    return v


def identity_fraction(field, threshold):
    return float(np.mean(identity_distance(field) < threshold))
