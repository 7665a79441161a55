"""Triangulations of multiply connected planar domains.

Holes are meshed rather than cut out: every triangle carries a region tag
(0 for the bulk, r >= 1 for hole r) and every boundary edge a tag (0 for the
exterior boundary, r for the interface of hole r). The MESH v1 text format
used by :func:`import_mesh` / :func:`export_mesh` is::

    MESH v1
    vertices <nv>
    <x> <y>                     (nv lines)
    triangles <nt>
    <i> <j> <k> <region>        (nt lines)
    boundary_edges <ne>
    <i> <j> <tag>               (ne lines)

Lines starting with ``#`` (and trailing ``# ...`` comments) are ignored.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError, ValidationError

__all__ = [
    "DomainKind",
    "DomainSpec",
    "Mesh",
    "RegionMetrics",
    "build_mesh",
    "export_mesh",
    "generate_annulus_mesh",
    "generate_disk_mesh",
    "generate_eccentric_annulus_mesh",
    "import_mesh",
    "mesh_to_text",
    "parse_mesh_text",
    "region_metrics",
    "validate_mesh",
]


class DomainKind(str, enum.Enum):
    DISK = "disk"
    CONCENTRIC_ANNULUS = "concentric_annulus"
    ECCENTRIC_ANNULUS = "eccentric_annulus"
    EXTERNAL_MESH = "external_mesh"


@dataclass(frozen=True)
class DomainSpec:
    kind: DomainKind
    R0: float = 1.0
    R1: float = 0.0
    d: float = 0.0
    mesh_path: str | None = None
    n_radial: int = 16
    n_angular: int = 64

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        if self.kind is DomainKind.EXTERNAL_MESH:
            if not self.mesh_path:
                raise ParameterError("external_mesh requires mesh_path")
            return
        _check_resolution(self.n_radial, self.n_angular)
        if not self.R0 > 0:
            raise ParameterError(f"R0 must be positive, got {self.R0}")
        if self.kind is DomainKind.DISK:
            return
        if not self.R1 > 0:
            raise ParameterError(f"annulus requires R1 > 0, got {self.R1}")
        if self.kind is DomainKind.CONCENTRIC_ANNULUS and self.d != 0:
            raise ParameterError("concentric_annulus requires d = 0")
        if self.d < 0 or not self.d + self.R1 < self.R0:
            raise ParameterError(
                f"hole must lie strictly inside: need d + R1 < R0 (d={self.d}, R1={self.R1}, R0={self.R0})"
            )


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation of the outer domain with region and boundary tags.

    Arrays are treated as immutable after construction (they are made
    read-only in ``__post_init__``).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    regions: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: np.ndarray
    resolution: tuple[int, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        casts = {
            "vertices": np.asarray(self.vertices, dtype=float).reshape(-1, 2),
            "triangles": np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3),
            "regions": np.asarray(self.regions, dtype=np.int64).reshape(-1),
            "boundary_edges": np.asarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2),
            "edge_tags": np.asarray(self.edge_tags, dtype=np.int64).reshape(-1),
        }
        for name, arr in casts.items():
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def hole_count(self) -> int:
        return int(self.regions.max(initial=0))

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def areas(self) -> np.ndarray:
        return np.abs(self.signed_areas)

    @cached_property
    def shape_gradients(self) -> np.ndarray:
        """Constant gradients of the three P1 hat functions, shape (nt, 3, 2)."""
        p = self.vertices[self.triangles]
        two_a = 2.0 * self.signed_areas
        grads = np.empty((self.n_triangles, 3, 2))
        for a in range(3):
            b, c = (a + 1) % 3, (a + 2) % 3
            # rotate the opposite edge by -90 degrees
            grads[:, a, 0] = (p[:, b, 1] - p[:, c, 1]) / two_a
            grads[:, a, 1] = (p[:, c, 0] - p[:, b, 0]) / two_a
        return grads

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        q = self.vertices[self.boundary_edges]
        return np.hypot(*(q[:, 1] - q[:, 0]).T)

    def exterior_edges(self) -> np.ndarray:
        return self.boundary_edges[self.edge_tags == 0]

    def exterior_edge_lengths(self) -> np.ndarray:
        return self.edge_lengths[self.edge_tags == 0]

    def scaled(self, factor: float) -> "Mesh":
        return Mesh(factor * self.vertices, self.triangles, self.regions,
                    self.boundary_edges, self.edge_tags, self.resolution)


@dataclass(frozen=True)
class RegionMetrics:
    area_total: float
    hole_areas: tuple[float, ...]
    area_bulk: float
    perimeter_exterior: float
    R0_sharp: float
    RS_sharp: float

    @property
    def hole_area_total(self) -> float:
        return float(sum(self.hole_areas))


def _check_resolution(n_radial, n_angular):
    if int(n_radial) != n_radial or int(n_angular) != n_angular:
        raise ParameterError("resolution must be integral")
    if n_radial < 2 or n_angular < 8:
        raise ParameterError(f"need n_radial >= 2 and n_angular >= 8, got ({n_radial}, {n_angular})")


def _ring_quads(first_ring_start, n_rings, na):
    """Triangles between consecutive rings of ``na`` vertices each (CCW)."""
    i = np.arange(na)
    ip = (i + 1) % na
    tris = []
    for k in range(n_rings - 1):
        inner = first_ring_start + k * na
        outer = inner + na
        a, b = inner + i, inner + ip
        c, d = outer + ip, outer + i
        tris.append(np.stack([a, d, c], axis=1))
        tris.append(np.stack([a, c, b], axis=1))
    return np.concatenate(tris) if tris else np.empty((0, 3), dtype=np.int64)


def generate_disk_mesh(R0: float, n_radial: int, n_angular: int) -> Mesh:
    """Structured polar mesh of the disk of radius ``R0`` centred at the origin."""
    if not R0 > 0:
        raise ParameterError(f"R0 must be positive, got {R0}")
    _check_resolution(n_radial, n_angular)
    na = int(n_angular)
    theta = 2.0 * np.pi * np.arange(na) / na
    radii = R0 * np.arange(1, n_radial + 1) / n_radial
    ring_pts = (radii[:, None, None] * np.stack([np.cos(theta), np.sin(theta)], axis=1)[None]).reshape(-1, 2)
    vertices = np.vstack([[0.0, 0.0], ring_pts])
    i = np.arange(na)
    fan = np.stack([np.zeros(na, dtype=np.int64), 1 + i, 1 + (i + 1) % na], axis=1)
    triangles = np.vstack([fan, _ring_quads(1, n_radial, na)])
    outer = 1 + (n_radial - 1) * na
    edges = np.stack([outer + i, outer + (i + 1) % na], axis=1)
    return Mesh(vertices, triangles, np.zeros(len(triangles), dtype=np.int64),
                edges, np.zeros(na, dtype=np.int64), resolution=(int(n_radial), na))


def generate_eccentric_annulus_mesh(R0: float, R1: float, d: float, n_radial: int, n_angular: int) -> Mesh:
    """Annulus between the circle |x| = R0 and a meshed hole of radius R1 centred at (d, 0).

    Ring ``j`` interpolates linearly (along each angular ray) between the
    hole circle and the outer circle; the Jacobian of this map is
    proportional to ``R0 - R1 - d cos(theta)``, so every triangle is
    positively oriented whenever ``d + R1 < R0``.
    """
    DomainSpec(DomainKind.ECCENTRIC_ANNULUS, R0=R0, R1=R1, d=d, n_radial=n_radial, n_angular=n_angular)
    na = int(n_angular)
    theta = 2.0 * np.pi * np.arange(na) / na
    e = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    inner = np.array([d, 0.0]) + R1 * e
    outer = R0 * e
    s = np.arange(n_radial + 1) / n_radial
    rings = (1.0 - s)[:, None, None] * inner[None] + s[:, None, None] * outer[None]
    vertices = np.vstack([[d, 0.0], rings.reshape(-1, 2)])
    i = np.arange(na)
    ip = (i + 1) % na
    fan = np.stack([np.zeros(na, dtype=np.int64), 1 + i, 1 + ip], axis=1)
    bulk = _ring_quads(1, n_radial + 1, na)
    triangles = np.vstack([fan, bulk])
    regions = np.concatenate([np.ones(na, dtype=np.int64), np.zeros(len(bulk), dtype=np.int64)])
    last = 1 + n_radial * na
    edges = np.vstack([np.stack([last + i, last + ip], axis=1), np.stack([1 + i, 1 + ip], axis=1)])
    tags = np.concatenate([np.zeros(na, dtype=np.int64), np.ones(na, dtype=np.int64)])
    return Mesh(vertices, triangles, regions, edges, tags, resolution=(int(n_radial), na))


def generate_annulus_mesh(R0: float, R1: float, n_radial: int, n_angular: int) -> Mesh:
    return generate_eccentric_annulus_mesh(R0, R1, 0.0, n_radial, n_angular)


def build_mesh(spec: DomainSpec) -> Mesh:
    if spec.kind is DomainKind.DISK:
        return generate_disk_mesh(spec.R0, spec.n_radial, spec.n_angular)
    if spec.kind is DomainKind.EXTERNAL_MESH:
        return import_mesh(spec.mesh_path)
    return generate_eccentric_annulus_mesh(spec.R0, spec.R1, spec.d, spec.n_radial, spec.n_angular)


# --------------------------------------------------------------------------
# validation


def _edge_key(a, b):
    return (a, b) if a < b else (b, a)


def _loops(edges):
    """Number of closed loops formed by ``edges``; None if some vertex has degree != 2."""
    adj = defaultdict(list)
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    if any(len(nb) != 2 for nb in adj.values()):
        return None, [v for v, nb in adj.items() if len(nb) != 2]
    seen = set()
    loops = 0
    for start in adj:
        if start in seen:
            continue
        loops += 1
        stack = [start]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(adj[v])
    return loops, []


def validate_mesh(mesh: Mesh) -> None:
    """Raise :class:`ValidationError` naming the first violated invariant."""
    nv = mesh.n_vertices
    if mesh.n_triangles == 0:
        raise ValidationError("mesh has no triangles")
    if mesh.triangles.min() < 0 or mesh.triangles.max() >= nv:
        raise ValidationError("triangle references a vertex out of range")
    if len(mesh.boundary_edges) and (mesh.boundary_edges.min() < 0 or mesh.boundary_edges.max() >= nv):
        raise ValidationError("boundary edge references a vertex out of range")
    if mesh.regions.min() < 0 or (len(mesh.edge_tags) and mesh.edge_tags.min() < 0):
        raise ValidationError("negative region or edge tag")

    bad = np.flatnonzero(mesh.signed_areas <= 0)
    if bad.size:
        raise ValidationError(f"triangle {bad[0]} has non-positive signed area {mesh.signed_areas[bad[0]]:.3e}")

    m = mesh.hole_count
    counts = np.bincount(mesh.regions, minlength=m + 1)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise ValidationError(f"region {empty[0]} has no triangles")

    incident = defaultdict(list)
    for t, tri in enumerate(mesh.triangles.tolist()):
        for a in range(3):
            incident[_edge_key(tri[a], tri[(a + 1) % 3])].append(t)
    for key, ts in incident.items():
        if len(ts) > 2:
            raise ValidationError(f"non-manifold edge {key} shared by {len(ts)} triangles")

    tagged = {}
    for (a, b), tag in zip(mesh.boundary_edges.tolist(), mesh.edge_tags.tolist()):
        key = _edge_key(a, b)
        if key in tagged:
            raise ValidationError(f"boundary edge {key} listed twice")
        if key not in incident:
            raise ValidationError(f"boundary edge {key} is not an edge of any triangle")
        tagged[key] = tag

    topo_boundary = {k for k, ts in incident.items() if len(ts) == 1}
    exterior = {k for k, tag in tagged.items() if tag == 0}
    if topo_boundary != exterior:
        missing = sorted(topo_boundary - exterior)
        extra = sorted(exterior - topo_boundary)
        where = f"untagged boundary edge {missing[0]}" if missing else f"tag-0 edge {extra[0]} is interior"
        raise ValidationError(f"exterior boundary mismatch: {where}")

    regions = mesh.regions
    for key, tag in tagged.items():
        if tag == 0:
            continue
        if tag > m:
            raise ValidationError(f"edge {key} has tag {tag} but mesh has {m} holes")
        rs = {int(regions[t]) for t in incident[key]}
        if tag not in rs:
            raise ValidationError(f"edge {key} tagged {tag} does not bound a region-{tag} triangle")
    for key, ts in incident.items():
        if len(ts) == 2:
            r0, r1 = int(regions[ts[0]]), int(regions[ts[1]])
            if r0 != r1:
                if 0 not in (r0, r1):
                    raise ValidationError(f"edge {key} separates two different holes {r0} and {r1}")
                hole = max(r0, r1)
                if tagged.get(key) != hole:
                    raise ValidationError(f"interface edge {key} between bulk and hole {hole} is not tagged {hole}")

    by_tag = defaultdict(list)
    for key, tag in tagged.items():
        by_tag[tag].append(key)
    for tag in range(m + 1):
        loops, open_vertices = _loops(by_tag.get(tag, []))
        if loops is None:
            raise ValidationError(f"boundary loop with tag {tag} is open at vertex {open_vertices[0]}")
        if loops != 1:
            raise ValidationError(f"tag {tag} edges form {loops} loops, expected exactly 1")

    hole_vertex_owner = {}
    for t in np.flatnonzero(regions > 0):
        for v in mesh.triangles[t].tolist():
            r = int(regions[t])
            if hole_vertex_owner.setdefault(v, r) != r:
                raise ValidationError(f"vertex {v} touches holes {hole_vertex_owner[v]} and {r}")
    ext_vertices = {v for key in exterior for v in key}
    touching = ext_vertices & set(hole_vertex_owner)
    if touching:
        v = min(touching)
        raise ValidationError(f"hole {hole_vertex_owner[v]} touches the exterior boundary at vertex {v}")


# --------------------------------------------------------------------------
# MESH v1 text format


def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _parse_section(lines, name, width, types):
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise FormatError(f"missing '{name}' section") from None
    parts = header.split()
    if len(parts) != 2 or parts[0] != name:
        raise FormatError(f"expected '{name} <count>', got {header!r}", lineno)
    try:
        count = int(parts[1])
    except ValueError:
        raise FormatError(f"bad count {parts[1]!r}", lineno) from None
    if count < 0:
        raise FormatError(f"negative count {count}", lineno)
    rows = []
    for _ in range(count):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise FormatError(f"'{name}' section ends early: expected {count} rows") from None
        fields = line.split()
        if len(fields) != width:
            raise FormatError(f"{name} row needs {width} fields, got {len(fields)}", lineno)
        try:
            rows.append([t(x) for t, x in zip(types, fields)])
        except ValueError:
            raise FormatError(f"cannot parse {name} row {line!r}", lineno) from None
        rows[-1].append(lineno)
    return rows


def parse_mesh_text(text: str, validate: bool = True) -> Mesh:
    lines = _content_lines(text)
    try:
        lineno, first = next(lines)
    except StopIteration:
        raise FormatError("empty file", 1) from None
    if first.split() != ["MESH", "v1"]:
        raise FormatError(f"expected header 'MESH v1', got {first!r}", lineno)
    verts = _parse_section(lines, "vertices", 2, (float, float))
    tris = _parse_section(lines, "triangles", 4, (int,) * 4)
    edges = _parse_section(lines, "boundary_edges", 3, (int,) * 3)
    extra = next(lines, None)
    if extra is not None:
        raise FormatError(f"unexpected trailing content {extra[1]!r}", extra[0])
    nv = len(verts)
    for row in tris:
        if any(not 0 <= i < nv for i in row[:3]):
            raise FormatError(f"triangle references vertex outside 0..{nv - 1}", row[-1])
        if row[3] < 0:
            raise FormatError("negative region tag", row[-1])
    for row in edges:
        if any(not 0 <= i < nv for i in row[:2]):
            raise FormatError(f"boundary edge references vertex outside 0..{nv - 1}", row[-1])
        if row[2] < 0:
            raise FormatError("negative edge tag", row[-1])
    mesh = Mesh(
        np.array([r[:2] for r in verts], dtype=float).reshape(-1, 2),
        np.array([r[:3] for r in tris], dtype=np.int64).reshape(-1, 3),
        np.array([r[3] for r in tris], dtype=np.int64),
        np.array([r[:2] for r in edges], dtype=np.int64).reshape(-1, 2),
        np.array([r[2] for r in edges], dtype=np.int64),
    )
    if validate:
        validate_mesh(mesh)
    return mesh


def import_mesh(path) -> Mesh:
    return parse_mesh_text(Path(path).read_text())


def mesh_to_text(mesh: Mesh) -> str:
    out = ["MESH v1", f"vertices {mesh.n_vertices}"]
    out += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices.tolist()]
    out.append(f"triangles {mesh.n_triangles}")
    out += [f"{i} {j} {k} {r}" for (i, j, k), r in zip(mesh.triangles.tolist(), mesh.regions.tolist())]
    out.append(f"boundary_edges {len(mesh.boundary_edges)}")
    out += [f"{i} {j} {t}" for (i, j), t in zip(mesh.boundary_edges.tolist(), mesh.edge_tags.tolist())]
    return "\n".join(out) + "\n"


def export_mesh(mesh: Mesh, path) -> None:
    Path(path).write_text(mesh_to_text(mesh))


# --------------------------------------------------------------------------


def region_metrics(mesh: Mesh) -> RegionMetrics:
    m = mesh.hole_count
    per_region = np.bincount(mesh.regions, weights=mesh.areas, minlength=m + 1)
    total = float(mesh.areas.sum())
    holes = tuple(float(a) for a in per_region[1:])
    bulk = float(per_region[0])
    if not bulk > 0:
        raise ValidationError("bulk region has no area")
    return RegionMetrics(
        area_total=total,
        hole_areas=holes,
        area_bulk=bulk,
        perimeter_exterior=float(mesh.exterior_edge_lengths().sum()),
        R0_sharp=math.sqrt(total / math.pi),
        RS_sharp=math.sqrt(sum(holes) / math.pi),
    )
