#!/usr/bin/env python3
"""
Mesh Module for LPR-ADER
Handles tetrahedral box meshing, Local Polyhedral Replacement (LPR), VT/ET agglomeration
baselines, sub-tetrahedron geometry, validation and mesh file I/O
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from math import ceil
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from errors import ConfigurationError, ConformityError, GeometryError, MeshLogicError

logger = logging.getLogger('LPR-ADER.Mesh')

# Vertices of the face opposite local vertex j, ordered so the normal points outward
# for a positively oriented tetrahedron
LOCAL_FACES = ((1, 2, 3), (0, 3, 2), (0, 1, 3), (0, 2, 1))

# Boundary tags, stored in neighbor arrays as -(tag + 1)
BOUNDARY_TAGS = ('x-', 'x+', 'y-', 'y+', 'z-', 'z+', 'other')
TAG_OTHER = 6

CELL_KINDS = ('tet', 'octahedron', 'central', 'vt', 'et')

Box = Tuple[float, float, float, float, float, float]


def signed_volume(p0, p1, p2, p3) -> float:
    return float(np.linalg.det(np.array([p1 - p0, p2 - p0, p3 - p0]))) / 6.0


def face_key(a: int, b: int, c: int) -> Tuple[int, int, int]:
    return tuple(sorted((int(a), int(b), int(c))))


def box_volume(bounds: Box) -> float:
    return (bounds[3] - bounds[0]) * (bounds[4] - bounds[1]) * (bounds[5] - bounds[2])


@dataclass
class TetMesh:
    """Shared-vertex tetrahedral grid with face and vertex adjacency"""

    vertices: np.ndarray
    tets: np.ndarray
    boundary: np.ndarray
    bounds: Optional[Box] = None
    neighbors: np.ndarray = field(init=False)
    vertex_tets: List[List[int]] = field(init=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.tets = np.asarray(self.tets, dtype=int).reshape(-1, 4)
        self.boundary = np.asarray(self.boundary, dtype=bool).copy()
        self.neighbors = np.full((len(self.tets), 4), -1, dtype=int)
        owners: Dict[Tuple[int, int, int], Tuple[int, int]] = {}
        for t, tet in enumerate(self.tets):
            for j, loc in enumerate(LOCAL_FACES):
                key = face_key(*tet[list(loc)])
                other = owners.pop(key, None)
                if other is None:
                    owners[key] = (t, j)
                else:
                    self.neighbors[t, j] = other[0]
                    self.neighbors[other[0], other[1]] = t
        # vertices on unmatched faces lie on the domain boundary / hull
        for t, j in owners.values():
            self.boundary[self.tets[t][list(LOCAL_FACES[j])]] = True
        self.vertex_tets = [[] for _ in range(len(self.vertices))]
        for t, tet in enumerate(self.tets):
            for v in tet:
                self.vertex_tets[v].append(t)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    def volumes(self) -> np.ndarray:
        p = self.vertices[self.tets]
        return np.linalg.det(np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]], axis=1)) / 6.0

    def boundary_faces(self) -> List[Tuple[int, int, int]]:
        out = []
        for t, j in zip(*np.nonzero(self.neighbors < 0)):
            out.append(face_key(*self.tets[t][list(LOCAL_FACES[j])]))
        return out


def build_box_tet_mesh(bounds: Sequence[float], h: float, jitter: float = 0.0,
                       seed: Optional[int] = None) -> TetMesh:
    """Uniform cube lattice of the box, each cube split into 6 Kuhn tetrahedra

    Args:
        bounds: (x0, y0, z0, x1, y1, z1)
        h: target spacing, n = ceil(L / h) cubes per direction
        jitter: interior vertices moved by up to jitter*h per coordinate
        seed: random seed for the jitter

    Returns:
        TetMesh with deterministic vertex ordering i + (nx+1)*(j + (ny+1)*k)
    """
    if len(bounds) != 6:
        raise ConfigurationError(f"Box needs 6 numbers, got {len(bounds)}")
    lo = np.array(bounds[:3], dtype=float)
    hi = np.array(bounds[3:], dtype=float)
    extent = hi - lo
    if np.any(~(extent > 0.0)):
        raise ConfigurationError(f"Degenerate box {tuple(bounds)}")
    if not h > 0.0 or h > extent.min() * (1.0 + 1e-12):
        raise ConfigurationError(f"Spacing h={h} must be positive and at most the smallest box extent {extent.min()}")
    if not 0.0 <= jitter < 0.25:
        raise ConfigurationError(f"Jitter must lie in [0, 0.25), got {jitter}")

    nx, ny, nz = (max(1, int(ceil(L / h - 1e-9))) for L in extent)

    def nidx(i, j, k) -> int:
        return i + (nx + 1) * (j + (ny + 1) * k)

    xs = np.linspace(lo[0], hi[0], nx + 1)
    ys = np.linspace(lo[1], hi[1], ny + 1)
    zs = np.linspace(lo[2], hi[2], nz + 1)
    Z, Y, X = np.meshgrid(zs, ys, xs, indexing='ij')
    vertices = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    I, J, K = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), np.arange(nz + 1), indexing='ij')
    on_boundary = np.zeros(len(vertices), dtype=bool)
    for i, j, k in zip(I.ravel(), J.ravel(), K.ravel()):
        if i in (0, nx) or j in (0, ny) or k in (0, nz):
            on_boundary[nidx(i, j, k)] = True

    if jitter > 0.0:
        rng = np.random.default_rng(seed)
        spacing = extent / np.array([nx, ny, nz])
        shift = rng.uniform(-1.0, 1.0, size=vertices.shape) * jitter * spacing
        shift[on_boundary] = 0.0
        vertices = vertices + shift

    tets = []
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                A = nidx(i, j, k)
                B = nidx(i + 1, j, k)
                C = nidx(i, j + 1, k)
                D = nidx(i + 1, j + 1, k)
                E = nidx(i, j, k + 1)
                F = nidx(i + 1, j, k + 1)
                G = nidx(i, j + 1, k + 1)
                H = nidx(i + 1, j + 1, k + 1)
                for tet in ((A, B, D, H), (A, B, F, H), (A, C, D, H),
                            (A, C, G, H), (A, E, F, H), (A, E, G, H)):
                    a, b, c, d = tet
                    if signed_volume(*vertices[[a, b, c, d]]) < 0.0:
                        b, c = c, b
                    tets.append((a, b, c, d))

    tm = TetMesh(vertices, np.array(tets, dtype=int), on_boundary, tuple(float(b) for b in bounds))
    if np.any(tm.volumes() <= 0.0):
        raise GeometryError(f"Jitter {jitter} produced inverted tetrahedra")
    logger.debug(f"Box mesh {nx}x{ny}x{nz}: {tm.n_vertices} vertices, {tm.n_tets} tets")
    return tm


@dataclass
class PolyCell:
    """Polyhedral cell: its sub-tetrahedra and its boundary triangles"""

    kind: str
    subtets: np.ndarray
    faces: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=int))
    face_subtet: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    face_local: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    neighbors: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def n_faces(self) -> int:
        return len(self.faces)


@dataclass
class ReplacementReport:
    vertex: int
    n: int
    d: float
    cells_before: int
    cells_after: int


class PolyMesh:
    """Polyhedral mesh with a conforming tetrahedral subgrid

    Mutable while LPR or agglomeration runs (cells hold vertex 4-tuples), then
    finalize() numbers the sub-tetrahedra globally and builds cell faces and neighbors.
    """

    def __init__(self, vertices: np.ndarray, boundary: np.ndarray, bounds: Optional[Box] = None,
                 n_gamma: int = 0):
        self._vertices: List[np.ndarray] = [np.asarray(v, dtype=float) for v in vertices]
        self._boundary: List[bool] = [bool(b) for b in boundary]
        self._cells: List[Optional[Tuple[str, List[Tuple[int, int, int, int]]]]] = []
        self._vertex_cells: Dict[int, Set[int]] = defaultdict(set)
        self.bounds = bounds
        self.n_gamma = n_gamma
        self.replacements: List[ReplacementReport] = []
        self.diagonals: Dict[FrozenSet[int], FrozenSet[int]] = {}
        self.finalized = False

        self.vertices: Optional[np.ndarray] = None
        self.subtets: Optional[np.ndarray] = None
        self.cells: List[PolyCell] = []
        self.boundary: Optional[np.ndarray] = None

    @classmethod
    def from_tet_mesh(cls, tm: TetMesh) -> 'PolyMesh':
        pm = cls(tm.vertices, tm.boundary, tm.bounds, n_gamma=tm.n_tets)
        for tet in tm.tets:
            pm.add_cell('tet', [tuple(int(v) for v in tet)])
        return pm

    # -- construction phase ----------------------------------------------------------

    def add_vertex(self, x: np.ndarray, boundary: bool = False) -> int:
        self._require_mutable()
        self._vertices.append(np.asarray(x, dtype=float))
        self._boundary.append(boundary)
        return len(self._vertices) - 1

    def add_cell(self, kind: str, subtets: List[Tuple[int, int, int, int]]) -> int:
        self._require_mutable()
        if kind not in CELL_KINDS:
            raise MeshLogicError(f"Unknown cell kind '{kind}'")
        cid = len(self._cells)
        self._cells.append((kind, list(subtets)))
        for tet in subtets:
            for v in tet:
                self._vertex_cells[v].add(cid)
        return cid

    def remove_cell(self, cid: int):
        self._require_mutable()
        entry = self._cells[cid]
        if entry is None:
            raise MeshLogicError(f"Cell {cid} already removed")
        for tet in entry[1]:
            for v in tet:
                self._vertex_cells[v].discard(cid)
        self._cells[cid] = None

    def point(self, v: int) -> np.ndarray:
        return self._vertices[v]

    def is_boundary_vertex(self, v: int) -> bool:
        return self._boundary[v]

    def incident_cells(self, v: int) -> List[int]:
        return sorted(self._vertex_cells.get(v, ()))

    def cell_entry(self, cid: int) -> Tuple[str, List[Tuple[int, int, int, int]]]:
        entry = self._cells[cid]
        if entry is None:
            raise MeshLogicError(f"Cell {cid} was removed")
        return entry

    @property
    def n_live_cells(self) -> int:
        return sum(1 for c in self._cells if c is not None)

    @property
    def n_live_subtets(self) -> int:
        return sum(len(c[1]) for c in self._cells if c is not None)

    def _require_mutable(self):
        if self.finalized:
            raise MeshLogicError("PolyMesh is finalized and can no longer be modified")

    # -- finalized phase -------------------------------------------------------------

    def finalize(self) -> 'PolyMesh':
        """Number sub-tetrahedra, extract cell faces and pair them across cells"""
        self._require_mutable()
        self.vertices = np.array(self._vertices, dtype=float).reshape(-1, 3)
        self.boundary = np.array(self._boundary, dtype=bool)
        subtets = []
        cells = []
        for entry in self._cells:
            if entry is None:
                continue
            kind, tets = entry
            ids = np.arange(len(subtets), len(subtets) + len(tets))
            subtets.extend(tets)
            cells.append(PolyCell(kind, ids))
        self.subtets = np.array(subtets, dtype=int).reshape(-1, 4)
        self.cells = cells
        self.finalized = True
        self._build_faces()
        return self

    def _build_faces(self):
        shared: Dict[Tuple[int, int, int], List[Tuple[int, int]]] = defaultdict(list)
        for cid, cell in enumerate(self.cells):
            count: Dict[Tuple[int, int, int], List[Tuple[int, int]]] = defaultdict(list)
            for s in cell.subtets:
                tet = self.subtets[s]
                for j, loc in enumerate(LOCAL_FACES):
                    count[face_key(*tet[list(loc)])].append((s, j))
            faces, fsub, floc = [], [], []
            for key, uses in count.items():
                if len(uses) == 1:
                    s, j = uses[0]
                    faces.append(self.subtets[s][list(LOCAL_FACES[j])])
                    fsub.append(s)
                    floc.append(j)
                    shared[key].append((cid, len(faces) - 1))
                elif len(uses) > 2:
                    raise ConformityError(f"Triangle {key} used by {len(uses)} sub-tets of cell {cid}")
            cell.faces = np.array(faces, dtype=int).reshape(-1, 3)
            cell.face_subtet = np.array(fsub, dtype=int)
            cell.face_local = np.array(floc, dtype=int)
            cell.neighbors = np.full(len(faces), -(TAG_OTHER + 1), dtype=int)

        for key, uses in shared.items():
            if len(uses) == 2:
                (c0, f0), (c1, f1) = uses
                self.cells[c0].neighbors[f0] = c1
                self.cells[c1].neighbors[f1] = c0
            elif len(uses) == 1:
                c0, f0 = uses[0]
                self.cells[c0].neighbors[f0] = -(self._boundary_tag(key) + 1)
            else:
                raise ConformityError(f"Triangle {key} shared by {len(uses)} cells")

    def _boundary_tag(self, key: Tuple[int, int, int]) -> int:
        if self.bounds is None:
            return TAG_OTHER
        pts = self.vertices[list(key)]
        scale = max(abs(b) for b in self.bounds) + 1.0
        for axis in range(3):
            for side in range(2):
                plane = self.bounds[axis + 3 * side]
                if np.all(np.abs(pts[:, axis] - plane) <= 1e-10 * scale):
                    return 2 * axis + side
        return TAG_OTHER

    @property
    def n_cells(self) -> int:
        return len(self.cells) if self.finalized else self.n_live_cells

    @property
    def n_subtets(self) -> int:
        return len(self.subtets) if self.finalized else self.n_live_subtets

    def cell_vertices(self, cid: int) -> np.ndarray:
        return np.unique(self.subtets[self.cells[cid].subtets])

    def subtet_volumes(self) -> np.ndarray:
        p = self.vertices[self.subtets]
        return np.linalg.det(np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]], axis=1)) / 6.0

    def cell_volumes(self) -> np.ndarray:
        vol = self.subtet_volumes()
        return np.array([vol[c.subtets].sum() for c in self.cells])

    def diameters(self) -> np.ndarray:
        out = np.empty(len(self.cells))
        for cid in range(len(self.cells)):
            p = self.vertices[self.cell_vertices(cid)]
            diff = p[:, None, :] - p[None, :, :]
            out[cid] = np.sqrt(np.max(np.sum(diff * diff, axis=-1)))
        return out

    @property
    def h_max(self) -> float:
        return float(self.diameters().max())

    @property
    def h_min(self) -> float:
        return float(self.diameters().min())


def _is_center(pm: PolyMesh, v: int) -> bool:
    if pm.is_boundary_vertex(v):
        return False
    cells = pm.incident_cells(v)
    return bool(cells) and all(pm.cell_entry(c)[0] == 'tet' for c in cells)


def find_replacement_centers(mesh) -> List[int]:
    """Interior vertices whose incident elements are all tetrahedra, ascending by index"""
    pm = PolyMesh.from_tet_mesh(mesh) if isinstance(mesh, TetMesh) else mesh
    n = len(pm._vertices)
    return [v for v in range(n) if _is_center(pm, v)]


def canonical_diagonal(quad: Sequence[int]) -> FrozenSet[int]:
    """Quad corners in cyclic order -> diagonal through the smallest vertex index"""
    i = int(np.argmin(quad))
    return frozenset((int(quad[i]), int(quad[(i + 2) % 4])))


def _split_quad(quad: Sequence[int], diagonal: FrozenSet[int]) -> List[Tuple[int, int, int]]:
    for i in range(4):
        if frozenset((quad[i], quad[(i + 2) % 4])) == diagonal:
            p0, p1, p2, p3 = (quad[(i + k) % 4] for k in range(4))
            return [(p0, p1, p2), (p0, p2, p3)]
    raise MeshLogicError(f"Diagonal {set(diagonal)} does not belong to quad {tuple(quad)}")


def tetrahedrize_truncated(pm: PolyMesh, inner: Tuple[int, int, int], outer: Tuple[int, int, int],
                           registry: Optional[Dict[FrozenSet[int], FrozenSet[int]]] = None
                           ) -> List[Tuple[int, int, int, int]]:
    """Split a truncated tetrahedron into 8 tetrahedra around its barycenter

    Args:
        inner: split points (s_a, s_b, s_c) forming the triangle next to the center
        outer: original vertices (a, b, c); s_x lies on the edge towards x
        registry: quad vertex set -> chosen diagonal, shared with neighboring cells

    Returns:
        8 positively oriented sub-tets
    """
    registry = pm.diagonals if registry is None else registry
    sa, sb, sc = inner
    a, b, c = outer
    triangles = [(sa, sb, sc), (a, b, c)]
    for quad in ((sa, a, b, sb), (sb, b, c, sc), (sc, c, a, sa)):
        key = frozenset(quad)
        diag = canonical_diagonal(quad)
        known = registry.get(key)
        if known is None:
            registry[key] = diag
        elif known != diag:
            raise MeshLogicError(f"Registry holds diagonal {sorted(known)} for quad {sorted(key)}, expected {sorted(diag)}")
        triangles.extend(_split_quad(quad, diag))

    corners = [sa, sb, sc, a, b, c]
    apex_point = np.mean([pm.point(v) for v in corners], axis=0)
    apex = pm.add_vertex(apex_point)
    tets = []
    for x, y, z in triangles:
        vol = signed_volume(apex_point, pm.point(x), pm.point(y), pm.point(z))
        if vol < 0.0:
            y, z = z, y
            vol = -vol
        if not vol > 0.0:
            raise GeometryError(f"Degenerate octahedron sub-tet on face {(x, y, z)}")
        tets.append((apex, x, y, z))
    return tets


def tetrahedrize_central(pm: PolyMesh, faces: Sequence[Tuple[int, int, int]], v: int
                         ) -> List[Tuple[int, int, int, int]]:
    """Join each triangular face of the central polyhedron to its circumcenter v"""
    tets = []
    pv = pm.point(v)
    for x, y, z in faces:
        vol = signed_volume(pv, pm.point(x), pm.point(y), pm.point(z))
        if not vol > 0.0:
            raise GeometryError(f"Central sub-tet ({v}, {x}, {y}, {z}) has non-positive volume {vol:.3e}")
        tets.append((v, x, y, z))
    return tets


def lpr_replace(pm: PolyMesh, v: int) -> ReplacementReport:
    """Replace the n tetrahedra around v by n octahedra plus one central polyhedron"""
    if not _is_center(pm, v):
        raise MeshLogicError(f"Vertex {v} is not a replacement-center")
    cells_before = pm.n_live_cells
    incident = pm.incident_cells(v)
    tets = []
    for cid in incident:
        (tet,) = pm.cell_entry(cid)[1]
        # rotate so v comes first, keeping orientation (even permutation)
        k = tet.index(v)
        others = [tet[(k + i) % 4] for i in range(1, 4)]
        if k % 2 == 1:
            others[0], others[1] = others[1], others[0]
        tets.append((cid, others))

    pv = pm.point(v)
    neighbors = sorted({w for _, others in tets for w in others})
    lengths = {w: float(np.linalg.norm(pm.point(w) - pv)) for w in neighbors}
    d = 0.5 * min(lengths.values())
    split = {}
    for w in neighbors:
        split[w] = pm.add_vertex(pv + d * (pm.point(w) - pv) / lengths[w])

    central_faces = []
    new_cells = []
    for cid, (a, b, c) in tets:
        pm.remove_cell(cid)
        inner = (split[a], split[b], split[c])
        new_cells.append(tetrahedrize_truncated(pm, inner, (a, b, c)))
        central_faces.append(inner)
    for octa in new_cells:
        pm.add_cell('octahedron', octa)
    pm.add_cell('central', tetrahedrize_central(pm, central_faces, v))

    report = ReplacementReport(v, len(tets), d, cells_before, pm.n_live_cells)
    pm.replacements.append(report)
    logger.debug(f"LPR at vertex {v}: n={report.n}, d={d:.4g}")
    return report


def generate_poly_mesh(tm: TetMesh) -> PolyMesh:
    """Apply LPR at the head of the replacement list until it is empty"""
    pm = PolyMesh.from_tet_mesh(tm)
    queue = find_replacement_centers(pm)
    while queue:
        v = queue.pop(0)
        # earlier replacements disqualify the edge-connected neighbors
        if _is_center(pm, v):
            lpr_replace(pm, v)
    pm.finalize()

    m = len(pm.replacements)
    expected_cells = tm.n_tets + m
    expected_subtets = tm.n_tets + 8 * sum(r.n for r in pm.replacements)
    if pm.n_cells != expected_cells or pm.n_subtets != expected_subtets:
        raise MeshLogicError(
            f"Counting identities violated: N_e={pm.n_cells} (expected {expected_cells}), "
            f"N_t={pm.n_subtets} (expected {expected_subtets})")
    logger.info(f"✅ LPR mesh: {m} replacements, {pm.n_cells} cells, {pm.n_subtets} sub-tets")
    return pm


def generate_tet_cells(tm: TetMesh) -> PolyMesh:
    """The tetrahedral mesh itself, one cell per tet"""
    return PolyMesh.from_tet_mesh(tm).finalize()


def _agglomerate(tm: TetMesh, kind: str, groups: List[List[int]]) -> PolyMesh:
    pm = PolyMesh(tm.vertices, tm.boundary, tm.bounds, n_gamma=tm.n_tets)
    taken = np.zeros(tm.n_tets, dtype=bool)
    merged = 0
    for group in groups:
        if taken[group].any():
            continue
        taken[group] = True
        pm.add_cell(kind, [tuple(int(v) for v in tm.tets[t]) for t in group])
        merged += 1
    for t in np.flatnonzero(~taken):
        pm.add_cell('tet', [tuple(int(v) for v in tm.tets[t])])
    pm.finalize()
    logger.info(f"✅ {kind.upper()} mesh: {merged} agglomerates, {pm.n_cells} cells")
    return pm


def agglomerate_vt(tm: TetMesh) -> PolyMesh:
    """Merge the tetrahedra around each eligible interior vertex, greedily by vertex index"""
    groups = [sorted(tm.vertex_tets[v]) for v in range(tm.n_vertices)
              if not tm.boundary[v] and tm.vertex_tets[v]]
    return _agglomerate(tm, 'vt', groups)


def agglomerate_et(tm: TetMesh) -> PolyMesh:
    """Merge the tetrahedra around each interior edge, greedily by sorted edge key"""
    edge_tets: Dict[Tuple[int, int], List[int]] = defaultdict(list)
    for t, tet in enumerate(tm.tets):
        for i in range(4):
            for j in range(i + 1, 4):
                edge_tets[tuple(sorted((int(tet[i]), int(tet[j]))))].append(t)
    boundary_edges = set()
    for a, b, c in tm.boundary_faces():
        boundary_edges.update({(a, b), (a, c), (b, c)})
    groups = [sorted(edge_tets[e]) for e in sorted(edge_tets) if e not in boundary_edges]
    return _agglomerate(tm, 'et', groups)


@dataclass
class MeshStats:
    n_vertices: int
    n_cells: int
    n_subtets: int
    histogram: Dict[str, float]
    h_max: float
    h_min: float

    def lines(self) -> List[str]:
        hist = '  '.join(f"n_{k}={v:.2f}%" for k, v in self.histogram.items())
        return [
            f"|V| = {self.n_vertices}",
            f"N_e = {self.n_cells}",
            f"N_t = {self.n_subtets}",
            f"facets: {hist}",
            f"h_max = {self.h_max:.6g}",
            f"h_min = {self.h_min:.6g}",
        ]


def mesh_stats(pm: PolyMesh) -> MeshStats:
    """|V|, cell count and facet histogram in percent"""
    used = set()
    bins = {'4': 0, '6': 0, '8': 0, '10': 0, '>10': 0}
    for cell in pm.cells:
        used.update(cell.faces.ravel().tolist())
        nf = cell.n_faces
        bins['>10' if nf > 10 else str(nf)] += 1
    total = max(1, pm.n_cells)
    hist = {k: 100.0 * v / total for k, v in bins.items()}
    diam = pm.diameters()
    return MeshStats(len(used), pm.n_cells, pm.n_subtets, hist, float(diam.max()), float(diam.min()))


@dataclass
class CellGeometry:
    """Affine sub-tet maps x = x0 + J xi plus cell and face measures"""

    x0: np.ndarray
    J: np.ndarray
    detJ: np.ndarray
    Jinv: np.ndarray
    volume: np.ndarray
    h: np.ndarray
    face_area: List[np.ndarray]
    face_normal: List[np.ndarray]


def compute_geometry(pm: PolyMesh) -> CellGeometry:
    p = pm.vertices[pm.subtets]
    x0 = p[:, 0]
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]], axis=-1)
    detJ = np.linalg.det(J)
    bad = np.flatnonzero(~(detJ > 0.0))
    if len(bad):
        raise GeometryError(f"{len(bad)} sub-tets with |J| <= 0, first is {bad[0]} (|J|={detJ[bad[0]]:.3e})")
    Jinv = np.linalg.inv(J)
    volume = np.array([detJ[c.subtets].sum() / 6.0 for c in pm.cells])
    h = pm.diameters()

    areas, normals = [], []
    for cid, cell in enumerate(pm.cells):
        tri = pm.vertices[cell.faces]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norm = np.linalg.norm(cross, axis=1)
        n = cross / norm[:, None]
        centroid = p[cell.face_subtet].mean(axis=1)
        outward = np.sum(n * (tri.mean(axis=1) - centroid), axis=1)
        if np.any(outward <= 0.0):
            raise GeometryError(f"Inward face normal in cell {cid}")
        areas.append(0.5 * norm)
        normals.append(n)
    return CellGeometry(x0, J, detJ, Jinv, volume, h, areas, normals)


@dataclass
class Violation:
    kind: str
    entity: str
    message: str


def validate_mesh(pm: PolyMesh, rtol: float = 1e-12) -> List[Violation]:
    """Conformity, positivity, volume closure and watertightness; never raises"""
    out: List[Violation] = []
    try:
        vol = pm.subtet_volumes()
        for s in np.flatnonzero(~(vol > 0.0)):
            out.append(Violation('positivity', f"subtet {s}", f"signed volume {vol[s]:.3e}"))

        uses: Dict[Tuple[int, int, int], int] = defaultdict(int)
        for tet in pm.subtets:
            for loc in LOCAL_FACES:
                uses[face_key(*tet[list(loc)])] += 1
        surface = []
        for key, count in uses.items():
            if count > 2:
                out.append(Violation('conformity', f"triangle {key}", f"shared by {count} sub-tets"))
            elif count == 1:
                surface.append(key)

        edge_count: Dict[Tuple[int, int], int] = defaultdict(int)
        for a, b, c in surface:
            for e in ((a, b), (a, c), (b, c)):
                edge_count[e] += 1
        for e, count in edge_count.items():
            if count != 2:
                out.append(Violation('watertight', f"edge {e}", f"bounds {count} boundary triangles"))
        if pm.bounds is not None:
            for key in surface:
                if pm._boundary_tag(key) == TAG_OTHER:
                    out.append(Violation('watertight', f"triangle {key}", "unmatched triangle inside the box"))

            expected = box_volume(pm.bounds)
            total = float(np.sum(np.abs(vol)))
            if abs(total - expected) > rtol * expected:
                out.append(Violation('volume', 'mesh', f"sub-tet volume {total:.15g} vs box {expected:.15g}"))
    except Exception as e:
        logger.error(f"Error validating mesh: {e}")
        out.append(Violation('internal', 'mesh', str(e)))
    if out:
        logger.warning(f"⚠️ Mesh validation found {len(out)} violations")
    return out


# -- file I/O ----------------------------------------------------------------------------

def read_tet_mesh(path: str, bounds: Optional[Box] = None) -> TetMesh:
    """Plain text: header 'V T', V lines 'x y z [flag]', T lines 'i j k l' (0-based)"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            lines = [ln.split() for ln in f if ln.strip() and not ln.lstrip().startswith('#')]
    except OSError as e:
        raise ConfigurationError(f"Cannot read tet mesh {path}: {e}")
    try:
        nv, nt = int(lines[0][0]), int(lines[0][1])
        vrows = lines[1:1 + nv]
        trows = lines[1 + nv:1 + nv + nt]
        vertices = np.array([[float(x) for x in row[:3]] for row in vrows])
        flags = np.array([len(row) > 3 and int(row[3]) != 0 for row in vrows], dtype=bool)
        tets = np.array([[int(x) for x in row[:4]] for row in trows], dtype=int)
    except (IndexError, ValueError) as e:
        raise ConfigurationError(f"Malformed tet mesh {path}: {e}")
    if len(vertices) != nv or len(tets) != nt:
        raise ConfigurationError(f"Tet mesh {path} declares {nv} vertices / {nt} tets, found {len(vertices)} / {len(tets)}")
    for t in range(nt):
        if signed_volume(*vertices[tets[t]]) < 0.0:
            tets[t, [1, 2]] = tets[t, [2, 1]]
    return TetMesh(vertices, tets, flags, bounds)


def write_tet_mesh(tm: TetMesh, path: str):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(f"{tm.n_vertices} {tm.n_tets}\n")
        for x, flag in zip(tm.vertices, tm.boundary):
            f.write(f"{x[0]:.17g} {x[1]:.17g} {x[2]:.17g} {int(flag)}\n")
        for tet in tm.tets:
            f.write(' '.join(str(int(v)) for v in tet) + '\n')


def write_poly_mesh(pm: PolyMesh, path: str):
    """Sections VERTICES, SUBTETS, CELLS; each cell line lists its sub-tets, then its
    boundary triangles with the neighbor id (negative: -(tag+1))"""
    try:
        with open(path, 'w', encoding='utf-8') as f:
            f.write("POLYMESH 1\n")
            bounds = 'NONE' if pm.bounds is None else ' '.join(f"{b:.17g}" for b in pm.bounds)
            f.write(f"BOUNDS {bounds}\n")
            f.write(f"N_GAMMA {pm.n_gamma}\n")
            f.write(f"REPLACEMENTS {len(pm.replacements)}\n")
            for r in pm.replacements:
                f.write(f"{r.vertex} {r.n} {r.d:.17g}\n")
            f.write(f"VERTICES {len(pm.vertices)}\n")
            for x, flag in zip(pm.vertices, pm.boundary):
                f.write(f"{x[0]:.17g} {x[1]:.17g} {x[2]:.17g} {int(flag)}\n")
            f.write(f"SUBTETS {len(pm.subtets)}\n")
            for tet in pm.subtets:
                f.write(' '.join(str(int(v)) for v in tet) + '\n')
            f.write(f"CELLS {len(pm.cells)}\n")
            for cell in pm.cells:
                parts = [cell.kind, str(len(cell.subtets))] + [str(int(s)) for s in cell.subtets]
                parts.append(str(cell.n_faces))
                for tri, nb in zip(cell.faces, cell.neighbors):
                    parts.extend(str(int(v)) for v in tri)
                    parts.append(str(int(nb)))
                f.write(' '.join(parts) + '\n')
    except OSError as e:
        raise ConfigurationError(f"Cannot write poly mesh {path}: {e}")
    logger.info(f"Poly mesh written to {path}")


def read_poly_mesh(path: str) -> PolyMesh:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            tokens = [ln.split() for ln in f if ln.strip()]
    except OSError as e:
        raise ConfigurationError(f"Cannot read poly mesh {path}: {e}")
    try:
        it = iter(tokens)
        header = next(it)
        if header[0] != 'POLYMESH':
            raise ConfigurationError(f"{path} is not a poly mesh file")
        row = next(it)
        bounds = None if row[1] == 'NONE' else tuple(float(x) for x in row[1:7])
        n_gamma = int(next(it)[1])
        reports = []
        for _ in range(int(next(it)[1])):
            r = next(it)
            reports.append(ReplacementReport(int(r[0]), int(r[1]), float(r[2]), 0, 0))
        nv = int(next(it)[1])
        vrows = [next(it) for _ in range(nv)]
        vertices = np.array([[float(x) for x in r[:3]] for r in vrows]).reshape(-1, 3)
        flags = [int(r[3]) != 0 for r in vrows]
        ns = int(next(it)[1])
        subtets = [tuple(int(x) for x in next(it)) for _ in range(ns)]
        nc = int(next(it)[1])
        pm = PolyMesh(vertices, flags, bounds, n_gamma)
        for _ in range(nc):
            r = next(it)
            k = int(r[1])
            pm.add_cell(r[0], [subtets[int(s)] for s in r[2:2 + k]])
    except (StopIteration, IndexError, ValueError) as e:
        raise ConfigurationError(f"Malformed poly mesh {path}: {e}")
    pm.replacements = reports
    return pm.finalize()


GENERATORS = {
    'lpr': generate_poly_mesh,
    'vt': agglomerate_vt,
    'et': agglomerate_et,
    'tets': generate_tet_cells,
}


def apply_generator(tm: TetMesh, generator: str = 'lpr') -> PolyMesh:
    if generator not in GENERATORS:
        raise ConfigurationError(f"Unknown generator '{generator}', expected one of {tuple(GENERATORS)}")
    return GENERATORS[generator](tm)


def build_mesh(bounds: Sequence[float], h: float, generator: str = 'lpr', jitter: float = 0.0,
               seed: Optional[int] = None) -> PolyMesh:
    """Box tet mesh followed by the chosen polyhedral generator"""
    return apply_generator(build_box_tet_mesh(bounds, h, jitter, seed), generator)
