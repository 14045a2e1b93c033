#!/usr/bin/env python3
"""
AFE Module for LPR-ADER
Handles agglomerated DOF numbering per polyhedral cell and the element-wise matrices M_i, K1_i^-1

A node of a sub-tet is identified topologically by the sorted tuple of
(global vertex, barycentric index) pairs with non-zero index. Vertex nodes, edge nodes and
face nodes shared by neighboring sub-tets therefore get the same key without any
floating point comparison.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import cho_factor, inv

from basis import ReferenceBasis, UniversalMatrices
from errors import ConformityError, SetupError
from mesh import CellGeometry, PolyMesh

logger = logging.getLogger('LPR-ADER.AFE')

NodeKey = Tuple[Tuple[int, int], ...]


def node_key(tet: np.ndarray, alpha: np.ndarray) -> NodeKey:
    return tuple(sorted((int(g), int(a)) for g, a in zip(tet, alpha) if a > 0))


@dataclass
class CellDofMap:
    """Union without repetition of the sub-tet nodes of every cell

    Attributes:
        n_dofs: N_i per cell
        offsets: first global DOF of each cell, length n_cells + 1
        l2c: (n_subtets, Np) sub-tet local node -> cell DOF
        l2g: (n_subtets, Np) sub-tet local node -> global DOF (offsets[cell] + l2c)
        coords: (n_global_dofs, 3) physical node positions
        subtet_cell: owning cell of every sub-tet
        keys: per cell, node key -> cell DOF
    """

    degree: int
    n_dofs: np.ndarray
    offsets: np.ndarray
    l2c: np.ndarray
    l2g: np.ndarray
    coords: np.ndarray
    subtet_cell: np.ndarray
    keys: List[Dict[NodeKey, int]]

    @property
    def total(self) -> int:
        return int(self.offsets[-1])

    def cell_slice(self, cid: int) -> slice:
        return slice(int(self.offsets[cid]), int(self.offsets[cid + 1]))


def build_cell_dof_map(pm: PolyMesh, basis: ReferenceBasis) -> CellDofMap:
    N = basis.degree
    Np = basis.n_nodes
    alpha = basis.alpha
    ref_nodes = basis.nodes
    nsub = pm.n_subtets

    l2c = np.empty((nsub, Np), dtype=int)
    subtet_cell = np.empty(nsub, dtype=int)
    n_dofs = np.empty(pm.n_cells, dtype=int)
    keys: List[Dict[NodeKey, int]] = []
    coords = []
    h = pm.diameters()

    for cid, cell in enumerate(pm.cells):
        table: Dict[NodeKey, int] = {}
        cell_coords = []
        for s in cell.subtets:
            tet = pm.subtets[s]
            subtet_cell[s] = cid
            X = pm.vertices[tet]
            mapped = X[0] + ref_nodes @ np.stack([X[1] - X[0], X[2] - X[0], X[3] - X[0]], axis=1).T
            for j in range(Np):
                key = node_key(tet, alpha[j])
                dof = table.get(key)
                if dof is None:
                    dof = len(table)
                    table[key] = dof
                    cell_coords.append(sum((a / N) * pm.vertices[g] for g, a in key))
                if np.max(np.abs(mapped[j] - cell_coords[dof])) > 1e-12 * h[cid]:
                    raise ConformityError(f"Node {key} of sub-tet {s} in cell {cid} does not match its DOF position")
                l2c[s, j] = dof
        keys.append(table)
        n_dofs[cid] = len(table)
        coords.extend(cell_coords)

    offsets = np.concatenate([[0], np.cumsum(n_dofs)])
    l2g = l2c + offsets[subtet_cell][:, None]
    logger.debug(f"DOF map N={N}: {offsets[-1]} DOFs over {pm.n_cells} cells")
    return CellDofMap(N, n_dofs, offsets, l2c, l2g, np.array(coords).reshape(-1, 3), subtet_cell, keys)


@dataclass
class CellMatrices:
    """Element-wise matrices of one cell

    Attributes:
        mass: M_i, (N_i, N_i)
        mass_factor: Cholesky factor of M_i
        k1_inv: K1_i^-1, (N_i^st, N_i^st)
        f0: sum_k |J_ik| scatter(F0), (N_i^st, N_i)
        l2c: (n_sub, Np) scatter table into cell DOFs
        st_l2c: (n_sub, T) scatter table into space-time cell DOFs, index q*N_i + dof
        subtets: global sub-tet ids of the cell
    """

    cell: int
    mass: np.ndarray
    mass_factor: Tuple[np.ndarray, bool]
    k1_inv: np.ndarray
    f0: np.ndarray
    l2c: np.ndarray
    st_l2c: np.ndarray
    subtets: np.ndarray

    @property
    def n_dofs(self) -> int:
        return self.mass.shape[0]


def space_time_l2c(l2c: np.ndarray, n_dofs: int, n_time: int) -> np.ndarray:
    return np.concatenate([q * n_dofs + l2c for q in range(n_time)], axis=1)


def _scatter(target: np.ndarray, rows: np.ndarray, cols: np.ndarray, weights: np.ndarray, ref: np.ndarray):
    for k in range(len(weights)):
        target[np.ix_(rows[k], cols[k])] += weights[k] * ref


def assemble_cell_mass(cid: int, pm: PolyMesh, dofs: CellDofMap, geom: CellGeometry,
                       U: UniversalMatrices) -> np.ndarray:
    """M_i = sum_k |J_ik| scatter(M_hat)"""
    subs = pm.cells[cid].subtets
    n = int(dofs.n_dofs[cid])
    M = np.zeros((n, n))
    l2c = dofs.l2c[subs]
    _scatter(M, l2c, l2c, geom.detJ[subs], U.mass)
    return M


def assemble_k1(cid: int, pm: PolyMesh, dofs: CellDofMap, geom: CellGeometry,
                U: UniversalMatrices) -> np.ndarray:
    subs = pm.cells[cid].subtets
    n = int(dofs.n_dofs[cid])
    st = space_time_l2c(dofs.l2c[subs], n, U.n_time)
    K1 = np.zeros((n * U.n_time, n * U.n_time))
    _scatter(K1, st, st, geom.detJ[subs], U.k1)
    return K1


def assemble_k1_and_invert(cid: int, pm: PolyMesh, dofs: CellDofMap, geom: CellGeometry,
                           U: UniversalMatrices) -> np.ndarray:
    """K1_i^-1 by dense LU, checked against the identity"""
    K1 = assemble_k1(cid, pm, dofs, geom, U)
    try:
        K1_inv = inv(K1)
    except np.linalg.LinAlgError as e:
        raise SetupError(f"K1 of cell {cid} is singular: {e}")
    residual = np.max(np.abs(K1 @ K1_inv - np.eye(len(K1))))
    if not residual < 1e-10:
        raise SetupError(f"K1 inversion residual {residual:.3e} in cell {cid}")
    return K1_inv


def build_cell_matrices(cid: int, pm: PolyMesh, dofs: CellDofMap, geom: CellGeometry,
                        U: UniversalMatrices) -> CellMatrices:
    subs = pm.cells[cid].subtets
    n = int(dofs.n_dofs[cid])
    l2c = dofs.l2c[subs]
    st = space_time_l2c(l2c, n, U.n_time)

    M = assemble_cell_mass(cid, pm, dofs, geom, U)
    try:
        factor = cho_factor(M)
    except np.linalg.LinAlgError as e:
        raise SetupError(f"Mass matrix of cell {cid} is not SPD: {e}")
    f0 = np.zeros((n * U.n_time, n))
    _scatter(f0, st, l2c, geom.detJ[subs], U.f0)
    K1_inv = assemble_k1_and_invert(cid, pm, dofs, geom, U)
    return CellMatrices(cid, M, factor, K1_inv, f0, l2c, st, subs)


def build_all_cell_matrices(pm: PolyMesh, dofs: CellDofMap, geom: CellGeometry, U: UniversalMatrices,
                            threads: int = 1) -> List[CellMatrices]:
    """Per-cell setup, optionally on a thread pool; result order follows cell ids"""
    if threads <= 1:
        mats = [build_cell_matrices(c, pm, dofs, geom, U) for c in range(pm.n_cells)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            mats = list(pool.map(lambda c: build_cell_matrices(c, pm, dofs, geom, U), range(pm.n_cells)))
    logger.info(f"✅ Cell matrices ready: {pm.n_cells} cells, N={U.degree}, {dofs.total} DOFs")
    return mats


@dataclass
class FaceDofPermutation:
    """Face node pairings, one row per face, (N+1)(N+2)/2 nodes per row

    Internal faces (owner < neighbor):
        owner, neighbor: cell ids; owner_face, neighbor_face: face index in each cell
        owner_sub, neighbor_sub: global sub-tet carrying the face; owner_local, neighbor_local: reference face
        owner_nodes: reference node ids in face_nodes[owner_local] order
        neighbor_nodes: neighbor reference node ids matched to owner_nodes
        owner_dofs, neighbor_dofs: global DOFs matched the same way
        perm: neighbor native face-node position k holds owner node perm[k]
    Boundary faces:
        b_cell, b_face, b_sub, b_local, b_nodes, b_dofs, b_tag
    """

    owner: np.ndarray
    neighbor: np.ndarray
    owner_face: np.ndarray
    neighbor_face: np.ndarray
    owner_sub: np.ndarray
    neighbor_sub: np.ndarray
    owner_local: np.ndarray
    neighbor_local: np.ndarray
    owner_nodes: np.ndarray
    neighbor_nodes: np.ndarray
    owner_dofs: np.ndarray
    neighbor_dofs: np.ndarray
    perm: np.ndarray
    b_cell: np.ndarray
    b_face: np.ndarray
    b_sub: np.ndarray
    b_local: np.ndarray
    b_nodes: np.ndarray
    b_dofs: np.ndarray
    b_tag: np.ndarray

    @property
    def n_internal(self) -> int:
        return len(self.owner)

    @property
    def n_boundary(self) -> int:
        return len(self.b_cell)


def _face_node_keys(pm: PolyMesh, basis: ReferenceBasis, sub: int, local: int) -> List[NodeKey]:
    tet = pm.subtets[sub]
    return [node_key(tet, basis.alpha[j]) for j in basis.face_nodes[local]]


def build_face_maps(pm: PolyMesh, dofs: CellDofMap, basis: ReferenceBasis) -> FaceDofPermutation:
    """Pair the face DOFs of every inter-cell triangle through their node keys"""
    fn = basis.face_nodes
    internal = []
    boundary = []
    for cid, cell in enumerate(pm.cells):
        for f, nb in enumerate(cell.neighbors):
            if nb < 0:
                boundary.append((cid, f, -nb - 1))
            elif cid < nb:
                internal.append((cid, f, int(nb)))

    cols = {k: [] for k in ('owner', 'neighbor', 'owner_face', 'neighbor_face', 'owner_sub', 'neighbor_sub',
                            'owner_local', 'neighbor_local', 'owner_nodes', 'neighbor_nodes',
                            'owner_dofs', 'neighbor_dofs', 'perm')}
    for cid, f, nb in internal:
        cell = pm.cells[cid]
        matches = np.flatnonzero(pm.cells[nb].neighbors == cid)
        key_o = tuple(sorted(cell.faces[f]))
        g = next((int(m) for m in matches if tuple(sorted(pm.cells[nb].faces[m])) == key_o), None)
        if g is None:
            raise ConformityError(f"Face {key_o} of cell {cid} has no counterpart in cell {nb}")
        so, jo = int(cell.face_subtet[f]), int(cell.face_local[f])
        sn, jn = int(pm.cells[nb].face_subtet[g]), int(pm.cells[nb].face_local[g])
        keys_o = _face_node_keys(pm, basis, so, jo)
        keys_n = _face_node_keys(pm, basis, sn, jn)
        where_n = {k: i for i, k in enumerate(keys_n)}
        try:
            match = [where_n[k] for k in keys_o]
        except KeyError as e:
            raise ConformityError(f"Face node {e.args[0]} of cell {cid} missing on neighbor {nb}")
        match = np.array(match, dtype=int)
        perm = np.empty_like(match)
        perm[match] = np.arange(len(match))
        cols['owner'].append(cid)
        cols['neighbor'].append(nb)
        cols['owner_face'].append(f)
        cols['neighbor_face'].append(g)
        cols['owner_sub'].append(so)
        cols['neighbor_sub'].append(sn)
        cols['owner_local'].append(jo)
        cols['neighbor_local'].append(jn)
        cols['owner_nodes'].append(fn[jo])
        cols['neighbor_nodes'].append(fn[jn][match])
        cols['owner_dofs'].append(dofs.l2g[so, fn[jo]])
        cols['neighbor_dofs'].append(dofs.l2g[sn, fn[jn][match]])
        cols['perm'].append(perm)

    nf = len(fn[0])
    arrays = {}
    for k, v in cols.items():
        if k in ('owner_nodes', 'neighbor_nodes', 'owner_dofs', 'neighbor_dofs', 'perm'):
            arrays[k] = np.array(v, dtype=int).reshape(-1, nf)
        else:
            arrays[k] = np.array(v, dtype=int)

    b_cell = np.array([b[0] for b in boundary], dtype=int)
    b_face = np.array([b[1] for b in boundary], dtype=int)
    b_sub = np.array([pm.cells[c].face_subtet[f] for c, f, _ in boundary], dtype=int)
    b_local = np.array([pm.cells[c].face_local[f] for c, f, _ in boundary], dtype=int)
    b_nodes = np.array([fn[j] for j in b_local], dtype=int).reshape(-1, nf)
    b_dofs = dofs.l2g[b_sub[:, None], b_nodes] if len(b_sub) else np.zeros((0, nf), dtype=int)
    b_tag = np.array([b[2] for b in boundary], dtype=int)

    fmap = FaceDofPermutation(**arrays, b_cell=b_cell, b_face=b_face, b_sub=b_sub, b_local=b_local,
                              b_nodes=b_nodes, b_dofs=b_dofs, b_tag=b_tag)
    check_face_coincidence(fmap, dofs, pm)
    return fmap


def check_face_coincidence(fmap: FaceDofPermutation, dofs: CellDofMap, pm: PolyMesh,
                           h: Optional[np.ndarray] = None) -> float:
    """Largest distance between paired face DOFs; must stay below 1e-12 h"""
    if fmap.n_internal == 0:
        return 0.0
    h = pm.diameters() if h is None else h
    dist = np.linalg.norm(dofs.coords[fmap.owner_dofs] - dofs.coords[fmap.neighbor_dofs], axis=-1)
    worst = np.max(dist, axis=1)
    bad = np.flatnonzero(worst > 1e-12 * h[fmap.owner])
    if len(bad):
        f = bad[0]
        raise ConformityError(f"Face DOFs between cells {fmap.owner[f]} and {fmap.neighbor[f]} are {worst[f]:.3e} apart")
    return float(worst.max())
