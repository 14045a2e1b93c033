#!/usr/bin/env python3
"""
Basis Module for LPR-ADER
Handles nodal Lagrange bases on the reference tetrahedron, space-time tensor bases,
setup-time quadrature and the universal reference-element matrices

Reference tetrahedron: vertices (0,0,0), (1,0,0), (0,1,0), (0,0,1) with barycentric
coordinates l1 = 1-r-s-t, l2 = r, l3 = s, l4 = t. Local face j is the face opposite
local vertex j, i.e. the face on which l_{j+1} vanishes.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil, factorial
from typing import Dict, List, Tuple

import numpy as np

from errors import ConfigurationError, SetupError

logger = logging.getLogger('LPR-ADER.Basis')

_T = Fraction(1, 3)
_H = Fraction(1, 2)

# Node listings in their published order (x_1 ... x_Np)
_NODES = {
    1: [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)],
    2: [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1),
        (_H, 0, 0), (_H, _H, 0), (0, _H, 0),
        (0, 0, _H), (_H, 0, _H), (0, _H, _H)],
    3: [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1),
        (_T, 0, 0), (2 * _T, 0, 0),
        (2 * _T, _T, 0), (_T, 2 * _T, 0),
        (0, 2 * _T, 0), (0, _T, 0),
        (0, 0, _T), (0, 0, 2 * _T),
        (_T, 0, 2 * _T), (2 * _T, 0, _T),
        (0, _T, 2 * _T), (0, 2 * _T, _T),
        (_T, _T, 0), (_T, 0, _T),
        (0, _T, _T), (_T, _T, _T)],
}

# d(l1, l2, l3, l4)/d(r, s, t)
_DLAMBDA = np.array([[-1.0, -1.0, -1.0],
                     [1.0, 0.0, 0.0],
                     [0.0, 1.0, 0.0],
                     [0.0, 0.0, 1.0]])

REFERENCE_VERTICES = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


def _check_degree(N: int):
    if N not in _NODES:
        raise ConfigurationError(f"Unsupported basis degree N={N}, available: {sorted(_NODES)}")


def lagrange_nodes(N: int) -> np.ndarray:
    """Interpolation nodes of degree N, (Np, 3), in the published ordering"""
    _check_degree(N)
    return np.array([[float(c) for c in node] for node in _NODES[N]])


def node_count(N: int) -> int:
    return (N + 1) * (N + 2) * (N + 3) // 6


def barycentric(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    lam = np.empty(points.shape[:-1] + (4,))
    lam[..., 0] = 1.0 - points.sum(axis=-1)
    lam[..., 1:] = points
    return lam


def multi_indices(N: int) -> np.ndarray:
    """Integer barycentric index alpha = N * lambda(x_j) of every node, (Np, 4)"""
    _check_degree(N)
    idx = []
    for node in _NODES[N]:
        r, s, t = (Fraction(c) for c in node)
        alpha = [N * (1 - r - s - t), N * r, N * s, N * t]
        assert all(a.denominator == 1 for a in alpha)
        idx.append([int(a) for a in alpha])
    return np.array(idx, dtype=int)


def _factor(x: np.ndarray, a: int, N: int) -> Tuple[np.ndarray, np.ndarray]:
    """prod_{k<a} (N x - k)/(k + 1) and its derivative in x"""
    val = np.ones_like(x)
    der = np.zeros_like(x)
    for k in range(a):
        t = (N * x - k) / (k + 1)
        der = der * t + val * (N / (k + 1))
        val = val * t
    return val, der


def eval_basis(N: int, points) -> np.ndarray:
    """phi_j at points (..., 3) -> (..., Np)

    phi_j = prod_i prod_{k < alpha_i} (N l_i - k)/(k + 1), which is the equispaced simplex
    Lagrange polynomial attached to node x_j; e.g. N=2 gives l1(2 l1 - 1) and 4 l1 l2.
    """
    alpha = multi_indices(N)
    lam = barycentric(points)
    out = np.ones(lam.shape[:-1] + (len(alpha),))
    for j, a in enumerate(alpha):
        for i in range(4):
            if a[i]:
                out[..., j] *= _factor(lam[..., i], a[i], N)[0]
    return out


def eval_grad_basis(N: int, points) -> np.ndarray:
    """d phi_j / d(r, s, t) at points (..., 3) -> (..., Np, 3)"""
    alpha = multi_indices(N)
    lam = barycentric(points)
    grads = np.zeros(lam.shape[:-1] + (len(alpha), 3))
    for j, a in enumerate(alpha):
        vals = []
        ders = []
        for i in range(4):
            v, d = _factor(lam[..., i], a[i], N)
            vals.append(v)
            ders.append(d)
        for i in range(4):
            if not a[i]:
                continue
            dphi_dli = ders[i]
            for m in range(4):
                if m != i:
                    dphi_dli = dphi_dli * vals[m]
            grads[..., j, :] += dphi_dli[..., None] * _DLAMBDA[i]
    return grads


@dataclass(frozen=True)
class QuadratureRule:
    domain: str
    order: int
    points: np.ndarray
    weights: np.ndarray


_MEASURE = {'interval': 1.0, 'triangle': 0.5, 'tet': 1.0 / 6.0}
MAX_QUADRATURE_ORDER = 20


def _gauss01(n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _exact_monomial(domain: str, exps: Tuple[int, ...]) -> float:
    # int r^i s^j t^k over the unit simplex = i! j! k! / (i + j + k + dim)!
    dim = len(exps)
    num = 1
    for e in exps:
        num *= factorial(e)
    return num / factorial(sum(exps) + dim)


@lru_cache(maxsize=None)
def quadrature(domain: str, order: int) -> QuadratureRule:
    """Collapsed Gauss-Legendre rule exact for polynomials of total degree <= order"""
    if domain not in _MEASURE:
        raise ConfigurationError(f"Unknown quadrature domain '{domain}'")
    if order < 0 or order > MAX_QUADRATURE_ORDER:
        raise ConfigurationError(f"Unsupported quadrature order {order} (0..{MAX_QUADRATURE_ORDER})")

    # collapsing adds up to two powers of (1-a) to the integrand
    n = max(1, ceil((order + 3) / 2))
    x, w = _gauss01(n)
    if domain == 'interval':
        pts = x[:, None]
        wts = w
    elif domain == 'triangle':
        a, b = np.meshgrid(x, x, indexing='ij')
        wa, wb = np.meshgrid(w, w, indexing='ij')
        pts = np.stack([a, b * (1.0 - a)], axis=-1).reshape(-1, 2)
        wts = (wa * wb * (1.0 - a)).ravel()
    else:
        a, b, c = np.meshgrid(x, x, x, indexing='ij')
        wa, wb, wc = np.meshgrid(w, w, w, indexing='ij')
        pts = np.stack([a, b * (1.0 - a), c * (1.0 - a) * (1.0 - b)], axis=-1).reshape(-1, 3)
        wts = (wa * wb * wc * (1.0 - a) ** 2 * (1.0 - b)).ravel()

    dim = pts.shape[1]
    for total in range(order + 1):
        for exps in _compositions(total, dim):
            approx = float(np.sum(wts * np.prod(pts ** np.array(exps), axis=1)))
            exact = _exact_monomial(domain, exps)
            if abs(approx - exact) > 1e-13 * max(1.0, exact) + 1e-15:
                raise SetupError(f"Quadrature {domain}/{order} not exact on monomial {exps}: {approx} vs {exact}")

    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(domain, order, pts, wts)


def _compositions(total: int, parts: int) -> List[Tuple[int, ...]]:
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return out


@dataclass(frozen=True)
class ReferenceBasis:
    """Degree-N nodal basis with its node layout and face-node index sets"""

    degree: int
    nodes: np.ndarray
    alpha: np.ndarray
    face_nodes: Tuple[np.ndarray, ...]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def eval(self, points) -> np.ndarray:
        return eval_basis(self.degree, points)

    def eval_grad(self, points) -> np.ndarray:
        return eval_grad_basis(self.degree, points)


@lru_cache(maxsize=None)
def reference_basis(N: int) -> ReferenceBasis:
    alpha = multi_indices(N)
    faces = tuple(np.flatnonzero(alpha[:, j] == 0) for j in range(4))
    return ReferenceBasis(N, lagrange_nodes(N), alpha, faces)


def lagrange_1d(nodes: np.ndarray, x) -> Tuple[np.ndarray, np.ndarray]:
    """1D Lagrange polynomials through nodes and their derivatives at x -> (..., n)"""
    x = np.asarray(x, dtype=float)
    n = len(nodes)
    vals = np.ones(x.shape + (n,))
    ders = np.zeros(x.shape + (n,))
    for q in range(n):
        for r in range(n):
            if r == q:
                continue
            t = (x - nodes[r]) / (nodes[q] - nodes[r])
            ders[..., q] = ders[..., q] * t + vals[..., q] / (nodes[q] - nodes[r])
            vals[..., q] = vals[..., q] * t
    return vals, ders


@dataclass(frozen=True)
class SpaceTimeBasis:
    """theta_{q*Np + j}(xi, tau) = phi_j(xi) psi_q(tau), psi on N+1 Gauss-Legendre points of [0,1]"""

    spatial: ReferenceBasis
    time_nodes: np.ndarray
    time_weights: np.ndarray

    @property
    def n_time(self) -> int:
        return len(self.time_nodes)

    @property
    def n_dofs(self) -> int:
        return self.spatial.n_nodes * self.n_time

    def eval(self, xi, tau) -> np.ndarray:
        phi = self.spatial.eval(xi)
        psi, _ = lagrange_1d(self.time_nodes, tau)
        return (psi[..., :, None] * phi[..., None, :]).reshape(phi.shape[:-1] + (-1,))

    def eval_grad(self, xi, tau) -> np.ndarray:
        """(d/dxi, d/deta, d/dzeta, d/dtau) of every theta -> (..., T, 4)"""
        phi = self.spatial.eval(xi)
        dphi = self.spatial.eval_grad(xi)
        psi, dpsi = lagrange_1d(self.time_nodes, tau)
        space = psi[..., :, None, None] * dphi[..., None, :, :]
        time = (dpsi[..., :, None] * phi[..., None, :])[..., None]
        full = np.concatenate([space, time], axis=-1)
        return full.reshape(phi.shape[:-1] + (-1, 4))


@lru_cache(maxsize=None)
def space_time_basis(N: int) -> SpaceTimeBasis:
    nodes, weights = _gauss01(N + 1)
    return SpaceTimeBasis(reference_basis(N), nodes, weights)


@dataclass(frozen=True)
class UniversalMatrices:
    """Reference-element matrices shared by every sub-tetrahedron

    Attributes:
        mass: M[m, l] = int phi_m phi_l over the reference tetrahedron
        deriv: V[d][m, l] = int dphi_m/dxi_d phi_l (corrector volume term)
        stiff_space: S[d][m, l] = int phi_m dphi_l/dxi_d
        stiff: K[d] = space-time int theta_k dtheta_l/dxi_d
        k1: reference part of K1, int theta theta at tau=1 minus int dtheta/dtau theta
        f0: F0[k, m] = int theta_k(xi, 0) phi_m
        t_tau: time-averaging weights per space-time node
        face_nodes: local node indices on each reference face
        face_mass: Z[j] restricted to face_nodes[j], scaled so that area * Z is the physical face integral
        node_grad: D[j, l, d] = dphi_l/dxi_d at node j
    """

    degree: int
    n_nodes: int
    n_time: int
    mass: np.ndarray
    deriv: np.ndarray
    stiff_space: np.ndarray
    stiff: np.ndarray
    k1: np.ndarray
    f0: np.ndarray
    t_tau: np.ndarray
    face_nodes: Tuple[np.ndarray, ...]
    face_mass: Tuple[np.ndarray, ...]
    node_grad: np.ndarray
    time_weights: np.ndarray

    @property
    def n_dofs(self) -> int:
        return self.n_nodes * self.n_time


def _face_rule(face: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Points of reference face `face` (opposite local vertex) and weights summing to 1/2"""
    tri = quadrature('triangle', order)
    corners = [REFERENCE_VERTICES[v] for v in range(4) if v != face]
    a, b, c = corners
    pts = a + tri.points[:, :1] * (b - a) + tri.points[:, 1:2] * (c - a)
    return pts, tri.weights


@lru_cache(maxsize=None)
def assemble_universal_matrices(N: int) -> UniversalMatrices:
    """All reference matrices of degree N, computed once by quadrature"""
    basis = reference_basis(N)
    st = space_time_basis(N)
    Np = basis.n_nodes
    nt = st.n_time

    rule = quadrature('tet', 2 * N + 2)
    phi = basis.eval(rule.points)                  # (nq, Np)
    dphi = basis.eval_grad(rule.points)            # (nq, Np, 3)
    w = rule.weights

    mass = np.einsum('q,qm,ql->ml', w, phi, phi)
    deriv = np.einsum('q,qmd,ql->dml', w, dphi, phi)
    stiff_space = np.einsum('q,qm,qld->dml', w, phi, dphi)

    line = quadrature('interval', 2 * N + 2)
    psi, dpsi = lagrange_1d(st.time_nodes, line.points[:, 0])
    tmass = np.einsum('q,qa,qb->ab', line.weights, psi, psi)
    tderiv = np.einsum('q,qa,qb->ab', line.weights, dpsi, psi)
    psi1, _ = lagrange_1d(st.time_nodes, 1.0)
    psi0, _ = lagrange_1d(st.time_nodes, 0.0)

    stiff = np.stack([np.kron(tmass, stiff_space[d]) for d in range(3)])
    k1 = np.kron(np.outer(psi1, psi1) - tderiv, mass)
    f0 = np.kron(psi0[:, None], mass)
    t_tau = np.repeat(st.time_weights, Np)

    face_mass = []
    for j in range(4):
        pts, fw = _face_rule(j, 2 * N + 2)
        fphi = basis.eval(pts)[:, basis.face_nodes[j]]
        face_mass.append(2.0 * np.einsum('q,qm,ql->ml', fw, fphi, fphi))

    node_grad = basis.eval_grad(basis.nodes)

    cond = np.linalg.cond(mass)
    logger.debug(f"Universal matrices N={N}: Np={Np}, T={Np * nt}, cond(M)={cond:.3e}")
    if not np.isfinite(cond):
        raise SetupError(f"Reference mass matrix is singular for N={N}")

    return UniversalMatrices(
        degree=N, n_nodes=Np, n_time=nt, mass=mass, deriv=deriv, stiff_space=stiff_space,
        stiff=stiff, k1=k1, f0=f0, t_tau=t_tau, face_nodes=basis.face_nodes,
        face_mass=tuple(face_mass), node_grad=node_grad, time_weights=st.time_weights,
    )


def mass_condition_numbers() -> Dict[int, float]:
    """cond(M) per supported degree, logged at INFO"""
    out = {}
    for N in sorted(_NODES):
        out[N] = float(np.linalg.cond(assemble_universal_matrices(N).mass))
        logger.info(f"Reference mass matrix N={N}: condition number {out[N]:.4e}")
    return out
