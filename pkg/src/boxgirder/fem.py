"""
Linear-elastic assembly and solution over the active part of a mesh.

Embedded truss nodes carry no equations: their displacement is the weighted
sum of the host hex nodes, so each truss contributes ``T^T k T`` to the host
degrees of freedom.  Fixed degrees of freedom are eliminated; bearing springs
go on the diagonal.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .elements import Material, hex8_stiffness, truss_stiffness
from .mesh import Mesh

log = logging.getLogger(__name__)

X, Y, Z = 0, 1, 2


class SolverError(RuntimeError):
    pass


@dataclass
class BoundarySpec:
    """Supports.  ``fixed`` holds ``(node, dof)`` pairs, ``springs`` holds
    ``(node, dof, stiffness N/m)``."""

    fixed: set = field(default_factory=set)
    springs: list = field(default_factory=list)

    def __post_init__(self):
        self.fixed = {(int(n), int(d)) for n, d in self.fixed}
        keys = set()
        for n, d, k in self.springs:
            if not k > 0:
                raise ValueError(f"spring stiffness must be > 0 (node {n}, dof {d})")
            if (int(n), int(d)) in self.fixed:
                raise ValueError(f"dof ({n}, {d}) is both fixed and sprung")
            keys.add((int(n), int(d)))

    def with_fixed(self, extra) -> "BoundarySpec":
        return BoundarySpec(self.fixed | {(int(n), int(d)) for n, d in extra}, list(self.springs))

    def fixed_dofs(self) -> np.ndarray:
        if not self.fixed:
            return np.zeros(0, int)
        a = np.array(sorted(self.fixed))
        return 3 * a[:, 0] + a[:, 1]


@dataclass
class LinearSystem:
    K: sp.csr_matrix  # free x free, springs included
    dof_map: np.ndarray  # global dof -> equation, -1 when not an unknown
    active_dofs: np.ndarray
    K_active: sp.csr_matrix  # active x active without springs (for reactions)
    fixed_dofs: np.ndarray
    spring_dofs: np.ndarray
    spring_k: np.ndarray
    hex_mask: np.ndarray
    truss_mask: np.ndarray
    rhs: np.ndarray | None = None
    _factor: object = None

    @property
    def n_eq(self) -> int:
        return self.K.shape[0]

    def free_dofs(self) -> np.ndarray:
        return np.flatnonzero(self.dof_map >= 0)


class FEModel:
    """Mesh plus materials with cached element matrices."""

    def __init__(self, mesh: Mesh, materials: dict):
        self.mesh = mesh
        self.materials = materials
        self._ke = None
        self._truss = None

    @property
    def n_dof(self) -> int:
        return 3 * self.mesh.n_nodes

    def hex_stiffness(self) -> np.ndarray:
        if self._ke is None:
            m = self.mesh
            ke = np.empty((len(m.hexes), 24, 24))
            for mid in np.unique(m.hex_material):
                idx = np.flatnonzero(m.hex_material == mid)
                C = self.materials[int(mid)].elasticity()
                for s in range(0, idx.size, 4096):
                    chunk = idx[s:s + 4096]
                    ke[chunk] = hex8_stiffness(m.hex_coords(chunk), C)
            self._ke = ke
        return self._ke

    def truss_data(self):
        """Per truss: 16 host nodes, (16, 2) weights, 6x6 stiffness."""
        if self._truss is None:
            m = self.mesh
            nt = len(m.trusses)
            row = -np.ones(m.n_nodes, int)
            row[m.emb_node] = np.arange(len(m.emb_node))
            r = row[m.trusses]
            if nt and np.any(r < 0):
                raise SolverError("truss node without embedding constraint")
            hosts = np.zeros((nt, 16), int)
            W = np.zeros((nt, 16, 2))
            if nt:
                hosts[:, :8] = m.hexes[m.emb_host[r[:, 0]]]
                hosts[:, 8:] = m.hexes[m.emb_host[r[:, 1]]]
                W[:, :8, 0] = m.emb_weights[r[:, 0]]
                W[:, 8:, 1] = m.emb_weights[r[:, 1]]
            E = np.array([self.materials[int(k)].E for k in m.truss_material]) if nt else np.zeros(0)
            kt = truss_stiffness(m.nodes[m.trusses], m.truss_area, E) if nt else np.zeros((0, 6, 6))
            host_hex = np.stack([m.emb_host[r[:, 0]], m.emb_host[r[:, 1]]], 1) if nt else np.zeros((0, 2), int)
            self._truss = (hosts, W, kt, host_hex)
        return self._truss

    def hex_mask(self, segments=None) -> np.ndarray:
        if segments is None:
            return np.ones(len(self.mesh.hexes), bool)
        return np.isin(self.mesh.hex_segment, np.fromiter(segments, int))

    def truss_mask(self, groups=None, hex_mask=None) -> np.ndarray:
        m = self.mesh
        if groups is None:
            mask = np.ones(len(m.trusses), bool)
        else:
            mask = np.isin(m.truss_group, np.fromiter(groups, int))
        if hex_mask is not None and len(m.trusses):
            _, _, _, host_hex = self.truss_data()
            mask &= hex_mask[host_hex].all(axis=1)
        return mask

    def truss_to_host(self, vec6: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map truss end vectors ``(nt, 6)`` onto host dofs: ``(dofs, values)``."""
        hosts, W, _, _ = self.truss_data()
        v = vec6[mask].reshape(-1, 2, 3)
        f = np.einsum("tai,tid->tad", W[mask], v)
        dofs = 3 * hosts[mask][:, :, None] + np.arange(3)
        return dofs.ravel(), f.ravel()

    def truss_displacements(self, u: np.ndarray, mask=None) -> np.ndarray:
        """End displacements ``(nt, 6)`` of embedded trusses."""
        hosts, W, _, _ = self.truss_data()
        if mask is not None:
            hosts, W = hosts[mask], W[mask]
        uh = u.reshape(-1, 3)[hosts]  # (nt, 16, 3)
        return np.einsum("tai,tad->tid", W, uh).reshape(-1, 6)

    def assemble(self, segments=None, groups=None, bcs: BoundarySpec | None = None) -> LinearSystem:
        """Stiffness of the active elements with supports applied.

        ``segments``/``groups`` are iterables of ids; ``None`` activates all.
        """
        m = self.mesh
        bcs = bcs or BoundarySpec()
        hmask = self.hex_mask(segments)
        tmask = self.truss_mask(groups, hmask)
        ke = self.hex_stiffness()
        idx = np.flatnonzero(hmask)
        edofs = (3 * m.hexes[idx][:, :, None] + np.arange(3)).reshape(-1, 24)
        rows = [np.repeat(edofs, 24, axis=1).ravel()]
        cols = [np.tile(edofs, (1, 24)).ravel()]
        vals = [ke[idx].ravel()]
        if tmask.any():
            hosts, W, kt, _ = self.truss_data()
            k4 = kt[tmask].reshape(-1, 2, 3, 2, 3)
            Wm = W[tmask]
            kh = np.einsum("tai,tbj,tidje->tadbe", Wm, Wm, k4, optimize=True).reshape(-1, 48, 48)
            td = (3 * hosts[tmask][:, :, None] + np.arange(3)).reshape(-1, 48)
            rows.append(np.repeat(td, 48, axis=1).ravel())
            cols.append(np.tile(td, (1, 48)).ravel())
            vals.append(kh.ravel())

        active_nodes = np.unique(m.hexes[idx])
        active_dofs = (3 * active_nodes[:, None] + np.arange(3)).ravel()
        g2a = -np.ones(self.n_dof, int)
        g2a[active_dofs] = np.arange(active_dofs.size)
        r = g2a[np.concatenate(rows)]
        c = g2a[np.concatenate(cols)]
        if np.any(r < 0) or np.any(c < 0):
            raise SolverError("embedded truss hosted by an inactive element")
        na = active_dofs.size
        K_active = sp.coo_matrix((np.concatenate(vals), (r, c)), shape=(na, na)).tocsr()
        K_active = 0.5 * (K_active + K_active.T)
        K_active.sum_duplicates()

        fixed = bcs.fixed_dofs()
        fixed = fixed[g2a[fixed] >= 0] if fixed.size else fixed
        free_a = np.ones(na, bool)
        free_a[g2a[fixed]] = False
        dof_map = -np.ones(self.n_dof, int)
        dof_map[active_dofs[free_a]] = np.arange(int(free_a.sum()))

        sd = np.array([3 * n + d for n, d, _ in bcs.springs], int)
        sk = np.array([k for _, _, k in bcs.springs], float)
        keep = (dof_map[sd] >= 0) if sd.size else np.zeros(0, bool)
        sd, sk = sd[keep], sk[keep]

        K = K_active[free_a][:, free_a].tocsr()
        if sd.size:
            K = (K + sp.coo_matrix((sk, (dof_map[sd], dof_map[sd])), shape=K.shape)).tocsr()
        return LinearSystem(K, dof_map, active_dofs, K_active, fixed, sd, sk, hmask, tmask)

    def check_supported(self, sys_: LinearSystem) -> None:
        """Raise if an active component has no support at all."""
        m = self.mesh
        idx = np.flatnonzero(sys_.hex_mask)
        if idx.size == 0:
            raise SolverError("no active elements")
        h = m.hexes[idx]
        r = np.repeat(h[:, 0], 7)
        c = h[:, 1:].ravel()
        if sys_.truss_mask.any():
            hosts, _, _, _ = self.truss_data()
            th = hosts[sys_.truss_mask]
            r = np.concatenate([r, np.repeat(th[:, 0], 15)])
            c = np.concatenate([c, th[:, 1:].ravel()])
        n = m.n_nodes
        g = sp.coo_matrix((np.ones(r.size), (r, c)), shape=(n, n))
        _, lab = connected_components(g, directed=False)
        active_nodes = np.unique(h)
        supported = np.zeros(n, bool)
        sup = np.concatenate([sys_.fixed_dofs, sys_.spring_dofs]) // 3
        supported[sup] = True
        for comp in np.unique(lab[active_nodes]):
            nodes = active_nodes[lab[active_nodes] == comp]
            if not supported[nodes].any():
                hexes = idx[np.isin(h, nodes).any(axis=1)]
                segs = sorted({m.segment_names.get(int(s), str(s)) for s in m.hex_segment[hexes]})
                raise SolverError(f"floating component without supports (segments: {', '.join(segs)})")


def assemble(mesh: Mesh, materials: dict, active=None, bcs: BoundarySpec | None = None,
             groups=None) -> LinearSystem:
    return FEModel(mesh, materials).assemble(active, groups, bcs)


def _factorize(K: sp.csr_matrix):
    n = K.shape[0]
    try:
        lu = spla.splu(
            K.tocsc(),
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options=dict(SymmetricMode=True),
        )
    except RuntimeError as exc:
        raise SolverError(f"factorisation failed: {exc}") from None
    d = lu.U.diagonal()
    dmax = float(np.abs(d).max()) if n else 1.0
    if np.any(d <= 1e-13 * dmax):
        raise SolverError(
            f"stiffness matrix is not positive definite (smallest pivot {d.min():.3e}, "
            f"largest {dmax:.3e}); a part of the structure is unsupported or a mechanism"
        )
    return lu


def solve(sys_: LinearSystem, f: np.ndarray | None = None, method: str = "direct",
          tol: float = 1e-8, maxiter: int | None = None) -> np.ndarray:
    """Displacements (global dof vector, or one column per load case).

    ``method="direct"`` uses a symmetric-ordered sparse LU with a positive-pivot
    check; ``"cg"`` is Jacobi-preconditioned conjugate gradients.
    """
    f = sys_.rhs if f is None else f
    f = np.asarray(f, dtype=float)
    single = f.ndim == 1
    F = f[:, None] if single else f
    free = sys_.free_dofs()
    eq = sys_.dof_map[free]
    b = np.zeros((sys_.n_eq, F.shape[1]))
    b[eq] = F[free]
    if sys_.n_eq == 0:
        x = b
    elif method == "direct":
        if sys_._factor is None:
            sys_._factor = _factorize(sys_.K)
        x = sys_._factor.solve(b)
    elif method == "cg":
        dinv = 1.0 / sys_.K.diagonal()
        if np.any(~np.isfinite(dinv)) or np.any(dinv <= 0):
            raise SolverError("non-positive diagonal: matrix is not positive definite")
        M = spla.LinearOperator(sys_.K.shape, matvec=lambda v: dinv * v)
        x = np.zeros_like(b)
        for j in range(b.shape[1]):
            if not np.any(b[:, j]):
                continue
            xj, info = spla.cg(sys_.K, b[:, j], rtol=tol * 0.01, atol=0.0, M=M,
                               maxiter=maxiter or 20 * sys_.n_eq)
            if info != 0:
                res = np.linalg.norm(sys_.K @ xj - b[:, j]) / np.linalg.norm(b[:, j])
                raise SolverError(f"CG did not converge ({info} iterations), residual {res:.3e}")
            x[:, j] = xj
    else:
        raise ValueError(f"unknown method {method!r}")

    for j in range(b.shape[1]):
        nb = np.linalg.norm(b[:, j])
        if nb > 0:
            res = np.linalg.norm(sys_.K @ x[:, j] - b[:, j]) / nb
            if not res <= tol:
                raise SolverError(f"solution residual {res:.3e} exceeds {tol:g}")
    u = np.zeros((F.shape[0], F.shape[1]))
    u[free] = x[eq]
    return u[:, 0] if single else u


def reactions(sys_: LinearSystem, u: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Support forces acting on the structure.

    Returns ``(fixed_reactions, spring_forces)`` aligned with
    ``sys_.fixed_dofs`` and ``sys_.spring_dofs``; together with the applied
    load they sum to zero per direction.
    """
    ua = u[sys_.active_dofs]
    r = sys_.K_active @ ua - f[sys_.active_dofs]
    g2a = -np.ones(u.shape[0], int)
    g2a[sys_.active_dofs] = np.arange(sys_.active_dofs.size)
    rf = r[g2a[sys_.fixed_dofs]] if sys_.fixed_dofs.size else r[:0]
    spring = -sys_.spring_k.reshape((-1,) + (1,) * (u.ndim - 1)) * u[sys_.spring_dofs]
    return rf, spring


def equilibrium_error(sys_: LinearSystem, u: np.ndarray, f: np.ndarray) -> float:
    """Largest relative imbalance of (applied + reactions) over the three directions."""
    rf, rs = reactions(sys_, u, f)
    worst = 0.0
    fa = f[sys_.active_dofs]
    scale = np.abs(fa).sum() or 1.0
    for d in range(3):
        tot = fa[sys_.active_dofs % 3 == d].sum(axis=0)
        tot = tot + rf[sys_.fixed_dofs % 3 == d].sum(axis=0) + rs[sys_.spring_dofs % 3 == d].sum(axis=0)
        worst = max(worst, float(np.max(np.abs(tot))) / scale)
    return worst
