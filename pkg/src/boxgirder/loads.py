"""Consistent nodal load vectors (global dof numbering, 3 per node)."""

from __future__ import annotations

import numpy as np

from .elements import GAUSS_POINTS, _N_GAUSS, hex_jacobians
from .mesh import HEX_FACES, Mesh

_gf = 1.0 / np.sqrt(3.0)
_FACE_GP = np.array([[-_gf, -_gf], [_gf, -_gf], [_gf, _gf], [-_gf, _gf]])


def _bilinear(st):
    s, t = st[:, 0], st[:, 1]
    N = 0.25 * np.stack([(1 - s) * (1 - t), (1 + s) * (1 - t), (1 + s) * (1 + t), (1 - s) * (1 + t)], 1)
    dNs = 0.25 * np.stack([-(1 - t), (1 - t), (1 + t), -(1 + t)], 1)
    dNt = 0.25 * np.stack([-(1 - s), -(1 + s), (1 + s), (1 - s)], 1)
    return N, dNs, dNt


def body_force_gravity(mesh: Mesh, active=None, rho=None, g: float = 9.8, materials=None) -> np.ndarray:
    """Self-weight of active hexes acting in -Y.

    ``active`` is a hex mask (or None for all); density comes from ``rho``
    (per material id mapping) or from ``materials``.  Trusses carry no weight.
    """
    mask = np.ones(len(mesh.hexes), bool) if active is None else np.asarray(active, bool)
    if rho is None:
        rho = {k: m.rho for k, m in materials.items()}
    dens = np.array([rho[int(k)] for k in mesh.hex_material])
    idx = np.flatnonzero(mask & (dens > 0))
    f = np.zeros(3 * mesh.n_nodes)
    if idx.size == 0:
        return f
    _, det = hex_jacobians(mesh.hex_coords(idx))
    nodal = np.einsum("eg,ga->ea", det, _N_GAUSS) * (dens[idx] * g)[:, None]
    np.add.at(f, 3 * mesh.hexes[idx] + 1, -nodal)
    return f


def face_area_vectors(mesh: Mesh, faces: np.ndarray):
    """Per face and face Gauss point: shape values ``(nf, 4, 4)`` and area vectors ``(nf, 4, 3)``."""
    faces = np.asarray(faces).reshape(-1, 2)
    nodes = mesh.hexes[faces[:, 0][:, None], HEX_FACES[faces[:, 1]]]
    xyz = mesh.nodes[nodes]
    N, dNs, dNt = _bilinear(_FACE_GP)
    a = np.einsum("ga,fad->fgd", dNs, xyz)
    b = np.einsum("ga,fad->fgd", dNt, xyz)
    return nodes, N, np.cross(a, b)


def surface_pressure(mesh: Mesh, faces, p: float) -> np.ndarray:
    """Uniform pressure on hex faces, pushing into the solid (downward on the deck)."""
    f = np.zeros(3 * mesh.n_nodes)
    faces = np.asarray(faces).reshape(-1, 2)
    if faces.size == 0 or p == 0:
        return f
    nodes, N, nA = face_area_vectors(mesh, faces)
    nodal = -p * np.einsum("ga,fgd->fad", N, nA)  # outward normal -> inward force
    np.add.at(f, (3 * nodes[:, :, None] + np.arange(3)).ravel(), nodal.ravel())
    return f


def face_areas(mesh: Mesh, faces) -> np.ndarray:
    faces = np.asarray(faces).reshape(-1, 2)
    if faces.size == 0:
        return np.zeros(0)
    _, _, nA = face_area_vectors(mesh, faces)
    return np.linalg.norm(nA, axis=2).sum(axis=1)


def thermal_strain_load(model, truss_mask, alpha, dT) -> np.ndarray:
    """Host-node forces equivalent to a free thermal strain ``alpha*dT`` in the masked trusses.

    ``alpha``/``dT`` may be scalars or per-truss arrays.
    """
    from .elements import truss_thermal_forces

    mesh = model.mesh
    f = np.zeros(3 * mesh.n_nodes)
    mask = np.asarray(truss_mask, bool)
    if not mask.any():
        return f
    E = np.array([model.materials[int(k)].E for k in mesh.truss_material])
    fe = np.zeros((len(mesh.trusses), 6))
    dT = np.broadcast_to(np.asarray(dT, float), mask.shape)
    alpha = np.broadcast_to(np.asarray(alpha, float), mask.shape)
    fe[mask] = truss_thermal_forces(mesh.nodes[mesh.trusses[mask]], mesh.truss_area[mask], E[mask],
                                    alpha[mask], dT[mask])
    dofs, vals = model.truss_to_host(fe, mask)
    np.add.at(f, dofs, vals)
    return f


def nodal_force(n_nodes: int, node: int, dof: int, value: float) -> np.ndarray:
    f = np.zeros(3 * n_nodes)
    f[3 * node + dof] = value
    return f


def deck_point_loads(mesh: Mesh, faces, points_xz, forces, y_tol: float = 1e-6) -> np.ndarray:
    """Vertical point forces on a set of flat faces located by plan position.

    Each force (N, positive downward) is shared among the four nodes of the
    containing face with bilinear weights.  Raises if a point misses every face.
    """
    faces = np.asarray(faces).reshape(-1, 2)
    pts = np.atleast_2d(np.asarray(points_xz, float))
    forces = np.asarray(forces, float)
    f = np.zeros(3 * mesh.n_nodes)
    if pts.size == 0:
        return f
    nodes = mesh.hexes[faces[:, 0][:, None], HEX_FACES[faces[:, 1]]]
    xz = mesh.nodes[nodes][:, :, [0, 2]]
    lo, hi = xz.min(axis=1), xz.max(axis=1)
    for p, F in zip(pts, forces):
        cand = np.flatnonzero(np.all((lo - 1e-9 <= p) & (p <= hi + 1e-9), axis=1))
        hit = None
        for c in cand:
            st = _invert_bilinear(xz[c], p)
            if st is not None:
                hit = (c, st)
                break
        if hit is None:
            raise ValueError(f"load point (x={p[0]:.3f}, z={p[1]:.3f}) is off the deck")
        c, st = hit
        N, _, _ = _bilinear(st[None])
        np.add.at(f, 3 * nodes[c] + 1, -F * N[0])
    return f


def _invert_bilinear(q, p, tol=1e-9):
    st = np.zeros(2)
    for _ in range(25):
        N, dNs, dNt = _bilinear(st[None])
        r = p - N[0] @ q
        J = np.column_stack([dNs[0] @ q, dNt[0] @ q])
        try:
            d = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            return None
        st = st + d
        if np.abs(d).max() < 1e-14:
            break
    N, _, _ = _bilinear(st[None])
    if np.linalg.norm(p - N[0] @ q) > 1e-8 or np.any(np.abs(st) > 1 + tol):
        return None
    return np.clip(st, -1.0, 1.0)
