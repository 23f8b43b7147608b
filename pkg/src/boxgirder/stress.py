"""Stress recovery at Gauss points and nodal averaging."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import GAUSS_TO_NODE, hex_b_matrices, truss_geometry

# Voigt component index
SXX, SYY, SZZ, SXY, SYZ, SZX = range(6)


@dataclass
class StressField:
    """Stress per hex Gauss point ``(ne, 8, 6)`` and per truss (axial, Pa)."""

    gauss: np.ndarray
    truss: np.ndarray
    hex_active: np.ndarray

    @classmethod
    def zeros(cls, n_hex: int, n_truss: int) -> "StressField":
        return cls(np.zeros((n_hex, 8, 6)), np.zeros(n_truss), np.zeros(n_hex, bool))

    def __add__(self, other: "StressField") -> "StressField":
        return StressField(self.gauss + other.gauss, self.truss + other.truss, self.hex_active | other.hex_active)

    def copy(self) -> "StressField":
        return StressField(self.gauss.copy(), self.truss.copy(), self.hex_active.copy())

    def extrapolated(self) -> np.ndarray:
        """Per-element corner values ``(ne, 8, 6)`` from the Gauss points."""
        return np.einsum("ag,egc->eac", GAUSS_TO_NODE, self.gauss)

    def nodal(self, mesh, mask=None) -> np.ndarray:
        """Corner values averaged over adjacent elements in ``mask`` (default: active)."""
        mask = self.hex_active if mask is None else mask
        idx = np.flatnonzero(mask)
        ext = self.extrapolated()[idx]
        acc = np.zeros((mesh.n_nodes, 6))
        cnt = np.zeros(mesh.n_nodes)
        np.add.at(acc, mesh.hexes[idx], ext)
        np.add.at(cnt, mesh.hexes[idx], 1.0)
        out = np.zeros_like(acc)
        nz = cnt > 0
        out[nz] = acc[nz] / cnt[nz, None]
        return out


def recover_stress(model, hex_mask, u, truss_mask=None, truss_dT=None) -> StressField:
    """Stresses from displacement ``u`` on the active elements.

    ``truss_dT`` is the temperature change applied in this increment; its free
    thermal strain is removed from the truss strain.
    """
    mesh = model.mesh
    ne, nt = len(mesh.hexes), len(mesh.trusses)
    out = StressField.zeros(ne, nt)
    out.hex_active[:] = hex_mask
    idx = np.flatnonzero(hex_mask)
    U = u.reshape(-1, 3)
    for mid in np.unique(mesh.hex_material[idx]):
        C = model.materials[int(mid)].elasticity()
        sel = idx[mesh.hex_material[idx] == mid]
        for s in range(0, sel.size, 4096):
            chunk = sel[s:s + 4096]
            B, _ = hex_b_matrices(mesh.hex_coords(chunk), check=False)
            ue = U[mesh.hexes[chunk]].reshape(-1, 24)
            eps = np.einsum("egia,ea->egi", B, ue)
            out.gauss[chunk] = eps @ C.T
    if nt and truss_mask is not None and np.any(truss_mask):
        tm = np.asarray(truss_mask, bool)
        L, n = truss_geometry(mesh.nodes[mesh.trusses[tm]])
        ut = model.truss_displacements(u, tm).reshape(-1, 2, 3)
        eps = np.einsum("td,td->t", ut[:, 1] - ut[:, 0], n) / L
        E = np.array([model.materials[int(k)].E for k in mesh.truss_material[tm]])
        alpha = np.array([model.materials[int(k)].alpha for k in mesh.truss_material[tm]])
        dT = 0.0 if truss_dT is None else np.broadcast_to(np.asarray(truss_dT, float), tm.shape)[tm]
        out.truss[tm] = E * (eps - alpha * dT)
    return out


def interpolate_nodal(mesh, nodal: np.ndarray, hosts: np.ndarray, nat: np.ndarray) -> np.ndarray:
    """Trilinear interpolation of nodal values at ``(host, natural coords)`` pairs."""
    from .elements import shape_functions

    N = shape_functions(nat)
    return np.einsum("pa,pac->pc", N, nodal[mesh.hexes[hosts]])
