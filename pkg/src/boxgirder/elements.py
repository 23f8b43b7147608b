"""
Element kernels: 8-node trilinear hexahedron (full 2x2x2 Gauss) and 2-node truss.

Hex node order follows VTK_HEXAHEDRON: nodes 0-3 on the face zeta = -1,
counter-clockwise seen from zeta = +1, nodes 4-7 above them.
All kernels are vectorised over a leading element axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ElementError(ValueError):
    pass


@dataclass(frozen=True)
class Material:
    E: float
    nu: float = 0.2
    rho: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError(f"E must be > 0, got {self.E}")
        if not 0.0 <= self.nu < 0.5:
            raise ValueError(f"nu must be in [0, 0.5), got {self.nu}")
        if self.rho < 0:
            raise ValueError("rho must be >= 0")

    @property
    def G(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    def elasticity(self) -> np.ndarray:
        """Isotropic 6x6 matrix, Voigt order xx, yy, zz, xy, yz, zx (engineering shear)."""
        E, nu = self.E, self.nu
        lam = E * nu / ((1 + nu) * (1 - 2 * nu))
        mu = E / (2 * (1 + nu))
        C = np.zeros((6, 6))
        C[:3, :3] = lam
        C[np.arange(3), np.arange(3)] += 2 * mu
        C[np.arange(3, 6), np.arange(3, 6)] = mu
        return C


HEX_CORNERS = np.array(
    [
        [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
        [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
    ],
    dtype=float,
)

_g = 1.0 / np.sqrt(3.0)
GAUSS_POINTS = HEX_CORNERS * _g
GAUSS_WEIGHTS = np.ones(8)


def shape_functions(nat: np.ndarray) -> np.ndarray:
    """Trilinear shape functions at natural points ``(..., 3)`` -> ``(..., 8)``."""
    nat = np.asarray(nat, dtype=float)
    return 0.125 * np.prod(1.0 + nat[..., None, :] * HEX_CORNERS, axis=-1)


def shape_derivatives(nat: np.ndarray) -> np.ndarray:
    """Natural derivatives ``(..., 3, 8)``."""
    nat = np.asarray(nat, dtype=float)
    t = 1.0 + nat[..., None, :] * HEX_CORNERS  # (..., 8, 3)
    d = np.empty(nat.shape[:-1] + (3, 8))
    d[..., 0, :] = HEX_CORNERS[:, 0] * t[..., 1] * t[..., 2]
    d[..., 1, :] = HEX_CORNERS[:, 1] * t[..., 0] * t[..., 2]
    d[..., 2, :] = HEX_CORNERS[:, 2] * t[..., 0] * t[..., 1]
    return 0.125 * d


_DN_GAUSS = shape_derivatives(GAUSS_POINTS)  # (8 gp, 3, 8)
_N_GAUSS = shape_functions(GAUSS_POINTS)  # (8 gp, 8)

# Gauss-point values -> corner values (trilinear extrapolation)
GAUSS_TO_NODE = shape_functions(HEX_CORNERS * np.sqrt(3.0))


def hex_jacobians(coords: np.ndarray, points: np.ndarray = GAUSS_POINTS):
    """Jacobian matrices ``(ne, ng, 3, 3)`` and determinants for hexes ``(ne, 8, 3)``."""
    dN = _DN_GAUSS if points is GAUSS_POINTS else shape_derivatives(points)
    J = np.einsum("gan,enj->egaj", dN, coords)
    return J, np.linalg.det(J)


def hex_volumes(coords: np.ndarray) -> np.ndarray:
    _, det = hex_jacobians(coords)
    return det @ GAUSS_WEIGHTS


def hex_b_matrices(coords: np.ndarray, check: bool = True):
    """Strain-displacement matrices ``(ne, 8, 6, 24)`` and Jacobian determinants."""
    J, det = hex_jacobians(coords)
    if check and np.any(det <= 0):
        bad = np.unique(np.nonzero(det <= 0)[0])
        raise ElementError(f"non-positive Jacobian in element(s) {bad[:10].tolist()}")
    dN = np.linalg.solve(J, np.broadcast_to(_DN_GAUSS, J.shape[:2] + (3, 8)))
    ne, ng = det.shape
    B = np.zeros((ne, ng, 6, 24))
    dx, dy, dz = dN[:, :, 0], dN[:, :, 1], dN[:, :, 2]
    B[:, :, 0, 0::3] = dx
    B[:, :, 1, 1::3] = dy
    B[:, :, 2, 2::3] = dz
    B[:, :, 3, 0::3] = dy
    B[:, :, 3, 1::3] = dx
    B[:, :, 4, 1::3] = dz
    B[:, :, 4, 2::3] = dy
    B[:, :, 5, 0::3] = dz
    B[:, :, 5, 2::3] = dx
    return B, det


def hex8_stiffness(coords: np.ndarray, mat: Material | np.ndarray) -> np.ndarray:
    """Stiffness of one hex ``(8, 3)`` -> ``(24, 24)`` or a batch ``(ne, 8, 3)`` -> ``(ne, 24, 24)``.

    ``mat`` is a :class:`Material` or a (batch of) 6x6 elasticity matrices.
    """
    coords = np.asarray(coords, dtype=float)
    single = coords.ndim == 2
    if single:
        coords = coords[None]
    C = mat.elasticity() if isinstance(mat, Material) else np.asarray(mat)
    B, det = hex_b_matrices(coords)
    w = det * GAUSS_WEIGHTS
    if C.ndim == 2:
        K = np.einsum("egia,ij,egjb,eg->eab", B, C, B, w, optimize=True)
    else:
        K = np.einsum("egia,eij,egjb,eg->eab", B, C, B, w, optimize=True)
    K = 0.5 * (K + K.transpose(0, 2, 1))
    return K[0] if single else K


def truss_geometry(coords: np.ndarray):
    coords = np.asarray(coords, dtype=float)
    d = coords[..., 1, :] - coords[..., 0, :]
    L = np.linalg.norm(d, axis=-1)
    if np.any(L <= 0):
        raise ElementError("zero-length truss element")
    return L, d / L[..., None]


def truss_stiffness(coords: np.ndarray, area, mat: Material | float) -> np.ndarray:
    """Axial bar stiffness ``(6, 6)`` (or batched ``(ne, 6, 6)``)."""
    E = mat.E if isinstance(mat, Material) else mat
    L, n = truss_geometry(coords)
    k = np.asarray(E * np.asarray(area) / L)
    nn = n[..., :, None] * n[..., None, :]
    blk = k[..., None, None] * nn
    K = np.concatenate(
        [np.concatenate([blk, -blk], axis=-1), np.concatenate([-blk, blk], axis=-1)], axis=-2
    )
    return K


def truss_thermal_forces(coords: np.ndarray, area, E, alpha, dT) -> np.ndarray:
    """Equivalent end forces ``(…, 6)`` of a free thermal strain ``alpha*dT``.

    For cooling (``dT < 0``) the forces pull the two ends toward each other.
    """
    _, n = truss_geometry(coords)
    P = np.asarray(E * np.asarray(area) * alpha * dT)
    f = P[..., None] * n
    return np.concatenate([-f, f], axis=-1)
