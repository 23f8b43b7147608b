"""
Closed-form longitudinal stress of a simply supported single-cell box girder
with shear lag (energy-variational, cubic warping shape per flange plate).

Displacement field: ``u = -v w'(z) + omega(x, v) U(z)`` where ``v`` is the
distance *below* the centroidal axis (so a sagging moment gives ``M v / I``
tension in the bottom flange).  On every flange plate the trial warping is
``v * (1 - (1 - s/b)**3)`` with ``s`` the distance from the web face and
``b`` the plate's free width (clear half-width between webs, or the
cantilever length); webs carry no warping of their own.  The warping used in
the stress formulas is orthogonalised against ``1`` and ``v`` over the whole
section, so the correction carries no axial force and no moment.

Minimising the potential energy gives, for ``I_r = ∫omega^2 dA``,
``D = ∫ v omega_0 dA`` and ``I_x = ∫(d omega_0/dx)^2 dA`` over the flanges::

    k^2 = G I_x / (E I_r)          k1 = -D / (E I I_r)     [1/(Pa m^4)]

and the stresses

    uniform q:      q v z (l - z) / (2 I) - E k1 q omega / k^2 * B(z)
    point P at l/2: P v z / (2 I) + 2 E k1 P l omega * sum_n (-1)^(n-1) (2n-1)^2 alpha_n sin((2n-1) pi z / l)

with ``B(z) = cosh(kz) - 1 + (1 - cosh kl)/sinh(kl) sinh(kz)`` and
``alpha_n = 1 / ((2n-1)^2 ((2n-1)^2 pi^2 + k^2 l^2))`` (four terms).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import Material
from .section import CrossSection, GeometryError, SectionProperties

_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


@dataclass(frozen=True)
class ReissnerParams:
    k: float
    k1: float
    alpha: tuple
    l: float
    E: float
    I: float
    y_c: float  # centroid above the bottom fiber
    h: float
    # warping-shape data
    x_inner: float  # half clear width between webs
    x_outer: float  # half bottom width (outer web face)
    cant_len: float
    mean: float  # subtracted constant
    beta: float  # subtracted multiple of v

    def omega_base(self, x, v):
        x = np.abs(np.asarray(x, float))
        v = np.asarray(v, float)
        f = np.zeros(np.broadcast(x, v).shape)
        xb = np.broadcast_to(x, f.shape)
        inner = xb < self.x_inner
        s = self.x_inner - xb[inner]
        f[inner] = 1.0 - (1.0 - s / self.x_inner) ** 3
        if self.cant_len > 0:
            out = xb > self.x_outer
            s = np.minimum(xb[out] - self.x_outer, self.cant_len)
            f[out] = 1.0 - (1.0 - s / self.cant_len) ** 3
        return v * f

    def omega(self, x, v):
        """Orthogonalised warping function (metres)."""
        return self.omega_base(x, v) - self.mean - self.beta * np.asarray(v, float)

    def omega_dx(self, x, v):
        xa = np.abs(np.asarray(x, float))
        v = np.asarray(v, float)
        d = np.zeros(np.broadcast(xa, v).shape)
        xb = np.broadcast_to(xa, d.shape)
        sgn = np.broadcast_to(np.sign(np.asarray(x, float)), d.shape)
        inner = xb < self.x_inner
        s = self.x_inner - xb[inner]
        # d/dx = d/ds * ds/dx with ds/d|x| = -1
        d[inner] = -3.0 * (1.0 - s / self.x_inner) ** 2 / self.x_inner * sgn[inner]
        if self.cant_len > 0:
            out = (xb > self.x_outer) & (xb < self.x_outer + self.cant_len)
            s = xb[out] - self.x_outer
            d[out] = 3.0 * (1.0 - s / self.cant_len) ** 2 / self.cant_len * sgn[out]
        return np.broadcast_to(v, d.shape) * d


def section_quadrature(cs: CrossSection, n: int = 4):
    """Gauss points ``(x, y)`` and weights covering the solid section exactly."""
    from .mesh import MeshResolution, build_template

    p = cs.params
    if p is None:
        raise GeometryError("section quadrature needs a parametric cross-section")
    res = MeshResolution(n_cant=4 * n, n_flange=8 * n, n_web_t=n, n_web_h=4 * n, n_top=n, n_bot=n)
    tpl = build_template(res, cantilevers=p.cant_len > 0)
    X, Y = tpl.node_coords(p)
    ii, jj = np.nonzero(tpl.cell_mask)
    q = np.stack([np.stack([X[ii, jj], Y[ii, jj]], 1), np.stack([X[ii + 1, jj], Y[ii + 1, jj]], 1),
                  np.stack([X[ii + 1, jj + 1], Y[ii + 1, jj + 1]], 1), np.stack([X[ii, jj + 1], Y[ii, jj + 1]], 1)], 1)
    s, t = np.meshgrid(_GL_X, _GL_X, indexing="ij")
    s, t = s.ravel(), t.ravel()
    w = np.outer(_GL_W, _GL_W).ravel()
    N = 0.25 * np.stack([(1 - s) * (1 - t), (1 + s) * (1 - t), (1 + s) * (1 + t), (1 - s) * (1 + t)], 1)
    dNs = 0.25 * np.stack([-(1 - t), (1 - t), (1 + t), -(1 + t)], 1)
    dNt = 0.25 * np.stack([-(1 - s), -(1 + s), (1 + s), (1 - s)], 1)
    pts = np.einsum("ga,cad->cgd", N, q)
    a = np.einsum("ga,cad->cgd", dNs, q)
    b = np.einsum("ga,cad->cgd", dNt, q)
    det = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return pts.reshape(-1, 2), (det * w).ravel()


def reissner_parameters(props: SectionProperties, cs: CrossSection, mat: Material, l: float) -> ReissnerParams:
    """Shear-lag parameters of a single-cell section for span ``l``."""
    p = cs.params
    if p is None:
        raise GeometryError("need a parametric single-cell section")
    x_inner = p.B_bot / 2 - p.t_web
    if not x_inner > 1e-9:
        raise GeometryError("flange between the webs has zero width")
    if not l > 0:
        raise ValueError("span must be > 0")
    pts, w = section_quadrature(cs)
    x, y = pts[:, 0], pts[:, 1]
    A = w.sum()
    y_c = (w * y).sum() / A
    v = y_c - y
    I = (w * v * v).sum()
    base = ReissnerParams(1.0, 0.0, (0.0,) * 4, l, mat.E, I, y_c, p.h, x_inner, p.B_bot / 2,
                          max(p.cant_len, 0.0), 0.0, 0.0)
    om0 = base.omega_base(x, v)
    mean = (w * om0).sum() / A
    D = (w * v * om0).sum()
    beta = D / I
    om = om0 - mean - beta * v
    I_r = (w * om * om).sum()
    I_x = (w * base.omega_dx(x, v) ** 2).sum()
    if I_r <= 0 or I_x <= 0:
        raise GeometryError("degenerate warping shape")
    k2 = mat.G * I_x / (mat.E * I_r)
    k = float(np.sqrt(k2))
    k1 = -D / (mat.E * I * I_r)
    n = 2 * np.arange(1, 5) - 1
    alpha = tuple(1.0 / (n ** 2 * (n ** 2 * np.pi ** 2 + k2 * l * l)))
    return ReissnerParams(k, float(k1), alpha, l, mat.E, float(I), float(y_c), p.h, x_inner, p.B_bot / 2,
                          max(p.cant_len, 0.0), float(mean), float(beta))


def orthogonality(params: ReissnerParams, cs: CrossSection) -> tuple[float, float]:
    """Relative net axial force and moment carried by the warping function."""
    pts, w = section_quadrature(cs)
    v = params.y_c - pts[:, 1]
    om = params.omega(pts[:, 0], v)
    scale = np.sqrt((w * om * om).sum() * w.sum())
    return (float(abs((w * om).sum()) / scale),
            float(abs((w * om * v).sum()) / np.sqrt((w * om * om).sum() * params.I)))


def _check_z(z, l):
    z = np.asarray(z, float)
    if np.any(z < -1e-12 * l) or np.any(z > l * (1 + 1e-12)):
        raise ValueError(f"z outside [0, {l}]")
    return np.clip(z, 0.0, l)


def uniform_bracket(k: float, l: float, z) -> np.ndarray:
    """``cosh(kz) - 1 + (1 - cosh kl)/sinh(kl) sinh(kz)``.

    Evaluated as ``cosh(k(z - l/2))/cosh(kl/2) - 1`` with exponentials
    rescaled, which stays finite for large ``kl``.
    """
    z = np.asarray(z, float)
    a = np.abs(k * (z - 0.5 * l))
    b = 0.5 * k * l
    if b <= 30.0:
        return np.cosh(a) / np.cosh(b) - 1.0
    return np.exp(a - b) * (1.0 + np.exp(-2.0 * a)) / (1.0 + np.exp(-2.0 * b)) - 1.0


def analytic_stress_uniform(q: float, l: float, params: ReissnerParams, props: SectionProperties | None,
                            point) -> np.ndarray:
    """Longitudinal stress (Pa, tension positive) under a uniform load ``q`` (N/m, downward).

    ``point = (x, v, z)`` with ``v`` measured downward from the centroid.
    """
    x, v, z = (np.asarray(c, float) for c in point)
    z = _check_z(z, l)
    I = props.I if props is not None else params.I
    beam = q * v * z * (l - z) / (2.0 * I)
    corr = -params.E * params.k1 * q * params.omega(x, v) / params.k ** 2 * uniform_bracket(params.k, l, z)
    return beam + corr


def analytic_stress_concentrated(P: float, l: float, params: ReissnerParams, props: SectionProperties | None,
                                 point) -> np.ndarray:
    """Longitudinal stress under a mid-span point load ``P`` (N, downward); four-term series."""
    x, v, z = (np.asarray(c, float) for c in point)
    z = _check_z(z, l)
    z = np.where(z > 0.5 * l, l - z, z)
    I = props.I if props is not None else params.I
    if abs(params.l - l) > 1e-9 * l:
        raise ValueError("parameters were derived for a different span")
    a1, a2, a3, a4 = params.alpha
    t = np.pi * z / l
    series = a1 * np.sin(t) - 9 * a2 * np.sin(3 * t) + 25 * a3 * np.sin(5 * t) - 49 * a4 * np.sin(7 * t)
    return P * v * z / (2.0 * I) + 2.0 * params.E * params.k1 * P * l * params.omega(x, v) * series
