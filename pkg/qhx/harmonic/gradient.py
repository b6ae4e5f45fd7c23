from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qhx.harmonic.dirichlet import GridField


@dataclass
class GradientField:
    mask: np.ndarray
    hx: np.ndarray
    hy: np.ndarray
    hz: np.ndarray
    hzbar: np.ndarray
    norm: np.ndarray
    jacobian: np.ndarray
    dist: np.ndarray
    res: float
    x: np.ndarray
    y: np.ndarray

    def points(self, keep: np.ndarray) -> np.ndarray:
        gx, gy = np.meshgrid(self.x, self.y)
        return np.column_stack([gx[keep], gy[keep]])


def _neighbour(field: GridField, j: int, di: int, dj: int) -> np.ndarray:
    """Value seen in direction j: the lattice neighbour, or the boundary trace when it is outside."""
    shifted = np.full(field.h.shape, np.nan + 0j)
    ny, nx = field.h.shape
    src = field.h[max(0, dj) : ny + min(0, dj), max(0, di) : nx + min(0, di)]
    shifted[max(0, -dj) : ny - max(0, dj), max(0, -di) : nx - max(0, di)] = src
    trace = field.traces[j]
    return np.where(np.isnan(trace), shifted, trace)


def _unequal_central(u_p, u_plus, u_minus, a, b, res):
    """First derivative from arms a (forward) and b (backward), exact on quadratics."""
    return (b * b * (u_plus - u_p) + a * a * (u_p - u_minus)) / (a * b * (a + b) * res)


def gradient_norm(field: GridField) -> GradientField:
    """|Dh| = |h_z| + |h_zbar|, the operator norm of the real Jacobian, with the Jacobian itself."""
    east, west, north, south = (_neighbour(field, j, di, dj) for j, (di, dj) in enumerate(((1, 0), (-1, 0), (0, 1), (0, -1))))
    a_e, a_w, a_n, a_s = field.arms
    hx = _unequal_central(field.h, east, west, a_e, a_w, field.res)
    hy = _unequal_central(field.h, north, south, a_n, a_s, field.res)
    hz = 0.5 * (hx - 1j * hy)
    hzbar = 0.5 * (hx + 1j * hy)
    norm = np.abs(hz) + np.abs(hzbar)
    jacobian = np.abs(hz) ** 2 - np.abs(hzbar) ** 2
    mask = field.mask & np.isfinite(norm)
    for arr in (hx, hy, hz, hzbar):
        arr[~mask] = np.nan
    norm = np.where(mask, norm, np.nan)
    jacobian = np.where(mask, jacobian, np.nan)
    return GradientField(mask=mask, hx=hx, hy=hy, hz=hz, hzbar=hzbar, norm=norm, jacobian=jacobian, dist=field.dist, res=field.res, x=field.x, y=field.y)
