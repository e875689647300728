"""Central finite differences for matrix-valued functions of z = x + iy."""

from __future__ import annotations

from typing import Callable

import numpy as np


def d_dz(f: Callable[[complex], np.ndarray], z: complex, h: float) -> np.ndarray:
    """d/dz = (d/dx - i d/dy)/2 by central differences."""
    fx = (f(z + h) - f(z - h)) / (2 * h)
    fy = (f(z + 1j * h) - f(z - 1j * h)) / (2 * h)
    return 0.5 * (fx - 1j * fy)


def d_dzbar(f: Callable[[complex], np.ndarray], z: complex, h: float) -> np.ndarray:
    fx = (f(z + h) - f(z - h)) / (2 * h)
    fy = (f(z + 1j * h) - f(z - 1j * h)) / (2 * h)
    return 0.5 * (fx + 1j * fy)


def d_dz_richardson(f, z, h):
    """Two-step Richardson extrapolation of d_dz (order h^4)."""
    coarse = d_dz(f, z, h)
    fine = d_dz(f, z, h / 2)
    return (4.0 * fine - coarse) / 3.0


def d_dzbar_richardson(f, z, h):
    coarse = d_dzbar(f, z, h)
    fine = d_dzbar(f, z, h / 2)
    return (4.0 * fine - coarse) / 3.0


def a_z_field(phi: Callable[[complex], np.ndarray], z: complex,
              h: float, richardson: bool = False) -> np.ndarray:
    """Half the z-part of the Maurer-Cartan pullback: (1/2) phi^{-1} d_z phi."""
    dz = (d_dz_richardson if richardson else d_dz)(phi, z, h)
    return 0.5 * np.linalg.solve(phi(z), dz)


def a_zbar_field(phi, z, h, richardson: bool = False) -> np.ndarray:
    dzb = (d_dzbar_richardson if richardson else d_dzbar)(phi, z, h)
    return 0.5 * np.linalg.solve(phi(z), dzb)
