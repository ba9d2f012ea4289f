"""Parametrizations of complex null vectors and their X-systems.

Two backends are provided:

``GeneralQuadratic(n)``
    ``k = n - 1`` components, for any ``n >= 3``::

        h_1 = phi_1^2 + ... + phi_{n-2}^2 - phi_{n-1}^2
        h_2 = i (phi_1^2 + ... + phi_{n-2}^2 + phi_{n-1}^2)
        h_j = 2 phi_{j-2} phi_{n-1}                  (3 <= j <= n)

``Trilinear5``
    six components, ``n = 5``, coordinates named ``(x, y, z, t, u)``; the
    gradient is cubic in phi.

In both cases the X-system is the phi-gradient of ``x . grad_h(phi)`` up to
a constant factor (1/2 for the quadratic map, 1 for the trilinear map), so
the Jacobian of X with respect to phi is symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _phi(phi, k: int) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex)
    if phi.shape != (k,):
        raise ValueError(f"expected {k} phi components, got shape {phi.shape}")
    return phi


def _point(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"expected a point in R^{n}, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class GeneralQuadratic:
    n: int

    name = "general"

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"n must be >= 3, got {self.n}")

    @property
    def k(self) -> int:
        return self.n - 1

    def gradient_from_phi(self, phi) -> np.ndarray:
        phi = _phi(phi, self.k)
        head, last = phi[:-1], phi[-1]
        s = np.sum(head * head)
        b = last * last
        grad = np.empty(self.n, complex)
        grad[0] = s - b
        grad[1] = 1j * (s + b)
        grad[2:] = 2.0 * head * last
        return grad

    def x_system(self, phi, x) -> np.ndarray:
        phi = _phi(phi, self.k)
        x = _point(x, self.n)
        w = complex(x[0], x[1])
        wbar = complex(x[0], -x[1])
        head, last = phi[:-1], phi[-1]
        out = np.empty(self.k, complex)
        out[:-1] = head * w + last * x[2:]
        out[-1] = -last * wbar + np.sum(head * x[2:])
        return out

    def x_system_jacobian(self, phi, x) -> np.ndarray:
        # X is linear in phi, so phi only matters for validation
        _phi(phi, self.k)
        x = _point(x, self.n)
        k = self.k
        jac = np.zeros((k, k), complex)
        idx = np.arange(k - 1)
        jac[idx, idx] = complex(x[0], x[1])
        jac[idx, -1] = x[2:]
        jac[-1, idx] = x[2:]
        jac[-1, -1] = -complex(x[0], -x[1])
        return jac


@dataclass(frozen=True)
class Trilinear5:
    name = "trilinear5"
    n = 5
    k = 6

    def gradient_from_phi(self, phi) -> np.ndarray:
        p1, p2, p3, p4, p5, p6 = _phi(phi, 6)
        a = p1 * p3 + p2 * p4
        return np.array([
            1j * (p1 * p2 + p3 * p4) * p5 - 0.5 * (p1**2 + p2**2 - p3**2 - p4**2) * p6,
            1j * (-p1 * p3 + p2 * p4) * p5 + (p2 * p3 - p1 * p4) * p6,
            (-p1 * p2 + p3 * p4) * p5 - 0.5j * (p1**2 + p2**2 + p3**2 + p4**2) * p6,
            a * p5,
            a * p6,
        ])

    def x_system(self, phi, x) -> np.ndarray:
        p1, p2, p3, p4, p5, p6 = _phi(phi, 6)
        x, y, z, t, u = _point(x, 5)
        w, wb = complex(x, z), complex(x, -z)  # x + iz, x - iz
        s, sb = complex(t, -y), complex(t, y)  # t - iy, t + iy
        return np.array([
            p3 * p5 * s - (p1 * p6 - 1j * p2 * p5) * w - p4 * p6 * y + p3 * p6 * u,
            p4 * p5 * sb - (p2 * p6 - 1j * p1 * p5) * w + p3 * p6 * y + p4 * p6 * u,
            p1 * p5 * s + (p3 * p6 + 1j * p4 * p5) * wb + p2 * p6 * y + p1 * p6 * u,
            p2 * p5 * sb + (p4 * p6 + 1j * p3 * p5) * wb - p1 * p6 * y + p2 * p6 * u,
            p1 * p3 * s + p2 * p4 * sb + 1j * p1 * p2 * w + 1j * p3 * p4 * wb,
            -0.5 * (p1**2 + p2**2) * w + 0.5 * (p3**2 + p4**2) * wb
            + (p2 * p3 - p1 * p4) * y + (p1 * p3 + p2 * p4) * u,
        ])

    def x_system_jacobian(self, phi, x) -> np.ndarray:
        p1, p2, p3, p4, p5, p6 = _phi(phi, 6)
        x, y, z, t, u = _point(x, 5)
        w, wb = complex(x, z), complex(x, -z)
        s, sb = complex(t, -y), complex(t, y)
        # last two columns of rows 1-4 equal the first four entries of rows 5-6
        d5 = [p3 * s + 1j * p2 * w, p4 * sb + 1j * p1 * w,
              p1 * s + 1j * p4 * wb, p2 * sb + 1j * p3 * wb]
        d6 = [-p1 * w - p4 * y + p3 * u, -p2 * w + p3 * y + p4 * u,
              p3 * wb + p2 * y + p1 * u, p4 * wb - p1 * y + p2 * u]
        return np.array([
            [-p6 * w, 1j * p5 * w, p5 * s + p6 * u, -p6 * y, d5[0], d6[0]],
            [1j * p5 * w, -p6 * w, p6 * y, p5 * sb + p6 * u, d5[1], d6[1]],
            [p5 * s + p6 * u, p6 * y, p6 * wb, 1j * p5 * wb, d5[2], d6[2]],
            [-p6 * y, p5 * sb + p6 * u, 1j * p5 * wb, p6 * wb, d5[3], d6[3]],
            [*d5, 0, 0],
            [*d6, 0, 0],
        ], dtype=complex)


Backend = GeneralQuadratic | Trilinear5


def make_backend(n: int, name: str = "general") -> Backend:
    if name == "general":
        return GeneralQuadratic(n)
    if name == "trilinear5":
        if n != 5:
            raise ValueError(f"the trilinear backend requires n = 5, got {n}")
        return Trilinear5()
    raise ValueError(f"unknown backend {name!r}")


def null_residual(grad_h) -> complex:
    """sum_k grad_h[k]**2 (no conjugation); zero for a null vector."""
    g = np.asarray(grad_h, dtype=complex)
    return complex(np.sum(g * g))
