"""Manufactured solutions for the first-order time-harmonic Maxwell system.

Each problem carries the exact field u, the scaled curl p = (1/k) curl u,
both curls, and the source f = curl(curl u) - k^2 u, all hand-derived so
that convergence studies are not polluted by numerical differentiation.
Callables accept arrays of shape (..., dim) and return (..., c).
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ManufacturedProblem:
    name: str
    dim: int
    k: float
    u_exact: callable
    p_exact: callable
    curl_u: callable
    curl_p: callable
    f: callable
    regularity_note: str = ""
    singular_points: tuple = ()

    def f_scaled(self, x):
        """f / k, the source of the first-order reformulation."""
        return self.f(x) / self.k

    def boundary_trace(self, x, n):
        """Tangential boundary datum t_g = n x u_exact with outward n."""
        u = self.u_exact(x)
        n = np.asarray(n, dtype=np.float64)
        if self.dim == 2:
            return (n[0] * u[..., 1] - n[1] * u[..., 0])[..., None]
        return np.cross(n, u)


def example1(k: float) -> ManufacturedProblem:
    """2d smooth field u = (sin ky, sin kx) on the unit square; f = 0."""
    if k <= 0:
        raise ValueError("wave number must be positive")

    def u(x):
        return np.stack([np.sin(k * x[..., 1]), np.sin(k * x[..., 0])], axis=-1)

    def p(x):
        return (np.cos(k * x[..., 0]) - np.cos(k * x[..., 1]))[..., None]

    def curl_u(x):
        return k * (np.cos(k * x[..., 0]) - np.cos(k * x[..., 1]))[..., None]

    def curl_p(x):
        return k * np.stack([np.sin(k * x[..., 1]), np.sin(k * x[..., 0])], axis=-1)

    def f(x):
        return np.zeros(x.shape[:-1] + (2,))

    return ManufacturedProblem("example1", 2, float(k), u, p, curl_u, curl_p, f,
                               regularity_note="smooth")


def example2(k: float) -> ManufacturedProblem:
    """3d smooth field on the unit cube; f = k^2 u."""
    if k <= 0:
        raise ValueError("wave number must be positive")

    def u(x):
        sx, sy, sz = (np.sin(k * x[..., i]) for i in range(3))
        return np.stack([sy * sz, sx * sz, sx * sy], axis=-1)

    def curl_u(x):
        sx, sy, sz = (np.sin(k * x[..., i]) for i in range(3))
        cx, cy, cz = (np.cos(k * x[..., i]) for i in range(3))
        return k * np.stack(
            [sx * (cy - cz), sy * (cz - cx), sz * (cx - cy)], axis=-1
        )

    def p(x):
        return curl_u(x) / k

    def curl_p(x):
        # curl curl u = 2 k^2 u for this field
        return 2.0 * k * u(x)

    def f(x):
        return k * k * u(x)

    return ManufacturedProblem("example2", 3, float(k), u, p, curl_u, curl_p, f,
                               regularity_note="smooth")


def _corner_gradient(k, alpha, x):
    """Gradient of (k r)^alpha sin(alpha theta), theta in [0, 2 pi)."""
    r = np.hypot(x[..., 0], x[..., 1])
    if np.any(r == 0.0):
        raise ValueError("singular field evaluated at the corner point")
    theta = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2.0 * np.pi)
    amp = alpha * k**alpha * r ** (alpha - 1.0)
    beta = (alpha - 1.0) * theta
    return amp[..., None] * np.stack([np.sin(beta), np.cos(beta)], axis=-1)


def example3(k: float = 1.0, alpha: float = 2.0 / 3.0) -> ManufacturedProblem:
    """2d L-shape field with the r^(2/3) corner singularity at the origin.

    The singular part is a gradient, so p and both curls coincide with
    those of example1; only u and f pick up the extra term.
    """
    if k <= 0:
        raise ValueError("wave number must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    smooth = example1(k)

    def u(x):
        return _corner_gradient(k, alpha, x) + smooth.u_exact(x)

    def f(x):
        return -(k * k) * _corner_gradient(k, alpha, x)

    return ManufacturedProblem(
        "example3", 2, float(k), u, smooth.p_exact, smooth.curl_u, smooth.curl_p, f,
        regularity_note=f"u in H^{alpha:.3g}-eps near the reentrant corner",
        singular_points=((0.0, 0.0),),
    )


def example4(alpha: float = 1.2) -> ManufacturedProblem:
    """3d singular field u = grad(|x|^alpha) on the unit cube, k = 1.

    A pure gradient: p vanishes identically and f = -u.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (1, 2)")
    k = 1.0

    def u(x):
        r2 = np.sum(x * x, axis=-1)
        if np.any(r2 == 0.0):
            raise ValueError("singular field evaluated at the origin")
        return alpha * r2[..., None] ** (alpha / 2.0 - 1.0) * x

    def zeros3(x):
        return np.zeros(x.shape[:-1] + (3,))

    def f(x):
        return -u(x)

    return ManufacturedProblem(
        "example4", 3, k, u, zeros3, zeros3, zeros3, f,
        regularity_note=f"u in H^{alpha - 0.5:.3g}-eps near the origin",
        singular_points=((0.0, 0.0, 0.0),),
    )


def zero_problem(dim: int, k: float) -> ManufacturedProblem:
    """All-zero data; the discrete solution is exactly zero."""

    def zf(width):
        def _z(x):
            return np.zeros(x.shape[:-1] + (width,))

        return _z

    return ManufacturedProblem(
        "zero", dim, float(k), zf(dim), zf(2 * dim - 3), zf(2 * dim - 3), zf(dim), zf(dim)
    )


# ---------------------------------------------------------------------------
# polynomial manufactured problems (reproduction tests)


class _Poly:
    """Sparse multivariate polynomial: {exponent tuple: coefficient}."""

    def __init__(self, dim, terms=None):
        self.dim = dim
        self.terms = dict(terms or {})

    def diff(self, axis):
        out = {}
        for exp, c in self.terms.items():
            if exp[axis] == 0:
                continue
            new = list(exp)
            new[axis] -= 1
            out[tuple(new)] = out.get(tuple(new), 0.0) + c * exp[axis]
        return _Poly(self.dim, out)

    def __add__(self, other):
        out = dict(self.terms)
        for exp, c in other.terms.items():
            out[exp] = out.get(exp, 0.0) + c
        return _Poly(self.dim, out)

    def scale(self, s):
        return _Poly(self.dim, {e: s * c for e, c in self.terms.items()})

    def __call__(self, x):
        val = np.zeros(x.shape[:-1])
        for exp, c in self.terms.items():
            term = np.full(x.shape[:-1], c)
            for ax, e in enumerate(exp):
                if e:
                    term = term * x[..., ax] ** e
            val = val + term
        return val


def _poly_curl(dim, comps):
    if dim == 2:
        return [comps[1].diff(0) + comps[0].diff(1).scale(-1.0)]
    return [
        comps[2].diff(1) + comps[1].diff(2).scale(-1.0),
        comps[0].diff(2) + comps[2].diff(0).scale(-1.0),
        comps[1].diff(0) + comps[0].diff(1).scale(-1.0),
    ]


def _poly_adjoint_curl(dim, comps):
    if dim == 2:
        q = comps[0]
        return [q.diff(1), q.diff(0).scale(-1.0)]
    return _poly_curl(3, comps)


def polynomial_problem(dim: int, k: float, degree: int, seed: int = 0) -> ManufacturedProblem:
    """Random polynomial u of total degree <= `degree` with consistent data.

    p, the curls and f are derived by exact polynomial calculus, so the
    exact pair lies in the discrete space of matching degree and the
    least-squares functional vanishes there.
    """
    rng = np.random.default_rng(seed)
    from .femspace import _monomial_exponents

    exps = _monomial_exponents(dim, degree)
    u_comps = []
    for _ in range(dim):
        coeffs = rng.uniform(-1.0, 1.0, exps.shape[0])
        u_comps.append(_Poly(dim, {tuple(e): c for e, c in zip(exps, coeffs)}))
    curl_u_comps = _poly_curl(dim, u_comps)
    p_comps = [c.scale(1.0 / k) for c in curl_u_comps]
    curl_p_comps = _poly_adjoint_curl(dim, p_comps)
    # f = curl(curl u) - k^2 u = k * curl p - k^2 u
    f_comps = [
        cc.scale(k) + uc.scale(-(k * k)) for cc, uc in zip(curl_p_comps, u_comps)
    ]

    def vec(comps):
        def _eval(x):
            return np.stack([c(x) for c in comps], axis=-1)

        return _eval

    return ManufacturedProblem(
        f"poly{degree}", dim, float(k),
        vec(u_comps), vec(p_comps), vec(curl_u_comps), vec(curl_p_comps), vec(f_comps),
        regularity_note="polynomial",
    )


REGISTRY = {
    "example1": lambda k, alpha: example1(k),
    "example2": lambda k, alpha: example2(k),
    "example3": lambda k, alpha: example3(k, alpha),
    "example4": lambda k, alpha: example4(alpha),
    # the adaptive study solves the example3 problem
    "example5": lambda k, alpha: example3(k, alpha),
}


def by_name(name: str, k: float = 1.0, alpha: float = None) -> ManufacturedProblem:
    """Look up a problem by CLI name with its default parameters."""
    if name not in REGISTRY:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(REGISTRY)}")
    if alpha is None:
        alpha = 1.2 if name == "example4" else 2.0 / 3.0
    return REGISTRY[name](k, alpha)
