"""Tensor fields on an n-dimensional chart, with symbolic components.

Index conventions used throughout the package:

- coordinates are x1..xn; partial derivatives are exact symbolic
  derivatives of component expressions;
- a (0,q) field A stores components A_{j1..jq} flat, ordered by rank();
- an endomorphism phi stores phi^i_j as comps[i-1][j-1], so the
  evaluated matrix acts on column vectors;
- a connection stores Gamma^h_{ji} as comps[h-1][j-1][i-1] with the
  derivative (first) subscript j;
- curvature components follow
  R_{kji}^l = d_k Gamma^l_{ji} - d_j Gamma^l_{ki}
              + Gamma^l_{km} Gamma^m_{ji} - Gamma^l_{jm} Gamma^m_{ki}.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import expr
from .expr import ScalarExpr, diff

MAX_DIM = 4

MultiIndex = tuple[int, ...]


def rank_multi_index(mi: Sequence[int], n: int) -> int:
    """Row-major position of a multi-index (entries 1..n) in 0..n^q - 1."""
    q = len(mi)
    r = 0
    for slot, j in enumerate(mi, start=1):
        if not 1 <= j <= n:
            raise ValueError(f"multi-index entry {j} outside 1..{n}")
        r += (j - 1) * n ** (q - slot)
    return r


def unrank_multi_index(r: int, n: int, q: int) -> MultiIndex:
    """Inverse of rank_multi_index for fixed n, q."""
    if not 0 <= r < n**q:
        raise ValueError(f"rank {r} outside 0..{n ** q - 1}")
    out = []
    for slot in range(q):
        out.append(r // n ** (q - 1 - slot) % n + 1)
    return tuple(out)


def iter_multi_indices(n: int, q: int) -> Iterator[MultiIndex]:
    """All multi-indices in rank order (lexicographic, last slot fastest)."""
    return itertools.product(range(1, n + 1), repeat=q)


def replace_slot(mi: MultiIndex, slot: int, value: int) -> MultiIndex:
    """Copy of mi with 0-based slot replaced."""
    return mi[:slot] + (value,) + mi[slot + 1 :]


def _as_expr(v, n: int) -> ScalarExpr:
    if isinstance(v, str):
        return expr.parse(v, n)
    if isinstance(v, (int, float)):
        return expr.Const(float(v))
    if isinstance(v, ScalarExpr):
        if expr.max_axis(v) > n:
            raise ValueError(
                f"component uses x{expr.max_axis(v)} but the chart has dimension {n}"
            )
        return v
    raise TypeError(f"cannot use {type(v).__name__} as a field component")


def _check_dim(n: int) -> int:
    if not 1 <= n <= MAX_DIM:
        raise ValueError(f"chart dimension must be in 1..{MAX_DIM}, got {n}")
    return n


def _finite_or_raise(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ArithmeticError(f"{what} evaluated non-finite; point is singular")
    return arr


class CovariantField:
    """A (0,q) tensor field with one symbolic component per multi-index.

    Components live in a flat tuple ordered by rank_multi_index, which is
    also the fibre-coordinate order used by the bundle machinery.  q >= 1
    always; ranks above 3 only occur as outputs of derivative operators.
    """

    __slots__ = ("n", "q", "comps", "_cache")

    def __init__(self, n: int, q: int, components):
        self.n = _check_dim(n)
        if q < 1:
            raise ValueError(f"covariant rank must be >= 1, got {q}")
        self.q = q
        size = n**q
        if isinstance(components, Mapping):
            flat = [expr.Const(0.0)] * size
            for mi, v in components.items():
                flat[rank_multi_index(tuple(mi), n)] = _as_expr(v, n)
        else:
            flat = [_as_expr(v, n) for v in components]
            if len(flat) != size:
                raise ValueError(f"expected {size} components, got {len(flat)}")
        self.comps = tuple(flat)
        self._cache = {}

    @classmethod
    def zeros(cls, n: int, q: int) -> "CovariantField":
        return cls(n, q, [0.0] * n**q)

    def component(self, mi: Sequence[int]) -> ScalarExpr:
        return self.comps[rank_multi_index(tuple(mi), self.n)]

    def evaluate(self, point) -> np.ndarray:
        """Component array of shape (n,)*q at one point, or (m,)+(n,)*q
        for a batch of m points."""
        p = np.asarray(point, dtype=np.float64)
        out = np.empty(p.shape[:-1] + (self.n,) * self.q)
        with np.errstate(all="ignore"):
            for r, mi in enumerate(iter_multi_indices(self.n, self.q)):
                out[(...,) + tuple(j - 1 for j in mi)] = self.comps[r].value(p)
        return _finite_or_raise(out, "tensor field")

    def partials(self) -> "CovariantField":
        """Plain partial-derivative grid d_i A_{j1..jq} as a rank q+1 field
        (derivative axis first).  Not itself a tensor."""
        if "partials" not in self._cache:
            flat = []
            for i in range(1, self.n + 1):
                flat.extend(diff(c, i) for c in self.comps)
            self._cache["partials"] = CovariantField(self.n, self.q + 1, flat)
        return self._cache["partials"]


class VectorField:
    __slots__ = ("n", "comps")

    def __init__(self, n: int, components):
        self.n = _check_dim(n)
        flat = [_as_expr(v, n) for v in components]
        if len(flat) != n:
            raise ValueError(f"expected {n} components, got {len(flat)}")
        self.comps = tuple(flat)

    def component(self, i: int) -> ScalarExpr:
        return self.comps[i - 1]

    def evaluate(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=np.float64)
        out = np.empty(p.shape[:-1] + (self.n,))
        with np.errstate(all="ignore"):
            for i, c in enumerate(self.comps):
                out[..., i] = c.value(p)
        return _finite_or_raise(out, "vector field")


class EndomorphismField:
    """A (1,1) tensor field phi^i_j; rows index the upper slot."""

    __slots__ = ("n", "comps")

    def __init__(self, n: int, components):
        self.n = _check_dim(n)
        rows = [[_as_expr(v, n) for v in row] for row in components]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"expected an {n} x {n} component grid")
        self.comps = tuple(tuple(r) for r in rows)

    def component(self, i: int, j: int) -> ScalarExpr:
        return self.comps[i - 1][j - 1]

    def evaluate(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=np.float64)
        out = np.empty(p.shape[:-1] + (self.n, self.n))
        with np.errstate(all="ignore"):
            for i in range(self.n):
                for j in range(self.n):
                    out[..., i, j] = self.comps[i][j].value(p)
        return _finite_or_raise(out, "endomorphism field")


class OneTwoTensorField:
    """A (1,2) tensor field T^l_{jk}, stored as comps[l-1][j-1][k-1]."""

    __slots__ = ("n", "comps")

    def __init__(self, n: int, components):
        self.n = _check_dim(n)
        self.comps = tuple(
            tuple(tuple(_as_expr(v, n) for v in row) for row in plane)
            for plane in components
        )

    def component(self, l: int, j: int, k: int) -> ScalarExpr:
        return self.comps[l - 1][j - 1][k - 1]

    def evaluate(self, point) -> np.ndarray:
        """Array T[l, j, k] with the upper index first."""
        p = np.asarray(point, dtype=np.float64)
        n = self.n
        out = np.empty(p.shape[:-1] + (n, n, n))
        with np.errstate(all="ignore"):
            for l in range(n):
                for j in range(n):
                    for k in range(n):
                        out[..., l, j, k] = self.comps[l][j][k].value(p)
        return _finite_or_raise(out, "(1,2) tensor field")


class ConnectionField:
    """Affine connection coefficients Gamma^h_{ji} on the chart.

    The symmetric flag asserts Gamma^h_{ji} = Gamma^h_{ij}; operators
    that require a torsion-free connection check it.
    """

    __slots__ = ("n", "comps", "symmetric", "_cache")

    def __init__(self, n: int, components, symmetric: bool = True):
        self.n = _check_dim(n)
        grids = [[[_as_expr(v, n) for v in row] for row in plane] for plane in components]
        if len(grids) != n or any(
            len(p) != n or any(len(r) != n for r in p) for p in grids
        ):
            raise ValueError(f"expected an {n} x {n} x {n} coefficient grid")
        self.comps = tuple(tuple(tuple(r) for r in p) for p in grids)
        self.symmetric = bool(symmetric)
        self._cache = {}

    @classmethod
    def zeros(cls, n: int) -> "ConnectionField":
        z = [[[0.0] * n for _ in range(n)] for _ in range(n)]
        return cls(n, z, symmetric=True)

    @classmethod
    def from_dict(cls, n: int, entries: Mapping, symmetric: bool = True) -> "ConnectionField":
        """entries maps (h, j, i) to a component; unset entries are zero."""
        grid = [[[expr.Const(0.0)] * n for _ in range(n)] for _ in range(n)]
        for (h, j, i), v in entries.items():
            grid[h - 1][j - 1][i - 1] = _as_expr(v, n)
        return cls(n, grid, symmetric=symmetric)

    def component(self, h: int, j: int, i: int) -> ScalarExpr:
        return self.comps[h - 1][j - 1][i - 1]

    def evaluate(self, point) -> np.ndarray:
        """Array G[h, j, i] = Gamma^h_{ji}."""
        p = np.asarray(point, dtype=np.float64)
        n = self.n
        out = np.empty(p.shape[:-1] + (n, n, n))
        with np.errstate(all="ignore"):
            for h in range(n):
                for j in range(n):
                    for i in range(n):
                        out[..., h, j, i] = self.comps[h][j][i].value(p)
        return _finite_or_raise(out, "connection")

    def partials_at(self, point) -> np.ndarray:
        """Array dG[m, h, j, i] = d_m Gamma^h_{ji}."""
        if "partials" not in self._cache:
            self._cache["partials"] = tuple(
                tuple(
                    tuple(tuple(diff(c, m) for c in row) for row in plane)
                    for plane in self.comps
                )
                for m in range(1, self.n + 1)
            )
        grid = self._cache["partials"]
        p = np.asarray(point, dtype=np.float64)
        n = self.n
        out = np.empty(p.shape[:-1] + (n, n, n, n))
        with np.errstate(all="ignore"):
            for m in range(n):
                for h in range(n):
                    for j in range(n):
                        for i in range(n):
                            out[..., m, h, j, i] = grid[m][h][j][i].value(p)
        return _finite_or_raise(out, "connection partials")

    def symmetry_residual(self, points) -> float:
        g = self.evaluate(points)
        return float(np.max(np.abs(g - np.swapaxes(g, -2, -1))))


class CurvatureField:
    """Curvature components R_{kji}^l of a connection, lower indices first."""

    __slots__ = ("n", "comps", "_cache")

    def __init__(self, n: int, components):
        self.n = _check_dim(n)
        self.comps = tuple(
            tuple(
                tuple(tuple(_as_expr(v, n) for v in row) for row in plane)
                for plane in block
            )
            for block in components
        )
        self._cache = {}

    def component(self, k: int, j: int, i: int, l: int) -> ScalarExpr:
        return self.comps[k - 1][j - 1][i - 1][l - 1]

    def evaluate(self, point) -> np.ndarray:
        """Array R[k, j, i, l] = R_{kji}^l."""
        p = np.asarray(point, dtype=np.float64)
        n = self.n
        out = np.empty(p.shape[:-1] + (n, n, n, n))
        with np.errstate(all="ignore"):
            for k in range(n):
                for j in range(n):
                    for i in range(n):
                        for l in range(n):
                            out[..., k, j, i, l] = self.comps[k][j][i][l].value(p)
        return _finite_or_raise(out, "curvature")

    def partials_at(self, point) -> np.ndarray:
        """Array dR[m, k, j, i, l] = d_m R_{kji}^l."""
        if "partials" not in self._cache:
            self._cache["partials"] = tuple(
                tuple(
                    tuple(
                        tuple(
                            tuple(diff(c, m) for c in row) for row in plane
                        )
                        for plane in block
                    )
                    for block in self.comps
                )
                for m in range(1, self.n + 1)
            )
        grid = self._cache["partials"]
        p = np.asarray(point, dtype=np.float64)
        n = self.n
        out = np.empty(p.shape[:-1] + (n, n, n, n, n))
        with np.errstate(all="ignore"):
            for m in range(n):
                for k in range(n):
                    for j in range(n):
                        for i in range(n):
                            for l in range(n):
                                out[..., m, k, j, i, l] = grid[m][k][j][i][l].value(p)
        return _finite_or_raise(out, "curvature partials")


# ---------------------------------------------------------------------------
# Operators


def lie_derivative_cov(v: VectorField, a: CovariantField) -> CovariantField:
    """(L_V A)_{j1..jq} = V^m d_m A_{j1..jq} + sum_s A_{j1..m..jq} d_{js} V^m."""
    if v.n != a.n:
        raise ValueError("vector field and tensor field live on different charts")
    n, q = a.n, a.q
    flat = []
    for mi in iter_multi_indices(n, q):
        term = expr.Const(0.0)
        for m in range(1, n + 1):
            term = term + v.component(m) * diff(a.component(mi), m)
        for slot in range(q):
            for m in range(1, n + 1):
                term = term + a.component(replace_slot(mi, slot, m)) * diff(
                    v.component(m), mi[slot]
                )
        flat.append(term)
    return CovariantField(n, q, flat)


def lie_derivative_endo(v: VectorField, phi: EndomorphismField) -> EndomorphismField:
    """(L_V phi)^i_j = V^m d_m phi^i_j - phi^m_j d_m V^i + phi^i_m d_j V^m."""
    if v.n != phi.n:
        raise ValueError("vector field and endomorphism live on different charts")
    n = phi.n
    rows = []
    for i in range(1, n + 1):
        row = []
        for j in range(1, n + 1):
            term = expr.Const(0.0)
            for m in range(1, n + 1):
                term = term + v.component(m) * diff(phi.component(i, j), m)
                term = term - phi.component(m, j) * diff(v.component(i), m)
                term = term + phi.component(i, m) * diff(v.component(m), j)
            row.append(term)
        rows.append(row)
    return EndomorphismField(n, rows)


def apply_endo_cov(phi: EndomorphismField, a: CovariantField) -> CovariantField:
    """First-slot action (phi A)_{j1..jq} = phi^m_{j1} A_{m j2..jq}."""
    if phi.n != a.n:
        raise ValueError("endomorphism and tensor field live on different charts")
    n, q = a.n, a.q
    flat = []
    for mi in iter_multi_indices(n, q):
        term = expr.Const(0.0)
        for m in range(1, n + 1):
            term = term + phi.component(m, mi[0]) * a.component(replace_slot(mi, 0, m))
        flat.append(term)
    return CovariantField(n, q, flat)


def apply_endo_vec(phi: EndomorphismField, v: VectorField) -> VectorField:
    """(phi V)^i = phi^i_m V^m."""
    if phi.n != v.n:
        raise ValueError("endomorphism and vector field live on different charts")
    n = phi.n
    comps = []
    for i in range(1, n + 1):
        term = expr.Const(0.0)
        for m in range(1, n + 1):
            term = term + phi.component(i, m) * v.component(m)
        comps.append(term)
    return VectorField(n, comps)


def compose_endo(f: EndomorphismField, g: EndomorphismField) -> EndomorphismField:
    """(f g)^i_j = f^i_m g^m_j."""
    if f.n != g.n:
        raise ValueError("endomorphisms live on different charts")
    n = f.n
    rows = []
    for i in range(1, n + 1):
        row = []
        for j in range(1, n + 1):
            term = expr.Const(0.0)
            for m in range(1, n + 1):
                term = term + f.component(i, m) * g.component(m, j)
            row.append(term)
        rows.append(row)
    return EndomorphismField(n, rows)


def contract_slot_endo(a: CovariantField, phi: EndomorphismField, slot: int) -> CovariantField:
    """Contraction of phi into one lower slot:
    out_{j1..jq} = phi^m_{j(slot)} A_{j1..m..jq}, slot counted from 1."""
    if phi.n != a.n:
        raise ValueError("endomorphism and tensor field live on different charts")
    if not 1 <= slot <= a.q:
        raise ValueError(f"slot {slot} outside 1..{a.q}")
    n, q = a.n, a.q
    flat = []
    for mi in iter_multi_indices(n, q):
        term = expr.Const(0.0)
        for m in range(1, n + 1):
            term = term + phi.component(m, mi[slot - 1]) * a.component(
                replace_slot(mi, slot - 1, m)
            )
        flat.append(term)
    return CovariantField(n, q, flat)


def covariant_derivative_cov(gamma: ConnectionField, a: CovariantField) -> CovariantField:
    """(nabla A)_{i j1..jq} = d_i A_{j1..jq} - sum_s Gamma^m_{i js} A_{j1..m..jq}.

    The derivative index comes first in the result's multi-index.
    """
    if gamma.n != a.n:
        raise ValueError("connection and tensor field live on different charts")
    n, q = a.n, a.q
    flat = []
    for mi in iter_multi_indices(n, q + 1):
        i, rest = mi[0], mi[1:]
        term = diff(a.component(rest), i)
        for slot in range(q):
            for m in range(1, n + 1):
                term = term - gamma.component(m, i, rest[slot]) * a.component(
                    replace_slot(rest, slot, m)
                )
        flat.append(term)
    return CovariantField(n, q + 1, flat)


def curvature(gamma: ConnectionField) -> CurvatureField:
    """Curvature of the connection, cached on the connection instance."""
    if "curvature" not in gamma._cache:
        n = gamma.n
        blocks = []
        for k in range(1, n + 1):
            block = []
            for j in range(1, n + 1):
                plane = []
                for i in range(1, n + 1):
                    row = []
                    for l in range(1, n + 1):
                        term = diff(gamma.component(l, j, i), k) - diff(
                            gamma.component(l, k, i), j
                        )
                        for m in range(1, n + 1):
                            term = term + gamma.component(l, k, m) * gamma.component(m, j, i)
                            term = term - gamma.component(l, j, m) * gamma.component(m, k, i)
                        row.append(term)
                    plane.append(row)
                block.append(plane)
            blocks.append(block)
        gamma._cache["curvature"] = CurvatureField(n, blocks)
    return gamma._cache["curvature"]
