"""Named example inputs, plus seeded random fields used as probes."""

from __future__ import annotations

import numpy as np

from . import expr
from .tensor import (
    ConnectionField,
    CovariantField,
    EndomorphismField,
    VectorField,
)


def standard_complex_r2() -> EndomorphismField:
    """The constant rotation-by-90-degrees structure on a 2d chart:
    phi^2_1 = 1, phi^1_2 = -1, squares to minus the identity."""
    return EndomorphismField(2, [[0.0, -1.0], [1.0, 0.0]])


def sphere_chart_connection() -> ConnectionField:
    """Levi-Civita coefficients of the unit round metric in polar
    coordinates (x1 = colatitude, x2 = longitude)."""
    return ConnectionField.from_dict(
        2,
        {
            (1, 2, 2): "-sin(x1)*cos(x1)",
            (2, 1, 2): "cos(x1)/sin(x1)",
            (2, 2, 1): "cos(x1)/sin(x1)",
        },
    )


def sphere_chart_metric() -> CovariantField:
    """The round metric itself as a (0,2) field: diag(1, sin(x1)^2)."""
    return CovariantField(2, 2, {(1, 1): 1.0, (2, 2): "sin(x1)^2"})


def flat_connection(n: int) -> ConnectionField:
    """All coefficients zero."""
    return ConnectionField.zeros(n)


# What each named preset provides, by scenario field.
PRESETS = {
    "standard_complex_r2": {"phi": standard_complex_r2},
    "sphere_chart": {"gamma": sphere_chart_connection, "xi": sphere_chart_metric},
    "flat": {"gamma": flat_connection},
}


def describe_presets() -> list[str]:
    lines = [
        "standard_complex_r2  phi    n=2 rotation structure, phi^2 = -id",
        "sphere_chart         gamma  n=2 round-sphere polar-chart connection",
        "sphere_chart         xi     n=2 round metric diag(1, sin(x1)^2), q=2",
        "flat                 gamma  zero connection (any n)",
    ]
    return lines


# ---------------------------------------------------------------------------
# Seeded random polynomial fields (probes and fuzz inputs)


def random_polynomial_expr(rng: np.random.Generator, n: int, degree: int = 2,
                           scale: float = 0.5) -> expr.ScalarExpr:
    """Random polynomial in x1..xn with uniform(-scale, scale) coefficients."""
    e = expr.const(rng.uniform(-scale, scale))
    if degree >= 1:
        for i in range(1, n + 1):
            e = e + rng.uniform(-scale, scale) * expr.var(i)
    if degree >= 2:
        for i in range(1, n + 1):
            for j in range(i, n + 1):
                e = e + rng.uniform(-scale, scale) * (expr.var(i) * expr.var(j))
    return e


def random_covariant_field(rng: np.random.Generator, n: int, q: int,
                           degree: int = 2, scale: float = 0.5) -> CovariantField:
    return CovariantField(
        n, q, [random_polynomial_expr(rng, n, degree, scale) for _ in range(n**q)]
    )


def random_vector_field(rng: np.random.Generator, n: int,
                        degree: int = 2, scale: float = 0.5) -> VectorField:
    return VectorField(n, [random_polynomial_expr(rng, n, degree, scale) for _ in range(n)])


def random_symmetric_connection(rng: np.random.Generator, n: int,
                                degree: int = 1, scale: float = 0.4) -> ConnectionField:
    """Random polynomial coefficients, symmetrized in the lower pair."""
    grid = [[[None] * n for _ in range(n)] for _ in range(n)]
    for h in range(n):
        for j in range(n):
            for i in range(j, n):
                e = random_polynomial_expr(rng, n, degree, scale)
                grid[h][j][i] = e
                grid[h][i][j] = e
    return ConnectionField(n, grid, symmetric=True)
