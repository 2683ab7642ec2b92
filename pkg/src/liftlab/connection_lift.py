"""Complete lift of a symmetric connection to the (0,q)-tensor bundle.

The lifted coefficients at a bundle point (x, t) consist of the base
coefficients on horizontal index pairs, two mixed blocks that are
t-independent reshuffles of the base coefficients, and one block,
linear in t, that couples two horizontal lower indices to a fibre
upper index through derivatives of the base coefficients and the base
curvature.  All remaining blocks vanish identically.

The same module carries the cross-section geometry the lift induces:
the induced base connection, the second-fundamental-form analogue, the
totally-geodesic test, and the curvature tangency identity along the
cross-section.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sampling
from .bundle import BundlePoint, adapted_frame, check_rank, cross_section_point
from .expr import ScalarExpr
from .tensor import (
    ConnectionField,
    CovariantField,
    covariant_derivative_cov,
    curvature,
    iter_multi_indices,
    rank_multi_index,
    replace_slot,
)


class TorsionError(ValueError):
    """The lift and the cross-section geometry require a symmetric connection."""


def _require_symmetric(gamma: ConnectionField) -> ConnectionField:
    if not gamma.symmetric:
        raise TorsionError("connection must be declared symmetric (torsion-free)")
    return gamma


@dataclass(frozen=True)
class LiftedConnectionCoeffs:
    """Lifted coefficients at one bundle point, stored by block.

    Block naming follows the lower-index signature, in order: 'b' for a
    base (horizontal) index, 'f' for a fibre index.

    - base[h, m, s]: the base coefficients themselves;
    - mixed_bf[i_, m, s_]: fibre upper index, lower indices (base, fibre);
    - mixed_fb[i_, m_, s]: fibre upper index, lower indices (fibre, base);
    - fibre_bb[i_, m, s]: fibre upper index, two base lower indices, the
      only block that depends on the fibre coordinates (linearly).

    Every block not listed is structurally zero, which full_array()
    makes explicit.
    """

    n: int
    q: int
    base: np.ndarray
    mixed_bf: np.ndarray
    mixed_fb: np.ndarray
    fibre_bb: np.ndarray

    def full_array(self) -> np.ndarray:
        """Dense coefficients L[upper, first_lower, second_lower]."""
        n, nf = self.n, self.n**self.q
        dim = n + nf
        full = np.zeros((dim, dim, dim))
        full[:n, :n, :n] = self.base
        full[n:, :n, n:] = self.mixed_bf
        full[n:, n:, :n] = self.mixed_fb
        full[n:, :n, :n] = self.fibre_bb
        return full

    def symmetry_residual(self) -> float:
        """The lift of a symmetric connection is symmetric in its lower pair."""
        full = self.full_array()
        return float(np.max(np.abs(full - np.swapaxes(full, 1, 2))))


def complete_lift_connection(
    gamma: ConnectionField, at: BundlePoint, curvature_sign: float = 1.0
) -> LiftedConnectionCoeffs:
    """Lifted coefficients of a symmetric connection at a bundle point.

    curvature_sign scales the curvature contribution of the fibre_bb
    block.  It exists as a deliberate spoiler for negative controls in
    the consistency checks and must stay 1.0 for the actual lift.
    """
    _require_symmetric(gamma)
    if gamma.n != at.n:
        raise ValueError("connection and bundle point have different dimensions")
    n, q = at.n, at.q
    nf = n**q
    t = at.fibre_tensor()
    g = gamma.evaluate(at.base)  # g[h, j, i] = Gamma^h_{ji}
    dg = gamma.partials_at(at.base)  # dg[m, h, j, i] = d_m Gamma^h_{ji}
    r4 = curvature(gamma).evaluate(at.base)  # r4[k, j, i, l] = R_{kji}^l

    mixed_bf = np.zeros((nf, n, nf))
    mixed_fb = np.zeros((nf, nf, n))
    fibre_bb = np.zeros((nf, n, n))
    for mi in iter_multi_indices(n, q):
        row = rank_multi_index(mi, n)
        for c in range(q):
            ic = mi[c] - 1
            for a in range(1, n + 1):
                col = rank_multi_index(replace_slot(mi, c, a), n)
                # mixed blocks: minus a base coefficient, one slot replaced
                mixed_bf[row, :, col] -= g[a - 1, :, ic]
                mixed_fb[row, col, :] -= g[a - 1, :, ic]
                # single-replacement part of the t-linear block, as an
                # [m, s] grid:
                #   -d_m Gamma^a_{s ic} + Gamma^r_{m ic} Gamma^a_{sr}
                #                       + Gamma^r_{ms} Gamma^a_{r ic}
                term = -dg[:, a - 1, :, ic]
                term = term + np.einsum("rm,sr->ms", g[:, :, ic], g[a - 1])
                term = term + np.einsum("rms,r->ms", g, g[a - 1, :, ic])
                fibre_bb[row] += term * t[tuple(k - 1 for k in replace_slot(mi, c, a))]
        # two-slot quadratic part: ordered pairs of distinct slots, each
        # coefficient eating one slot and depositing its upper index there
        for b in range(q):
            for c in range(q):
                if b == c:
                    continue
                for rb in range(1, n + 1):
                    for rc in range(1, n + 1):
                        two = replace_slot(replace_slot(mi, b, rb), c, rc)
                        val = t[tuple(k - 1 for k in two)]
                        if val != 0.0:
                            fibre_bb[row] += val * np.outer(
                                g[rb - 1, :, mi[b] - 1], g[rc - 1, :, mi[c] - 1]
                            )
        # curvature part: R_{(slot index) s m}^l against t with that slot
        # replaced by l; r4 slice has axes [s, m], hence the transpose
        for d in range(q):
            for l in range(1, n + 1):
                val = t[tuple(k - 1 for k in replace_slot(mi, d, l))]
                if val != 0.0:
                    fibre_bb[row] += curvature_sign * val * r4[mi[d] - 1, :, :, l - 1].T
    return LiftedConnectionCoeffs(n, q, g.copy(), mixed_bf, mixed_fb, fibre_bb)


# ---------------------------------------------------------------------------
# Geometry of the cross-section under the lifted connection


def _frame_and_slope_arrays(xi: CovariantField, x):
    """Frame column matrix and the derivative of its columns at x."""
    n, q = xi.n, xi.q
    nf = n**q
    frame = adapted_frame(xi, x)
    bmat = frame.b  # [A, i]
    dd = xi.partials().partials().evaluate(x).reshape(n, n, nf)  # [j, i, fibre]
    db = np.zeros((n, n + nf, n))  # [j, A, i] = d_j of column i
    db[:, n:, :] = dd.transpose(0, 2, 1)
    return frame, bmat, db


def induced_connection(gamma: ConnectionField, xi: CovariantField, x) -> np.ndarray:
    """Connection induced on the cross-section by the lifted connection.

    Returns the coefficients at x as an array [h, j, i].  Assembled the
    long way through the lifted coefficients and the adapted coframe;
    agreeing with the base coefficients is the point of the check built
    on top of this.
    """
    _require_symmetric(gamma)
    check_rank(xi.q)
    x = np.asarray(x, dtype=np.float64)
    at = cross_section_point(xi, x)
    frame, bmat, db = _frame_and_slope_arrays(xi, x)
    lifted = complete_lift_connection(gamma, at).full_array()
    total = db.transpose(1, 0, 2) + np.einsum("ACB,Cj,Bi->Aji", lifted, bmat, bmat)
    return np.einsum("hA,Aji->hji", frame.b_inv, total)


@dataclass(frozen=True)
class GaussTensor:
    """Second-fundamental-form analogue of the cross-section.

    Components H_{ji,(h1..hq)} are stored as a rank q+2 symbolic grid
    ordered (j, i, h1..hq); symmetric in (j, i) for a symmetric base
    connection.  The cross-section is totally geodesic exactly when H
    vanishes.
    """

    n: int
    q: int
    field: CovariantField

    def component(self, j: int, i: int, mi) -> ScalarExpr:
        return self.field.component((j, i) + tuple(mi))

    def evaluate(self, point) -> np.ndarray:
        return self.field.evaluate(point)


def gauss_second_fundamental(gamma: ConnectionField, xi: CovariantField) -> GaussTensor:
    """H_{ji,(h1..hq)} = (nabla_j nabla_i xi)_{h1..hq}
                         + sum_s xi_{h1..l..hq} R_{hs i j}^l."""
    _require_symmetric(gamma)
    check_rank(xi.q)
    if gamma.n != xi.n:
        raise ValueError("connection and tensor field live on different charts")
    n, q = xi.n, xi.q
    second = covariant_derivative_cov(gamma, covariant_derivative_cov(gamma, xi))
    curv = curvature(gamma)
    flat = []
    for mi in iter_multi_indices(n, q + 2):
        j, i, rest = mi[0], mi[1], mi[2:]
        term = second.component(mi)
        for slot in range(q):
            for l in range(1, n + 1):
                term = term + xi.component(replace_slot(rest, slot, l)) * curv.component(
                    rest[slot], i, j, l
                )
        flat.append(term)
    return GaussTensor(n, q, CovariantField(n, q + 2, flat))


def is_totally_geodesic(
    gamma: ConnectionField,
    xi: CovariantField,
    points=None,
    tol: float = sampling.SYMBOLIC_RTOL,
) -> sampling.SampledCheck:
    """Sampled test for H = 0; passes exactly for a totally geodesic
    cross-section (up to tol)."""
    if points is None:
        points = sampling.sample_points(xi.n)
    values = np.abs(gauss_second_fundamental(gamma, xi).evaluate(points))
    per_point = values.reshape(values.shape[0], -1).max(axis=1)
    residual = float(per_point.max())
    return sampling.SampledCheck(
        residual <= tol, residual, tuple(sampling.worst_point(points, per_point))
    )


def gauss_consistency(
    gamma: ConnectionField,
    xi: CovariantField,
    points=None,
    tol: float = sampling.SYMBOLIC_RTOL,
    curvature_sign: float = 1.0,
) -> sampling.SampledCheck:
    """Check, on sampled points, that differentiating the adapted frame
    with the lifted connection reproduces the base connection plus H in
    the fibre directions:

      d_j B^A_i + L^A_{CB} B^C_j B^B_i - Gamma^h_{ji} B^A_h
        = H_{ji,(h1..hq)} C^A_{(h1..hq)}.

    The two sides come from independent code paths: block assembly of
    the lifted coefficients on the left, covariant derivatives plus an
    explicit curvature contraction on the right.  curvature_sign is
    passed through to the lift for negative controls.
    """
    _require_symmetric(gamma)
    if points is None:
        points = sampling.sample_points(xi.n)
    n, q = xi.n, xi.q
    nf = n**q
    gauss = gauss_second_fundamental(gamma, xi)
    per_point = np.zeros(len(points))
    for idx, p in enumerate(points):
        at = cross_section_point(xi, p)
        frame, bmat, db = _frame_and_slope_arrays(xi, p)
        lifted = complete_lift_connection(gamma, at, curvature_sign).full_array()
        g = gamma.evaluate(p)
        lhs = (
            db.transpose(1, 0, 2)
            + np.einsum("ACB,Cj,Bi->Aji", lifted, bmat, bmat)
            - np.einsum("hji,Ah->Aji", g, bmat)
        )
        rhs = np.zeros_like(lhs)
        rhs[n:] = gauss.evaluate(p).reshape(n, n, nf).transpose(2, 0, 1)
        per_point[idx] = np.max(np.abs(lhs - rhs))
    residual = float(per_point.max())
    return sampling.SampledCheck(
        residual <= tol, residual, tuple(sampling.worst_point(points, per_point))
    )


# ---------------------------------------------------------------------------
# Curvature tangency along the cross-section


def _curvature_cov_derivative(gamma: ConnectionField, point) -> np.ndarray:
    """(nabla_c R)_{kji}^l at a point, as dr[c, k, j, i, l]."""
    g = gamma.evaluate(point)
    r4 = curvature(gamma).evaluate(point)
    rp = curvature(gamma).partials_at(point)
    dr = rp.copy()
    dr -= np.einsum("mck,mjil->ckjil", g, r4)
    dr -= np.einsum("mcj,kmil->ckjil", g, r4)
    dr -= np.einsum("mci,kjml->ckjil", g, r4)
    dr += np.einsum("lcm,kjim->ckjil", g, r4)
    return dr


def curvature_tangency(
    gamma: ConnectionField,
    xi: CovariantField,
    points=None,
    tol: float = sampling.SYMBOLIC_RTOL,
) -> sampling.SampledCheck:
    """Sampled residual of the identity that makes curvature variation
    along the cross-section tangent to it:

      sum_s (nabla_k R_{hs i j}^l - nabla_j R_{hs i k}^l) xi_{h1..l..hq}
        = R_{kji}^l nabla_l xi
          + sum_s R_{kjhs}^l nabla_i xi_{..l..}
          - sum_s R_{hs ij}^l nabla_k xi_{..l..}
          + sum_s R_{hs ik}^l nabla_j xi_{..l..}.

    Satisfied identically for a locally symmetric base connection with
    parallel xi; the residual measures the failure otherwise.
    """
    _require_symmetric(gamma)
    check_rank(xi.q)
    if gamma.n != xi.n:
        raise ValueError("connection and tensor field live on different charts")
    if points is None:
        points = sampling.sample_points(xi.n)
    n, q = xi.n, xi.q
    nabla_xi = covariant_derivative_cov(gamma, xi)
    per_point = np.zeros(len(points))
    for idx, p in enumerate(points):
        r4 = curvature(gamma).evaluate(p)
        dr = _curvature_cov_derivative(gamma, p)
        xiv = xi.evaluate(p)
        dxi = nabla_xi.evaluate(p)  # [c, h1, .., hq]
        worst = 0.0
        for k in range(n):
            for j in range(n):
                for i in range(n):
                    for mi in iter_multi_indices(n, q):
                        mi0 = tuple(h - 1 for h in mi)
                        lhs = 0.0
                        rhs = 0.0
                        for l in range(n):
                            rhs += r4[k, j, i, l] * dxi[(l,) + mi0]
                        for slot in range(q):
                            hs = mi0[slot]
                            for l in range(n):
                                rep = replace_slot(mi0, slot, l)
                                lhs += (dr[k, hs, i, j, l] - dr[j, hs, i, k, l]) * xiv[rep]
                                rhs += r4[k, j, hs, l] * dxi[(i,) + rep]
                                rhs -= r4[hs, i, j, l] * dxi[(k,) + rep]
                                rhs += r4[hs, i, k, l] * dxi[(j,) + rep]
                        worst = max(worst, abs(lhs - rhs))
        per_point[idx] = worst
    residual = float(per_point.max())
    return sampling.SampledCheck(
        residual <= tol, residual, tuple(sampling.worst_point(points, per_point))
    )
