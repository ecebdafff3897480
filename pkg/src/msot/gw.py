r"""1D Gromov-Wasserstein, Hadamard-Wasserstein and Gaussian subspace detours.

The inner-GW objective between sorted 1D measures is minimized by one of
two north-west corner plans (ascending or reversed source), evaluated
through its moment decomposition.  The Hadamard-Wasserstein cost
:math:`\|x \odot x' - y \odot y'\|_2^2` is handled by a conditional
gradient whose tensor product has an :math:`O(d(n^2m + m^2n))` closed
form.  Subspace detours between Gaussians use the Monge-Knothe and
Monge-Independent closed forms.
"""

import itertools

import numpy as np
from scipy.linalg import null_space

from .errors import InstanceTooLarge, InvalidInput, MassMismatch
from .measures import MASS_ATOL
from .spd import sym_eig

HW_EXHAUSTIVE_LIMIT = 8


def nw_corner(a, b):
    """North-west corner coupling: greedy fill from the sorted top-left."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if abs(a.sum() - b.sum()) > MASS_ATOL:
        raise MassMismatch(f"total masses differ: {a.sum()} vs {b.sum()}")
    n, m = a.size, b.size
    plan = np.zeros((n, m))
    i = j = 0
    ra, rb = a[0], b[0]
    while i < n and j < m:
        move = min(ra, rb)
        plan[i, j] = move
        ra -= move
        rb -= move
        if ra == 0.0:
            i += 1
            ra = a[i] if i < n else 0.0
        if rb == 0.0:
            j += 1
            rb = b[j] if j < m else 0.0
    return plan


def _inner_gw_value(x, a, y, b, cross):
    # moment decomposition: constant terms plus -2 (sum_ij x_i y_j g_ij)^2
    mx = float(np.sum(a * x**2))
    my = float(np.sum(b * y**2))
    return mx**2 + my**2 - 2.0 * cross**2


def gw1d_inner(x, a, y, b):
    r"""Closed-form inner-GW between sorted 1D measures.

    Minimizes :math:`\sum_{ijkl} (x_i x_k - y_j y_l)^2
    \gamma_{ij}\gamma_{kl}` over couplings; an optimum lies in
    ``{NW(a, b), NW(a-, b)}`` and the ascending plan wins exact ties.
    Returns ``(plan, value)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(np.diff(x) < 0) or np.any(np.diff(y) < 0):
        raise InvalidInput("gw1d_inner expects sorted inputs")
    asc = nw_corner(a, b)
    desc = nw_corner(a[::-1], b)[::-1, :]
    cross_asc = float(x @ asc @ y)
    cross_desc = float(x @ desc @ y)
    val_asc = _inner_gw_value(x, a, y, b, cross_asc)
    val_desc = _inner_gw_value(x, a, y, b, cross_desc)
    if val_asc <= val_desc:
        return asc, val_asc
    return desc, val_desc


def hw_tensor(x_cloud, y_cloud, plan, axis_weights=None):
    r"""Tensor product :math:`\mathcal{L} \otimes \gamma` of the HW cost.

    .. math::
        \mathcal{L}\otimes\gamma = X^{(2)} p \mathbb{1}_m^T
        + \mathbb{1}_n q^T (Y^{(2)})^T - 2 \sum_t X_t \gamma Y_t^T,

    with :math:`X_t = (x_{it} x_{kt})_{ik}`, row/column marginals
    ``(p, q)`` of the plan, and optional per-axis weights implementing the
    separable degenerate cost.
    """
    x = np.asarray(x_cloud, dtype=float)
    y = np.asarray(y_cloud, dtype=float)
    plan = np.asarray(plan, dtype=float)
    if x.shape[1] != y.shape[1]:
        raise InvalidInput("clouds must share the ambient dimension")
    if plan.shape != (x.shape[0], y.shape[0]):
        raise InvalidInput("coupling shape does not match the clouds")
    d = x.shape[1]
    w = np.ones(d) if axis_weights is None else np.asarray(axis_weights, float)
    if w.shape != (d,) or np.any(w < 0):
        raise InvalidInput("axis weights must be d nonnegative reals")
    xt = np.einsum("it,kt->tik", x, x)  # (d, n, n)
    yt = np.einsum("jt,lt->tjl", y, y)
    x2 = np.einsum("t,tik->ik", w, xt**2)
    y2 = np.einsum("t,tjl->jl", w, yt**2)
    p = plan.sum(axis=1)
    q = plan.sum(axis=0)
    cross = np.einsum("t,tik,kl,tjl->ij", w, xt, plan, yt)
    return x2 @ p[:, None] + (y2 @ q)[None, :] - 2.0 * cross


def _hw_objective(x, y, plan, axis_weights):
    return float(np.sum(hw_tensor(x, y, plan, axis_weights) * plan))


def _linear_oracle_1d(x, y, a, b, grad_cross_sign):
    """Exact oracle for d = 1: comonotone or anticomonotone NW plan."""
    if grad_cross_sign >= 0:
        return nw_corner(a, b)
    return nw_corner(a[::-1], b)[::-1, :]


def _linear_oracle_exhaustive(grad, a, b):
    """Exact oracle by permutation enumeration (uniform weights, n = m)."""
    n, m = grad.shape
    if n != m or np.max(np.abs(a - 1.0 / n)) > 1e-12 or np.max(np.abs(b - 1.0 / n)) > 1e-12:
        raise InvalidInput(
            "the exhaustive oracle needs uniform weights with equal atom counts"
        )
    if n > HW_EXHAUSTIVE_LIMIT:
        raise InstanceTooLarge(
            f"exhaustive oracle limited to n <= {HW_EXHAUSTIVE_LIMIT}, got {n}"
        )
    rows = np.arange(n)
    best_val, best_perm = np.inf, None
    for perm in itertools.permutations(range(n)):
        val = float(np.sum(grad[rows, list(perm)]))
        if val < best_val:
            best_val, best_perm = val, perm
    plan = np.zeros((n, n))
    plan[rows, list(best_perm)] = 1.0 / n
    return plan


def hw_solve(x_cloud, y_cloud, a=None, b=None, axis_weights=None, n_iters=50, init=None):
    r"""Conditional gradient for the discrete Hadamard-Wasserstein problem.

    Each round solves the linear subproblem with cost
    :math:`2(\mathcal{L}\otimes\gamma)` exactly (sorted rule in 1D,
    permutation enumeration for ``d >= 2`` at desk scale) and steps with
    the exact line search of the quadratic objective.  Returns
    ``(plan, value)``.
    """
    x = np.asarray(x_cloud, dtype=float)
    y = np.asarray(y_cloud, dtype=float)
    n, d = x.shape
    m = y.shape[0]
    a = np.full(n, 1.0 / n) if a is None else np.asarray(a, dtype=float)
    b = np.full(m, 1.0 / m) if b is None else np.asarray(b, dtype=float)
    if abs(a.sum() - b.sum()) > MASS_ATOL:
        raise MassMismatch(f"total masses differ: {a.sum()} vs {b.sum()}")
    if d == 1:
        order_x = np.argsort(x[:, 0], kind="stable")
        order_y = np.argsort(y[:, 0], kind="stable")
    if init is not None:
        plan = np.asarray(init, dtype=float)
    elif d == 1:
        # seed with the 1D closed-form optimum; conditional gradient then
        # stays in the global basin instead of the one the product
        # coupling's cross-moment sign happens to pick
        sorted_plan, _ = gw1d_inner(
            x[order_x, 0], a[order_x], y[order_y, 0], b[order_y]
        )
        plan = np.zeros((n, m))
        plan[np.ix_(order_x, order_y)] = sorted_plan
    else:
        plan = np.outer(a, b) / b.sum()
    for _ in range(n_iters):
        grad = 2.0 * hw_tensor(x, y, plan, axis_weights)
        if d == 1:
            xw = x[order_x, 0]
            yw = y[order_y, 0]
            wts = np.ones(1) if axis_weights is None else axis_weights
            cross = float(wts[0] * (x[:, 0] @ plan @ y[:, 0]))
            sorted_plan = _linear_oracle_1d(xw, yw, a[order_x], b[order_y], cross)
            target = np.zeros_like(plan)
            target[np.ix_(order_x, order_y)] = sorted_plan
        else:
            target = _linear_oracle_exhaustive(grad, a, b)
        direction = target - plan
        # exact line search on the quadratic objective along the segment
        slope = float(np.sum(grad * direction))
        curvature = float(np.sum(hw_tensor(x, y, direction, axis_weights) * direction))
        if slope >= -1e-15:
            break
        if curvature <= 0:
            step = 1.0
        else:
            step = min(1.0, max(0.0, -slope / (2.0 * curvature)))
        if step == 0.0:
            break
        plan = plan + step * direction
    return plan, _hw_objective(x, y, plan, axis_weights)


# ---------------------------------------------------------------------------
# Gaussian subspace detours
# ---------------------------------------------------------------------------


def _gw_gaussian_map(sigma_src, sigma_tgt):
    """Gaussian inner/quadratic GW restricted map with the +identity signs.

    ``T = P_tgt A P_src^T`` with ``A = [D_tgt^{1/2} (D_src^{(q)})^{-1/2},
    0]`` for eigenvalues sorted decreasing; shape (q, p) with q <= p.
    """
    p = np.asarray(sigma_src).shape[0]
    q = np.asarray(sigma_tgt).shape[0]
    if q == 0:
        return np.zeros((0, p))
    if q > p:
        raise InvalidInput("target dimension must not exceed source dimension")
    vals_s, vecs_s = sym_eig(sigma_src)
    vals_t, vecs_t = sym_eig(sigma_tgt)
    if np.min(vals_s) <= 1e-12:
        raise InvalidInput("source covariance is numerically singular")
    a = np.zeros((q, p))
    a[:, :q] = np.diag(np.sqrt(np.maximum(vals_t, 0.0)) / np.sqrt(vals_s[:q]))
    return vecs_t @ a @ vecs_s.T


def _split_blocks(cov, basis, basis_perp):
    main = basis.T @ cov @ basis
    cross = basis_perp.T @ cov @ basis
    perp = basis_perp.T @ cov @ basis_perp
    return main, cross, perp


def _complete_basis(basis):
    p, k = basis.shape
    if k == p:
        return np.zeros((p, 0))
    return null_space(basis.T)


def mk_gaussian(sigma, lam, basis_e, basis_f):
    r"""Monge-Knothe map between Gaussians through subspace detours.

    ``sigma`` is the (p, p) source covariance, ``lam`` the (q, q) target
    covariance with ``p >= q``, and ``basis_e`` (p, k), ``basis_f`` (q, k)
    orthonormal bases of the detour subspaces (``k = k'``).  Returns the
    (q, p) matrix ``B`` with ``B Sigma B^T = Lambda``, block-triangular in
    the ``E + E^perp / F + F^perp`` bases, built from the Gaussian GW maps
    with the +identity sign convention.
    """
    sigma = np.asarray(sigma, dtype=float)
    lam = np.asarray(lam, dtype=float)
    ve = np.asarray(basis_e, dtype=float)
    vf = np.asarray(basis_f, dtype=float)
    p, k = ve.shape
    q, k2 = vf.shape
    if k != k2:
        raise InvalidInput("detour subspaces must share their dimension")
    if p < q:
        raise InvalidInput("need source dimension >= target dimension")
    ve_perp = _complete_basis(ve)
    vf_perp = _complete_basis(vf)
    sig_e, sig_cross, sig_perp = _split_blocks(sigma, ve, ve_perp)
    lam_f, lam_cross, lam_perp = _split_blocks(lam, vf, vf_perp)
    vals_e, _ = sym_eig(sig_e)
    if np.min(vals_e) <= 1e-12:
        raise InvalidInput("the source subspace covariance is singular")
    schur_sigma = sig_perp - sig_cross @ np.linalg.solve(sig_e, sig_cross.T)
    schur_lam = lam_perp - lam_cross @ np.linalg.solve(lam_f, lam_cross.T)
    t_ef = _gw_gaussian_map(sig_e, lam_f)
    t_perp = _gw_gaussian_map(schur_sigma, schur_lam)
    c = (lam_cross @ np.linalg.inv(t_ef.T) - t_perp @ sig_cross) @ np.linalg.inv(
        sig_e
    )
    b_blocks = np.zeros((q, p))
    b_blocks[:k, :k] = t_ef
    b_blocks[k:, :k] = c
    b_blocks[k:, k:] = t_perp
    v_src = np.concatenate([ve, ve_perp], axis=1)
    v_tgt = np.concatenate([vf, vf_perp], axis=1)
    return v_tgt @ b_blocks @ v_src.T


def mi_gaussian(sigma, lam, basis_e, basis_f):
    r"""Monge-Independent joint covariance through subspace detours.

    For centered Gaussians, returns the (p+q, p+q) covariance of
    :math:`\pi_{\mathrm{MI}}` with cross block
    :math:`C = (V_E\Sigma_E + V_{E^\perp}\Sigma_{E^\perp E}) T_{E,F}^T
    (V_F^T + \Lambda_F^{-1}\Lambda_{F^\perp F}^T V_{F^\perp}^T)`.
    """
    sigma = np.asarray(sigma, dtype=float)
    lam = np.asarray(lam, dtype=float)
    ve = np.asarray(basis_e, dtype=float)
    vf = np.asarray(basis_f, dtype=float)
    ve_perp = _complete_basis(ve)
    vf_perp = _complete_basis(vf)
    sig_e, sig_cross, _ = _split_blocks(sigma, ve, ve_perp)
    lam_f, lam_cross, _ = _split_blocks(lam, vf, vf_perp)
    t_ef = _gw_gaussian_map(sig_e, lam_f)
    c = (
        (ve @ sig_e + ve_perp @ sig_cross)
        @ t_ef.T
        @ (vf.T + np.linalg.solve(lam_f, lam_cross.T) @ vf_perp.T)
    )
    p, q = sigma.shape[0], lam.shape[0]
    gamma = np.zeros((p + q, p + q))
    gamma[:p, :p] = sigma
    gamma[:p, p:] = c
    gamma[p:, :p] = c.T
    gamma[p:, p:] = lam
    return gamma
