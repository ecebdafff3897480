r"""Sliced distances on symmetric positive definite matrices.

The space :math:`S_d^{++}(\mathbb{R})` carries two metrics here: the flat
Log-Euclidean one, :math:`d_{LE}(X,Y) = \|\log X - \log Y\|_F`, and the
curved Affine-Invariant one,
:math:`d_{AI}(X,Y) = \sqrt{\operatorname{tr}(\log(X^{-1}Y)^2)}`.  Slicing
directions are unit-Frobenius symmetric matrices drawn uniformly by
conjugating a uniform sphere point with a Haar orthogonal matrix.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDirection, InvalidInput, NotPositiveDefinite
from .measures import validate_weights, wasserstein_1d_batched
from .sliced import sample_directions, sw_p

SYM_ATOL = 1e-10
EIG_FLOOR = 1e-13


def _check_symmetric(m):
    m = np.asarray(m, dtype=float)
    if m.ndim == 2:
        m = m[None]
    if m.shape[-1] != m.shape[-2]:
        raise InvalidInput("matrices must be square")
    err = np.max(np.abs(m - np.swapaxes(m, -1, -2)))
    scale = max(1.0, float(np.max(np.abs(m))))
    if err > SYM_ATOL * scale:
        raise InvalidInput(f"matrices not symmetric, asymmetry {err:.2e}")
    return m


def sym_eig(m):
    """Spectral decomposition of a symmetric matrix, eigenvalues descending.

    Returns ``(eigvals, eigvecs)`` with ``m = eigvecs @ diag(eigvals) @
    eigvecs.T``; batched over a leading axis when present.
    """
    arr = _check_symmetric(m)
    vals, vecs = np.linalg.eigh(arr)
    vals, vecs = vals[..., ::-1], vecs[..., ::-1]
    if np.asarray(m).ndim == 2:
        return vals[0], vecs[0]
    return vals, vecs


def spd_log(m):
    """Matrix logarithm of SPD matrices via the spectral decomposition."""
    vals, vecs = sym_eig(m)
    if np.min(vals) <= EIG_FLOOR:
        raise NotPositiveDefinite(f"eigenvalue {np.min(vals):.2e} <= {EIG_FLOOR}")
    lv = np.log(vals)
    return np.einsum("...ik,...k,...jk->...ij", vecs, lv, vecs)


def spd_exp(s):
    """Matrix exponential of symmetric matrices."""
    vals, vecs = sym_eig(s)
    ev = np.exp(vals)
    return np.einsum("...ik,...k,...jk->...ij", vecs, ev, vecs)


def dist_le(x, y):
    """Log-Euclidean distance ``||log X - log Y||_F``."""
    diff = spd_log(x) - spd_log(y)
    return float(np.linalg.norm(diff))


def dist_ai(x, y):
    r"""Affine-invariant distance :math:`\sqrt{\mathrm{tr}(\log(X^{-1}Y)^2)}`.

    Evaluated through the symmetric form
    :math:`\|\log(X^{-1/2} Y X^{-1/2})\|_F`.
    """
    vals, vecs = sym_eig(x)
    if np.min(vals) <= EIG_FLOOR:
        raise NotPositiveDefinite("first argument not positive definite")
    inv_sqrt = vecs @ np.diag(vals**-0.5) @ vecs.T
    middle = inv_sqrt @ np.asarray(y, dtype=float) @ inv_sqrt
    mid_vals, _ = sym_eig((middle + middle.T) / 2.0)
    if np.min(mid_vals) <= EIG_FLOOR:
        raise NotPositiveDefinite("second argument not positive definite")
    return float(np.linalg.norm(np.log(mid_vals)))


def sample_unit_symmetric(d, n_projections, seed=0):
    """Uniform unit-Frobenius symmetric slicing directions.

    ``A = P diag(theta) P^T`` with ``P`` Haar-distributed (Gaussian QR with
    a positive-diagonal sign fix) and ``theta`` uniform on the sphere;
    returns an ``(L, d, d)`` stack.
    """
    if d < 2:
        raise InvalidInput("symmetric slicing needs d >= 2")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_projections, d, d))
    q, r = np.linalg.qr(z)
    signs = np.sign(np.einsum("...ii->...i", r))
    signs[signs == 0] = 1.0
    q = q * signs[:, None, :]
    theta = rng.standard_normal((n_projections, d))
    theta /= np.linalg.norm(theta, axis=1, keepdims=True)
    return np.einsum("lik,lk,ljk->lij", q, theta, q)


def coordinate_le(m, a):
    r"""Geodesic coordinate :math:`\mathrm{Tr}(A \log M)` on the LE geodesic.

    Accepts a single matrix or a cloud ``(n, d, d)`` and a single direction
    or a stack ``(L, d, d)``; returns scalars, vectors or an ``(n, L)``
    matrix accordingly.  Equals minus the Log-Euclidean Busemann function.
    """
    logs = spd_log(m)
    single_m = logs.ndim == 2
    single_a = np.asarray(a).ndim == 2
    if single_m:
        logs = logs[None]
    a_stack = np.asarray(a, dtype=float)
    if single_a:
        a_stack = a_stack[None]
    coords = np.einsum("nij,lij->nl", logs, a_stack)
    if single_m and single_a:
        return float(coords[0, 0])
    if single_m:
        return coords[0]
    if single_a:
        return coords[:, 0]
    return coords


def _udu_diagonal(m):
    """Diagonal of the UDU factorization ``M = g D g^T``, g unit upper.

    Computed with the exchange trick ``UDU(M) = J LDL(J M J) J`` where J is
    the index reversal, and LDL through a Cholesky factor.
    """
    flipped = m[::-1, ::-1]
    try:
        chol = np.linalg.cholesky(flipped)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return np.diag(chol)[::-1] ** 2


def busemann_ai(m, a):
    r"""Affine-invariant Busemann function of the geodesic ``t -> exp(tA)``.

    Diagonalize ``A = P \tilde A P^T`` with eigenvalues sorted descending,
    rotate ``\tilde M = P^T M P``, take the diagonal ``D`` of its UDU
    factorization and return :math:`-\langle \tilde A, \log D\rangle_F`.
    Requires pairwise distinct eigenvalues of ``A`` (almost sure for the
    uniform directions).
    """
    a_vals, a_vecs = sym_eig(a)
    if np.min(np.diff(a_vals[::-1])) < 1e-10:
        raise DegenerateDirection("direction eigenvalues collide; resample")
    m = np.asarray(m, dtype=float)
    single = m.ndim == 2
    stack = m[None] if single else m
    out = np.empty(stack.shape[0])
    for i, mat in enumerate(stack):
        rotated = a_vecs.T @ mat @ a_vecs
        diag = _udu_diagonal((rotated + rotated.T) / 2.0)
        if np.min(diag) <= EIG_FLOOR:
            raise NotPositiveDefinite("matrix not positive definite")
        out[i] = -float(np.dot(a_vals, np.log(diag)))
    return float(out[0]) if single else out


def _cloud_weights(cloud, weights):
    n = cloud.shape[0]
    if weights is None:
        return np.full(n, 1.0 / n)
    return validate_weights(weights, n=n)


def spdsw(x, y, slices, p=2.0, x_weights=None, y_weights=None):
    r"""Log-Euclidean SPD sliced Wasserstein, :math:`SPDSW_p^p`.

    Projects both clouds with the geodesic coordinate
    :math:`\mathrm{Tr}(A \log M)` over the symmetric slices and averages
    the exact 1D costs.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = _cloud_weights(x, x_weights)
    b = _cloud_weights(y, y_weights)
    x_coords = coordinate_le(x, slices)
    y_coords = coordinate_le(y, slices)
    return float(np.mean(wasserstein_1d_batched(x_coords, y_coords, a, b, p=p)))


def hspdsw(x, y, slices, p=2.0, x_weights=None, y_weights=None):
    """Affine-invariant horospherical SPD sliced Wasserstein."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = _cloud_weights(x, x_weights)
    b = _cloud_weights(y, y_weights)
    x_coords = np.stack([-busemann_ai(x, s) for s in slices], axis=1)
    y_coords = np.stack([-busemann_ai(y, s) for s in slices], axis=1)
    return float(np.mean(wasserstein_1d_batched(x_coords, y_coords, a, b, p=p)))


def sym_to_vec(s):
    """Vectorize symmetric matrices isometrically for the Frobenius norm.

    Off-diagonal entries are scaled by sqrt(2) so the Euclidean norm of the
    output equals ``||S||_F``.
    """
    s = np.asarray(s, dtype=float)
    single = s.ndim == 2
    stack = s[None] if single else s
    d = stack.shape[-1]
    iu = np.triu_indices(d, k=1)
    diag = np.einsum("...ii->...i", stack)
    off = stack[..., iu[0], iu[1]] * np.sqrt(2.0)
    out = np.concatenate([diag, off], axis=-1)
    return out[0] if single else out


def logsw(x, y, dirs, p=2.0, x_weights=None, y_weights=None):
    """Euclidean SW between log-pushforwards (the flat-metric ablation).

    The log images are vectorized with the sqrt(2) off-diagonal weighting so
    the flat metric equals the Frobenius norm, then sliced with uniform
    sphere directions on the d(d+1)/2 coordinates.
    """
    x_vec = sym_to_vec(spd_log(np.asarray(x, dtype=float)))
    y_vec = sym_to_vec(spd_log(np.asarray(y, dtype=float)))
    return sw_p(x_vec, y_vec, dirs, p=p, x_weights=x_weights, y_weights=y_weights)


def logsw_directions(d, n_projections, seed=0):
    """Sphere directions in the vectorized symmetric space of dimension d."""
    return sample_directions(d * (d + 1) // 2, n_projections, seed=seed)


@dataclass(frozen=True)
class QuantileFeatures:
    """Per-slice quantile evaluations backing the sliced kernel."""

    values: np.ndarray  # (M, L), scaled by 1/sqrt(M L)
    grid: np.ndarray  # quantile levels, increasing in (0, 1)


def kernel_features(cloud, slices, n_quantiles, grid=None, weights=None):
    r"""Approximate feature map :math:`\hat\Phi(\mu)` of the sliced kernel.

    ``values[j, i] = F^{-1}_{t^{A_i}_\#\mu}(q_j) / \sqrt{ML}`` on the
    midpoint grid :math:`q_j = (j - 1/2)/M` by default.
    """
    if grid is None:
        grid = (np.arange(1, n_quantiles + 1) - 0.5) / n_quantiles
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0.0) or np.any(grid >= 1.0) or np.any(np.diff(grid) <= 0):
        raise InvalidInput("quantile grid must be strictly increasing inside (0, 1)")
    cloud = np.asarray(cloud, dtype=float)
    w = _cloud_weights(cloud, weights)
    coords = coordinate_le(cloud, slices)  # (n, L)
    order = np.argsort(coords, axis=0, kind="stable")
    sorted_coords = np.take_along_axis(coords, order, axis=0)
    cums = np.cumsum(w[order], axis=0)
    n_slices = coords.shape[1]
    values = np.empty((grid.size, n_slices))
    for i in range(n_slices):
        idx = np.searchsorted(cums[:, i], grid * cums[-1, i], side="left")
        values[:, i] = sorted_coords[np.clip(idx, 0, coords.shape[0] - 1), i]
    return QuantileFeatures(
        values=values / np.sqrt(grid.size * n_slices), grid=grid
    )


def gaussian_kernel(f, g, sigma):
    r"""Gaussian kernel :math:`\exp(-\|F - G\|^2 / (2\sigma^2))` on features."""
    if sigma <= 0:
        raise InvalidInput("sigma must be positive")
    sq = float(np.sum((f.values - g.values) ** 2))
    return float(np.exp(-sq / (2.0 * sigma**2)))


def sample_spd_cloud(d, n, seed=0, spread=1.0):
    """Wishart-like SPD test clouds: exp of random symmetric matrices."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, d, d)) * spread / np.sqrt(d)
    sym = (z + np.swapaxes(z, -1, -2)) / 2.0
    return spd_exp(sym)


__all__ = [
    "QuantileFeatures",
    "busemann_ai",
    "coordinate_le",
    "dist_ai",
    "dist_le",
    "gaussian_kernel",
    "hspdsw",
    "kernel_features",
    "logsw",
    "logsw_directions",
    "sample_spd_cloud",
    "sample_unit_symmetric",
    "spd_exp",
    "spd_log",
    "spdsw",
    "sym_eig",
    "sym_to_vec",
]
