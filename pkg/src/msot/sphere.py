r"""Spherical sliced Wasserstein on :math:`S^{d-1}`.

Great circles are sampled as two-frames on the Stiefel manifold
:math:`\mathbb{V}_{d,2}`, points are projected with the closed form
:math:`P^U(x) = U^T x / \|U^T x\|_2` and compared with the circle
Wasserstein solvers of :mod:`msot.measures`.
"""

import numpy as np

from .errors import InvalidInput, MeasureZeroProjection
from .measures import (
    build_circle_profile,
    circle_w1_level_median,
    circle_w2_vs_uniform,
    circle_wp_binary_search,
    validate_weights,
)

PROJECTION_FLOOR = 1e-12


def sample_stiefel(d, n_projections, seed=0):
    """Uniform two-frames: Gaussian (d, 2) matrices through a sign-fixed QR."""
    if d < 3:
        raise InvalidInput("great-circle slicing needs ambient dimension >= 3")
    if n_projections < 1:
        raise InvalidInput("n_projections must be positive")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_projections, d, 2))
    q, r = np.linalg.qr(z)
    signs = np.sign(np.einsum("...ii->...i", r))
    signs[signs == 0] = 1.0
    return q * signs[:, None, :]


def _check_sphere(points):
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if np.max(np.abs(np.linalg.norm(x, axis=-1) - 1.0)) > 1e-6:
        raise InvalidInput("points must lie on the unit sphere")
    return x


def project_circle(points, frame):
    r"""Angles in ``[0, 1)`` of the great-circle projections of ``points``.

    The plane coordinates are ``z = U^T x / ||U^T x||_2`` and the angle
    convention is ``(pi + atan2(-z_2, -z_1)) / (2 pi)``.  Points whose plane
    projection is numerically zero have no almost-everywhere-unique image
    and raise :class:`MeasureZeroProjection` (resample the slice).
    """
    x = _check_sphere(points)
    z = x @ frame  # (n, 2)
    norms = np.linalg.norm(z, axis=-1)
    if np.min(norms) <= PROJECTION_FLOOR:
        raise MeasureZeroProjection(
            "a point projects onto the orthogonal complement of the frame"
        )
    return circle_coordinates(z / norms[:, None])


def circle_coordinates(z):
    """Angle in [0, 1) of unit vectors in the plane (shared convention)."""
    z = np.atleast_2d(z)
    return (np.pi + np.arctan2(-z[:, 1], -z[:, 0])) / (2.0 * np.pi)


def ssw(x, y, frames, p=2.0, x_weights=None, y_weights=None, eps=1e-6):
    r"""Spherical sliced Wasserstein :math:`SSW_p^p` between two clouds.

    Averages the circle :math:`W_p^p` between projected angle profiles over
    the Stiefel frames, using the level-median closed form for ``p = 1``
    and the binary search otherwise.
    """
    x = _check_sphere(x)
    y = _check_sphere(y)
    if x.shape[1] != y.shape[1]:
        raise InvalidInput("clouds must share the ambient dimension")
    a = None if x_weights is None else validate_weights(x_weights, n=x.shape[0])
    b = None if y_weights is None else validate_weights(y_weights, n=y.shape[0])
    total = 0.0
    for frame in frames:
        mu = build_circle_profile(project_circle(x, frame), a)
        nu = build_circle_profile(project_circle(y, frame), b)
        if p == 1:
            total += circle_w1_level_median(mu, nu)
        else:
            total += circle_wp_binary_search(mu, nu, p=p, eps=eps)
    return total / len(frames)


def ssw2_vs_uniform(x, frames, x_weights=None):
    r"""Monte-Carlo :math:`SSW_2^2` against the uniform measure on the sphere.

    Great-circle projections of the uniform measure are uniform on the
    circle, so each slice reduces to the closed form of
    :func:`msot.measures.circle_w2_vs_uniform`; no uniform samples needed.
    """
    x = _check_sphere(x)
    a = None if x_weights is None else validate_weights(x_weights, n=x.shape[0])
    total = 0.0
    for frame in frames:
        mu = build_circle_profile(project_circle(x, frame), a)
        total += circle_w2_vs_uniform(mu)
    return total / len(frames)
