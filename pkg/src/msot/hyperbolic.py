r"""Hyperbolic geometry kernels and sliced distances.

Points live either on the Lorentz hyperboloid
:math:`\mathbb{L}^d = \{x \in \mathbb{R}^{d+1} : \langle x,x\rangle_\mathbb{L}
= -1,\ x_0 > 0\}` or in the Poincaré ball
:math:`\mathbb{B}^d = \{x \in \mathbb{R}^d : \|x\|_2 < 1\}`.  Slicing
directions are ideal points :math:`\tilde v \in S^{d-1}`, lifted on the
hyperboloid to :math:`v = (0, \tilde v) \in T_{x^0}\mathbb{L}^d`.

The Lorentz model is the canonical internal representation (its distance is
the numerically stabler of the two); Poincaré inputs are accepted everywhere
and converted at the boundary.
"""

import numpy as np

from .errors import InvalidInput
from .measures import validate_weights, wasserstein_1d_batched
from .sliced import sample_directions

LORENTZ_ATOL = 1e-9
_ARCTANH_CLIP = 1.0 - 1e-15


def minkowski_ip(x, y):
    """Minkowski product ``-x0*y0 + sum_i xi*yi`` along the last axis."""
    return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)


def origin(d):
    """The hyperboloid origin ``x^0 = (1, 0, ..., 0)``."""
    x0 = np.zeros(d + 1)
    x0[0] = 1.0
    return x0


def validate_lorentz(x, atol=LORENTZ_ATOL):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(x[:, 0] <= 0):
        raise InvalidInput("Lorentz points need a positive time coordinate")
    err = np.abs(minkowski_ip(x, x) + 1.0)
    if np.max(err) > atol:
        raise InvalidInput(f"points off the hyperboloid by {np.max(err):.2e}")
    return x


def validate_poincare(x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(np.linalg.norm(x, axis=-1) >= 1.0):
        raise InvalidInput("Poincare points must have norm < 1")
    return x


def lorentz_to_poincare(x):
    """Isometric projection ``x -> x_{1:d} / (1 + x_0)``."""
    x = validate_lorentz(x)
    return x[:, 1:] / (1.0 + x[:, :1])


def poincare_to_lorentz(x):
    """Isometric lift ``x -> (1 + |x|^2, 2x) / (1 - |x|^2)``."""
    x = validate_poincare(x)
    sq = np.sum(x**2, axis=-1, keepdims=True)
    return np.concatenate([1.0 + sq, 2.0 * x], axis=-1) / (1.0 - sq)


def project_to_hyperboloid(x):
    """Re-normalize the time coordinate so that <x, x>_L = -1 exactly."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = x.copy()
    out[:, 0] = np.sqrt(1.0 + np.sum(x[:, 1:] ** 2, axis=-1))
    return out


def dist_lorentz(x, y):
    """Geodesic distance ``arccosh(-<x, y>_L)``, clamped for roundoff."""
    ip = -minkowski_ip(np.atleast_2d(x), np.atleast_2d(y))
    return np.arccosh(np.maximum(ip, 1.0))


def dist_poincare(x, y):
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    num = np.sum((x - y) ** 2, axis=-1)
    den = (1.0 - np.sum(x**2, axis=-1)) * (1.0 - np.sum(y**2, axis=-1))
    return np.arccosh(1.0 + np.maximum(2.0 * num / den, 0.0))


def _lift_directions(ideal):
    """Ideal points (L, d) -> tangent directions (L, d+1) with v0 = 0."""
    ideal = np.atleast_2d(np.asarray(ideal, dtype=float))
    return np.concatenate([np.zeros((ideal.shape[0], 1)), ideal], axis=-1)


def geodesic_coordinate(x, ideal, model="lorentz"):
    r"""Signed coordinate of the geodesic projection onto ``span(x^0, v)``.

    Lorentz: :math:`P^v(x) = \operatorname{arctanh}(-\langle x,v
    \rangle_\mathbb{L} / \langle x,x^0\rangle_\mathbb{L})`.
    Poincaré: :math:`P^{\tilde v}(x) = 2\operatorname{arctanh}(s(x))` with
    the quadratic-root ``s`` (and ``s = 0`` when ``<x, v> = 0``).

    Returns an ``(n, L)`` array for ``n`` points and ``L`` directions.
    """
    if model == "lorentz":
        x = validate_lorentz(x)
        v = _lift_directions(ideal)
        num = -(x @ _j_flip(v).T)  # -<x, v>_L as an (n, L) matrix
        den = -x[:, :1]  # <x, x0>_L
        ratio = np.clip(num / den, -_ARCTANH_CLIP, _ARCTANH_CLIP)
        return np.arctanh(ratio)
    if model == "poincare":
        x = validate_poincare(x)
        ideal = np.atleast_2d(ideal)
        ip = x @ ideal.T  # (n, L)
        sq = np.sum(x**2, axis=-1, keepdims=True)
        disc = np.sqrt(np.maximum((1.0 + sq) ** 2 - 4.0 * ip**2, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(ip != 0.0, (1.0 + sq - disc) / (2.0 * ip), 0.0)
        return 2.0 * np.arctanh(np.clip(s, -_ARCTANH_CLIP, _ARCTANH_CLIP))
    raise InvalidInput(f"unknown model {model!r}")


def _j_flip(v):
    out = v.copy()
    out[..., 0] = -out[..., 0]
    return out


def busemann_coordinate(x, ideal, model="lorentz"):
    r"""Busemann function of the geodesic ray with ideal point ``ideal``.

    Lorentz: :math:`B^v(x) = \log(-\langle x, x^0+v\rangle_\mathbb{L})`;
    Poincaré: :math:`B^{\tilde v}(x) = \log(\|\tilde v - x\|_2^2 /
    (1 - \|x\|_2^2))`.  Shape ``(n, L)``.
    """
    if model == "lorentz":
        x = validate_lorentz(x)
        ideal = np.atleast_2d(ideal)
        # <x, x0 + v>_L = -x0 + <x_{1:}, v>
        ip = -x[:, :1] + x[:, 1:] @ ideal.T
        return np.log(-ip)
    if model == "poincare":
        x = validate_poincare(x)
        ideal = np.atleast_2d(ideal)
        sq_dist = (
            np.sum(ideal**2, axis=-1)[None, :]
            - 2.0 * x @ ideal.T
            + np.sum(x**2, axis=-1)[:, None]
        )
        return np.log(sq_dist / (1.0 - np.sum(x**2, axis=-1))[:, None])
    raise InvalidInput(f"unknown model {model!r}")


def sample_ideal_directions(d, n_projections, seed=0):
    """Ideal points drawn uniformly on S^{d-1} (shared slice object)."""
    return sample_directions(d, n_projections, seed=seed)


def _hyperbolic_sliced(x, y, dirs, p, x_weights, y_weights, model, coordinate):
    xw = (
        np.full(np.atleast_2d(x).shape[0], 1.0 / np.atleast_2d(x).shape[0])
        if x_weights is None
        else validate_weights(x_weights, n=np.atleast_2d(x).shape[0])
    )
    yw = (
        np.full(np.atleast_2d(y).shape[0], 1.0 / np.atleast_2d(y).shape[0])
        if y_weights is None
        else validate_weights(y_weights, n=np.atleast_2d(y).shape[0])
    )
    x_coords = coordinate(x, dirs.dirs, model=model)
    y_coords = coordinate(y, dirs.dirs, model=model)
    costs = wasserstein_1d_batched(x_coords, y_coords, xw, yw, p=p)
    return float(np.mean(costs))


def ghsw(x, y, dirs, p=2.0, x_weights=None, y_weights=None, model="lorentz"):
    r"""Geodesic hyperbolic sliced Wasserstein, :math:`GHSW_p^p`.

    Draw :math:`\tilde v \sim \mathrm{Unif}(S^{d-1})`, project both clouds
    with the geodesic coordinate and average the 1D :math:`W_p^p` costs.
    Lorentz and Poincaré inputs give the same value with shared slices.
    """
    return _hyperbolic_sliced(
        x, y, dirs, p, x_weights, y_weights, model, geodesic_coordinate
    )


def hhsw(x, y, dirs, p=2.0, x_weights=None, y_weights=None, model="lorentz"):
    r"""Horospherical hyperbolic sliced Wasserstein, :math:`HHSW_p^p`.

    Same Monte-Carlo average with the (negated) Busemann coordinate as the
    line coordinate, so that points on the ray map to their parameter.
    """

    def coord(points, ideal, model):
        return -busemann_coordinate(points, ideal, model=model)

    return _hyperbolic_sliced(x, y, dirs, p, x_weights, y_weights, model, coord)


def parallel_transport_from_origin(v, target):
    r"""Transport tangent vectors from :math:`T_{x^0}` to :math:`T_{target}`.

    ``PT_{x->y}(v) = v + <y, v>_L (x + y) / (1 - <x, y>_L)``.
    """
    x0 = origin(target.shape[-1] - 1)
    coef = minkowski_ip(target[None, :], v) / (
        1.0 - minkowski_ip(x0[None, :], target[None, :])
    )
    return v + coef[:, None] * (x0 + target)[None, :]


def exp_map(x, v):
    """Exponential map ``exp_x(v)`` for tangent vectors ``v`` at ``x``."""
    norms = np.sqrt(np.maximum(minkowski_ip(v, v), 0.0))
    out = np.where(
        norms[:, None] > 0,
        np.cosh(norms)[:, None] * x
        + np.sinh(norms)[:, None] * v / np.where(norms[:, None] > 0, norms[:, None], 1.0),
        x,
    )
    return project_to_hyperboloid(out)


def sample_wrapped_normal(mean, cov, n, seed=0):
    """Sample a wrapped normal on the hyperboloid.

    Gaussian draws in the tangent space at the origin are parallel
    transported to ``mean`` and pushed through the exponential map.
    """
    mean = validate_lorentz(mean)[0]
    cov = np.asarray(cov, dtype=float)
    d = mean.size - 1
    if cov.shape != (d, d):
        raise InvalidInput(f"covariance must be ({d}, {d})")
    if np.any(np.linalg.eigvalsh((cov + cov.T) / 2.0) <= 0):
        raise InvalidInput("covariance must be symmetric positive definite")
    rng = np.random.default_rng(seed)
    z = rng.multivariate_normal(np.zeros(d), cov, size=n, method="cholesky")
    v = np.concatenate([np.zeros((n, 1)), z], axis=-1)
    u = parallel_transport_from_origin(v, mean)
    return exp_map(np.broadcast_to(mean, u.shape), u)


def riemannian_step_lorentz(x, euclid_grad, lr):
    """One Riemannian gradient-descent step on the hyperboloid.

    The ambient gradient is converted with ``grad f(x) = Proj_x(J grad)``
    where ``J = diag(-1, 1, ..., 1)`` and
    ``Proj_x(z) = z + <x, z>_L x``, then followed along ``exp_x``.
    The output is re-normalized onto the hyperboloid to absorb roundoff.
    """
    x = validate_lorentz(x)
    g = np.atleast_2d(np.asarray(euclid_grad, dtype=float))
    jg = _j_flip(g)
    rgrad = jg + minkowski_ip(x, jg)[:, None] * x
    return exp_map(x, -lr * rgrad)
