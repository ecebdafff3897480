r"""Sliced-Wasserstein gradient-flow schemes.

Backward (JKO) schemes minimize
:math:`J(\mu) = \frac{1}{2\tau} SW_2^2(\mu, \mu_k) + \mathcal{F}(\mu)`
at every outer step, over particle positions or over grid weights
projected on the simplex; the forward scheme follows the particle
Wasserstein gradient directly, on Euclidean space or on the hyperboloid.
The optional dilation flag multiplies the coupling term by the ambient
dimension, matching the plain-Wasserstein dynamics on measure classes
where :math:`SW_2^2 = W_2^2/d`.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput
from .hyperbolic import geodesic_coordinate, riemannian_step_lorentz
from .measures import build_profile, wasserstein_1d_batched
from .sliced import sample_directions, sw2_subgradient, sw_p
from .unbalanced import sliced_dual

ENTROPY_FLOOR = 1e-300


@dataclass(frozen=True)
class GridState:
    """Fixed nodes with simplex weights and a per-node volume element."""

    nodes: np.ndarray
    rho: np.ndarray
    cell_volume: float

    def __post_init__(self):
        if abs(float(np.sum(self.rho)) - 1.0) > 1e-10 or np.any(self.rho < 0):
            raise InvalidInput("grid weights must lie on the probability simplex")
        if self.cell_volume <= 0:
            raise InvalidInput("cell volume must be positive")


@dataclass(frozen=True)
class FlowRecord:
    step: int
    energy: float
    objective: float | None = None
    residual_grad: float | None = None
    positions: np.ndarray | None = None
    rho: np.ndarray | None = None


@dataclass
class FlowTrace:
    """Per-step records of a flow, serializable as line-delimited JSON."""

    records: list = field(default_factory=list)

    def append(self, record):
        if self.records and record.step <= self.records[-1].step:
            raise InvalidInput("step indices must be strictly increasing")
        self.records.append(record)

    @property
    def energies(self):
        return np.array([r.energy for r in self.records])

    def to_jsonl(self):
        lines = []
        for r in self.records:
            payload = {"step": r.step, "energy": r.energy}
            if r.objective is not None:
                payload["objective"] = r.objective
            if r.residual_grad is not None:
                payload["residual_grad"] = r.residual_grad
            if r.positions is not None:
                payload["positions"] = np.asarray(r.positions).tolist()
            if r.rho is not None:
                payload["rho"] = np.asarray(r.rho).tolist()
            lines.append(json.dumps(payload, sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text):
        trace = cls()
        for line in text.strip().splitlines():
            payload = json.loads(line)
            trace.append(
                FlowRecord(
                    step=payload["step"],
                    energy=payload["energy"],
                    objective=payload.get("objective"),
                    residual_grad=payload.get("residual_grad"),
                    positions=(
                        np.array(payload["positions"])
                        if "positions" in payload
                        else None
                    ),
                    rho=np.array(payload["rho"]) if "rho" in payload else None,
                )
            )
        return trace


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------


class Functional:
    """Energy on measures; subclasses fill in the supported surfaces."""

    def value(self, points, weights=None):
        raise InvalidInput(f"{type(self).__name__} unsupported on particle states")

    def particle_gradient(self, points, weights=None):
        raise InvalidInput(f"{type(self).__name__} has no particle gradient")

    def grid_value(self, grid):
        raise InvalidInput(f"{type(self).__name__} unsupported on grid states")

    def grid_gradient(self, grid):
        raise InvalidInput(f"{type(self).__name__} has no grid gradient")


def _uniform(points, weights):
    if weights is None:
        return np.full(points.shape[0], 1.0 / points.shape[0])
    return np.asarray(weights, dtype=float)


class PotentialFunctional(Functional):
    r"""Potential energy :math:`\int V\,d\mu` with an analytic gradient."""

    def __init__(self, v, grad_v):
        self.v = v
        self.grad_v = grad_v

    def value(self, points, weights=None):
        points = np.asarray(points, dtype=float)
        w = _uniform(points, weights)
        return float(np.sum(w * np.apply_along_axis(self.v, 1, points)))

    def particle_gradient(self, points, weights=None):
        points = np.asarray(points, dtype=float)
        w = _uniform(points, weights)
        return w[:, None] * np.stack([self.grad_v(x) for x in points])

    def grid_value(self, grid):
        vals = np.apply_along_axis(self.v, 1, grid.nodes)
        return float(np.sum(grid.rho * vals))

    def grid_gradient(self, grid):
        return np.apply_along_axis(self.v, 1, grid.nodes)


def quadratic_potential(target, strength=1.0):
    """``V(x) = strength/2 * |x - target|^2`` as a potential functional."""
    target = np.asarray(target, dtype=float)
    return PotentialFunctional(
        v=lambda x: 0.5 * strength * float(np.sum((x - target) ** 2)),
        grad_v=lambda x: strength * (x - target),
    )


class InteractionFunctional(Functional):
    r"""Interaction energy :math:`\frac12 \iint W(x - y)\,d\mu\,d\mu` with the
    power-law kernel :math:`W(z) = \|z\|^a/a - \|z\|^b/b` (repulsive-
    attractive for the default ``a = 4, b = 2``, gradient
    :math:`(\|z\|^2 - 1)z`)."""

    def __init__(self, a=4.0, b=2.0):
        if a <= b:
            raise InvalidInput("need a > b for a repulsive-attractive kernel")
        self.a = a
        self.b = b

    def _kernel(self, sq_norms):
        norms = np.sqrt(sq_norms)
        return norms**self.a / self.a - norms**self.b / self.b

    def _pairwise(self, points):
        diff = points[:, None, :] - points[None, :, :]
        return diff, np.sum(diff**2, axis=-1)

    def value(self, points, weights=None):
        points = np.asarray(points, dtype=float)
        w = _uniform(points, weights)
        _, sq = self._pairwise(points)
        return 0.5 * float(w @ self._kernel(sq) @ w)

    def particle_gradient(self, points, weights=None):
        points = np.asarray(points, dtype=float)
        w = _uniform(points, weights)
        diff, sq = self._pairwise(points)
        norms = np.sqrt(sq)
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(
                norms > 0, norms ** (self.a - 2) - norms ** (self.b - 2), 0.0
            )
        force = np.einsum("ij,ijk->ik", coef * w[None, :], diff)
        return w[:, None] * force

    def grid_value(self, grid):
        return self.value(grid.nodes, grid.rho)

    def grid_gradient(self, grid):
        _, sq = self._pairwise(np.asarray(grid.nodes, dtype=float))
        return self._kernel(sq) @ grid.rho


class EntropyFunctional(Functional):
    r"""Negative entropy :math:`\sum_i \log(\rho_i/l)\rho_i` on grids.

    Particle states carry no density, so the particle surface raises.
    """

    def grid_value(self, grid):
        rho = np.maximum(grid.rho, ENTROPY_FLOOR)
        return float(np.sum(np.log(rho / grid.cell_volume) * grid.rho))

    def grid_gradient(self, grid):
        rho = np.maximum(grid.rho, ENTROPY_FLOOR)
        return np.log(rho / grid.cell_volume) + 1.0


class SumFunctional(Functional):
    """Sum of functionals (Fokker-Planck = potential + entropy)."""

    def __init__(self, parts):
        self.parts = list(parts)

    def value(self, points, weights=None):
        return sum(p.value(points, weights) for p in self.parts)

    def particle_gradient(self, points, weights=None):
        return sum(p.particle_gradient(points, weights) for p in self.parts)

    def grid_value(self, grid):
        return sum(p.grid_value(grid) for p in self.parts)

    def grid_gradient(self, grid):
        return sum(p.grid_gradient(grid) for p in self.parts)


class SwToTargetFunctional(Functional):
    r"""Coupling energy :math:`\frac12 SW_2^2(\mu, \nu)` toward a fixed
    target cloud, with shared slices."""

    def __init__(self, target_points, dirs, target_weights=None):
        self.target = np.asarray(target_points, dtype=float)
        self.dirs = dirs
        self.target_weights = target_weights

    def value(self, points, weights=None):
        return 0.5 * sw_p(
            points,
            self.target,
            self.dirs,
            p=2.0,
            x_weights=weights,
            y_weights=self.target_weights,
        )

    def particle_gradient(self, points, weights=None):
        if weights is not None:
            raise InvalidInput("the analytic subgradient needs uniform weights")
        if np.asarray(points).shape[0] != self.target.shape[0]:
            raise InvalidInput("the analytic subgradient needs equal atom counts")
        return 0.5 * sw2_subgradient(points, self.target, self.dirs)

    def grid_value(self, grid):
        return 0.5 * sw_p(
            grid.nodes,
            self.target,
            self.dirs,
            p=2.0,
            x_weights=grid.rho,
            y_weights=self.target_weights,
        )

    def grid_gradient(self, grid):
        return 0.5 * _sw_weight_gradient(
            grid.nodes, grid.rho, self.target, self.target_weights, self.dirs
        )


class GhswToTargetFunctional(Functional):
    r"""Coupling energy :math:`\frac12 GHSW_2^2(\mu, \nu)` on the Lorentz
    model, with the analytic ambient gradient of the geodesic coordinates."""

    def __init__(self, target_points, dirs):
        self.target = np.asarray(target_points, dtype=float)
        self.dirs = dirs

    def value(self, points, weights=None):
        if weights is not None:
            raise InvalidInput("hyperbolic flows run on uniform clouds")
        from .hyperbolic import ghsw

        return 0.5 * ghsw(points, self.target, self.dirs, p=2.0)

    def particle_gradient(self, points, weights=None):
        x = np.asarray(points, dtype=float)
        n = x.shape[0]
        if n != self.target.shape[0]:
            raise InvalidInput("the analytic subgradient needs equal atom counts")
        ideal = self.dirs.dirs
        n_proj = ideal.shape[0]
        coords_x = geodesic_coordinate(x, ideal, model="lorentz")
        coords_y = geodesic_coordinate(self.target, ideal, model="lorentz")
        sigma = np.argsort(coords_x, axis=0, kind="stable")
        tau = np.argsort(coords_y, axis=0, kind="stable")
        diff = np.take_along_axis(coords_x, sigma, axis=0) - np.take_along_axis(
            coords_y, tau, axis=0
        )
        resid = np.empty_like(diff)
        np.put_along_axis(resid, sigma, diff, axis=0)  # (n, L)
        # ambient gradient of P^v(x) = arctanh(-<x,v>_L / <x,x0>_L)
        v = np.concatenate([np.zeros((n_proj, 1)), ideal], axis=-1)
        jv = v.copy()
        jv[:, 0] = -jv[:, 0]
        u = x @ jv.T  # <x, v>_L, (n, L)
        w = -x[:, :1]  # <x, x0>_L, (n, 1)
        ratio = -u / w
        jx0 = np.zeros(x.shape[1])
        jx0[0] = -1.0
        denom = (1.0 - ratio**2) * w**2
        # dP/dx = (-(Jv) w + u Jx0) / ((1 - r^2) w^2)
        grad_coords = (
            -jv[None, :, :] * w[:, :, None] + u[:, :, None] * jx0[None, None, :]
        ) / denom[:, :, None]
        return np.einsum("nl,nld->nd", resid, grad_coords) / (n * n_proj)


def _sw_weight_gradient(nodes, rho, target, target_weights, dirs):
    """Gradient of SW_2^2 w.r.t. the first measure's weights.

    By the envelope theorem this is the slice average of the source dual
    potential; the additive gauge is immaterial under simplex projection.
    """
    coords = np.asarray(nodes, dtype=float) @ dirs.dirs.T
    coords_t = np.asarray(target, dtype=float) @ dirs.dirs.T
    m = coords_t.shape[0]
    wt = (
        np.full(m, 1.0 / m)
        if target_weights is None
        else np.asarray(target_weights, dtype=float)
    )
    grad = np.zeros(rho.size)
    for ell in range(dirs.n_projections):
        mu = build_profile(coords[:, ell], rho)
        nu = build_profile(coords_t[:, ell], wt)
        pots = sliced_dual(mu, nu, p=2.0)
        order = np.argsort(coords[:, ell], kind="stable")
        back = np.empty_like(pots.f)
        back[order] = pots.f
        grad += back
    return grad / dirs.n_projections


def eval_functional(functional, state):
    """Evaluate a functional on a particle cloud or a :class:`GridState`."""
    if isinstance(state, GridState):
        return functional.grid_value(state)
    return functional.value(np.asarray(state, dtype=float))


# ---------------------------------------------------------------------------
# simplex projection
# ---------------------------------------------------------------------------


def simplex_project(v):
    """Euclidean projection onto the probability simplex (sort-threshold)."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise InvalidInput("cannot project a non-finite vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    valid = u + (1.0 - css) / ks > 0
    k = int(np.max(ks[valid]))
    tau = (1.0 - css[k - 1]) / k
    return np.maximum(v + tau, 0.0)


# ---------------------------------------------------------------------------
# flow drivers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InnerOptimizer:
    """Plain gradient descent settings for the inner JKO minimization."""

    learning_rate: float = 0.05
    n_steps: int = 50


def swjko_particles(
    initial,
    functional,
    tau,
    n_steps,
    inner=InnerOptimizer(),
    n_projections=100,
    seed=0,
    dilation=False,
    record_positions=False,
):
    """Backward-Euler flow on particle positions.

    Each outer step minimizes the proximal objective with ``inner.n_steps``
    gradient-descent iterations using the analytic SW subgradient, with
    slices fixed per outer step.  The descent applies per-particle
    (Wasserstein) gradients, i.e. ``n`` times the position gradient of the
    objective, so the learning-rate scale is independent of the particle
    count.  Records the functional value and the proximal objective of
    each accepted state.
    """
    if tau <= 0:
        raise InvalidInput("tau must be positive")
    x = np.asarray(initial, dtype=float).copy()
    n, d = x.shape
    factor = float(d) if dilation else 1.0
    trace = FlowTrace()
    trace.append(
        FlowRecord(
            step=0,
            energy=functional.value(x),
            objective=functional.value(x),
            positions=x.copy() if record_positions else None,
        )
    )
    for k in range(1, n_steps + 1):
        dirs = sample_directions(d, n_projections, seed=seed + k)
        prev = x.copy()
        grad = np.zeros_like(x)
        for _ in range(inner.n_steps):
            grad = factor / (2.0 * tau) * sw2_subgradient(
                x, prev, dirs
            ) + functional.particle_gradient(x)
            x = x - inner.learning_rate * n * grad
        energy = functional.value(x)
        objective = factor / (2.0 * tau) * sw_p(x, prev, dirs) + energy
        trace.append(
            FlowRecord(
                step=k,
                energy=energy,
                objective=objective,
                residual_grad=float(np.linalg.norm(n * grad)),
                positions=x.copy() if record_positions else None,
            )
        )
    return trace


def swjko_grid(
    grid,
    functional,
    tau,
    n_steps,
    inner=InnerOptimizer(),
    n_projections=100,
    seed=0,
    dilation=False,
    record_rho=False,
):
    """Backward-Euler flow on grid weights, projected on the simplex.

    The SW term between weighted grid profiles uses the general-weights 1D
    solver; its weight gradient is the slice-averaged dual potential.
    """
    if tau <= 0:
        raise InvalidInput("tau must be positive")
    nodes = np.asarray(grid.nodes, dtype=float)
    n, d = nodes.shape
    rho = np.asarray(grid.rho, dtype=float).copy()
    factor = float(d) if dilation else 1.0
    state = GridState(nodes=nodes, rho=rho, cell_volume=grid.cell_volume)
    trace = FlowTrace()
    trace.append(
        FlowRecord(
            step=0,
            energy=functional.grid_value(state),
            objective=functional.grid_value(state),
            rho=rho.copy() if record_rho else None,
        )
    )
    for k in range(1, n_steps + 1):
        dirs = sample_directions(d, n_projections, seed=seed + k)
        coords = nodes @ dirs.dirs.T
        orders = np.argsort(coords, axis=0, kind="stable")
        rho_prev = rho.copy()
        grad = np.zeros(n)
        for _ in range(inner.n_steps):
            grad_sw = np.zeros(n)
            for ell in range(dirs.n_projections):
                order = orders[:, ell]
                f, _ = _grid_dual(coords[order, ell], rho[order], rho_prev[order])
                grad_sw[order] += f
            grad_sw /= dirs.n_projections
            grad = factor / (2.0 * tau) * grad_sw + functional.grid_gradient(
                GridState(nodes=nodes, rho=rho, cell_volume=grid.cell_volume)
            )
            rho = simplex_project(rho - inner.learning_rate * grad)
        state = GridState(nodes=nodes, rho=rho, cell_volume=grid.cell_volume)
        energy = functional.grid_value(state)
        coupling = float(
            np.mean(
                wasserstein_1d_batched(coords, coords, rho, rho_prev, p=2.0)
            )
        )
        trace.append(
            FlowRecord(
                step=k,
                energy=energy,
                objective=factor / (2.0 * tau) * coupling + energy,
                residual_grad=float(np.linalg.norm(grad - np.mean(grad))),
                rho=rho.copy() if record_rho else None,
            )
        )
    return trace


def _grid_dual(sorted_coords, rho_sorted, rho_prev_sorted):
    from .unbalanced import _dual_sweep

    return _dual_sweep(sorted_coords, rho_sorted, sorted_coords, rho_prev_sorted, 2.0)


def euler_particles(
    initial,
    functional,
    step_size,
    n_steps,
    geometry="euclidean",
    record_positions=False,
):
    """Forward-Euler particle flow of the Wasserstein gradient.

    Uniform particle clouds descend ``x_i <- x_i - tau n grad_i``; on the
    Lorentz geometry the ambient gradient goes through the Riemannian step.
    """
    if step_size <= 0:
        raise InvalidInput("step size must be positive")
    if geometry not in ("euclidean", "lorentz"):
        raise InvalidInput(f"unsupported geometry {geometry!r}")
    x = np.asarray(initial, dtype=float).copy()
    n = x.shape[0]
    trace = FlowTrace()
    trace.append(
        FlowRecord(
            step=0,
            energy=functional.value(x),
            positions=x.copy() if record_positions else None,
        )
    )
    for k in range(1, n_steps + 1):
        grad = n * functional.particle_gradient(x)
        if geometry == "euclidean":
            x = x - step_size * grad
        else:
            x = riemannian_step_lorentz(x, grad, step_size)
        trace.append(
            FlowRecord(
                step=k,
                energy=functional.value(x),
                positions=x.copy() if record_positions else None,
            )
        )
    return trace
