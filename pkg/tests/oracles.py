"""Independent oracles used by the test suite.

Everything in here is deliberately written against a different code path than
the library under test: scipy rotations, finite differences, exhaustive grid
search, golden-section scans, and closed-form least squares. Tests compare the
library to these, never the library to itself.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation

from xrteleop import forward_kinematics
from xrteleop.chain import FIXED, PRISMATIC, REVOLUTE, JointSpec, KinematicChain
from xrteleop.pose import Pose


# --- rotations (scipy is the reference implementation) -------------------------


def scipy_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (Rotation.from_quat(a) * Rotation.from_quat(b)).as_quat()


def scipy_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    return Rotation.from_quat(q).apply(v)


def scipy_matrix(q: np.ndarray) -> np.ndarray:
    return Rotation.from_quat(q).as_matrix()


def quat_angle_between(a: np.ndarray, b: np.ndarray) -> float:
    """Geodesic angle between two unit quaternions (sign-insensitive)."""
    dot = abs(float(np.dot(a, b)))
    return 2.0 * np.arccos(min(dot, 1.0))


# --- analytic planar 2-link (both links length 1 m, revolute about z) -----------


def planar2_fk(q: np.ndarray, l1: float = 1.0, l2: float = 1.0) -> np.ndarray:
    x = l1 * np.cos(q[0]) + l2 * np.cos(q[0] + q[1])
    y = l1 * np.sin(q[0]) + l2 * np.sin(q[0] + q[1])
    return np.array([x, y, 0.0])


def planar2_jacobian(q: np.ndarray, l1: float = 1.0, l2: float = 1.0) -> np.ndarray:
    """Position-xy Jacobian of the planar arm, rows (x, y)."""
    s1, c1 = np.sin(q[0]), np.cos(q[0])
    s12, c12 = np.sin(q[0] + q[1]), np.cos(q[0] + q[1])
    return np.array(
        [
            [-l1 * s1 - l2 * s12, -l2 * s12],
            [l1 * c1 + l2 * c12, l2 * c12],
        ]
    )


def planar2_manipulability(q: np.ndarray, l1: float = 1.0, l2: float = 1.0) -> float:
    return abs(l1 * l2 * np.sin(q[1]))


# --- finite-difference Jacobian oracle ------------------------------------------


def fd_jacobian(chain, q: np.ndarray, frame: str, step: float = 1e-6) -> np.ndarray:
    """Central-difference geometric Jacobian; orientation rows via rotation vectors."""
    q = np.asarray(q, dtype=float)
    J = np.zeros((6, chain.dof))
    for j in range(chain.dof):
        qp, qm = q.copy(), q.copy()
        qp[j] += step
        qm[j] -= step
        pp = forward_kinematics(chain, qp, frame)
        pm = forward_kinematics(chain, qm, frame)
        J[0:3, j] = (pp.position - pm.position) / (2.0 * step)
        # relative rotation over 2·step, world frame: dR = Rp · Rmᵀ
        rp = Rotation.from_quat(pp.orientation).as_matrix()
        rm = Rotation.from_quat(pm.orientation).as_matrix()
        rotvec = Rotation.from_matrix(rp @ rm.T).as_rotvec()
        J[3:6, j] = rotvec / (2.0 * step)
    return J


# --- box-QP oracles --------------------------------------------------------------


def qp_objective(H: np.ndarray, c: np.ndarray, x: np.ndarray) -> float:
    return float(0.5 * x @ H @ x + c @ x)


def qp_kkt_residual(
    H: np.ndarray, c: np.ndarray, lb: np.ndarray, ub: np.ndarray, x: np.ndarray
) -> float:
    """Max violation of stationarity + complementarity + feasibility."""
    g = H @ x + c
    worst = 0.0
    for i in range(len(x)):
        worst = max(worst, x[i] - ub[i], lb[i] - x[i])
        at_lo = abs(x[i] - lb[i]) < 1e-9
        at_hi = abs(x[i] - ub[i]) < 1e-9
        if at_lo and at_hi:
            continue  # pinned variable, any gradient is fine
        if at_hi:
            worst = max(worst, g[i])  # must not want to increase
        elif at_lo:
            worst = max(worst, -g[i])  # must not want to decrease
        else:
            worst = max(worst, abs(g[i]))
    return worst


def grid_minimize_qp(
    H: np.ndarray, c: np.ndarray, lb: np.ndarray, ub: np.ndarray
) -> tuple[np.ndarray, float]:
    """Exhaustive grid search over the box at pitch 1e-3 of each side.

    For one and two variables the grid is evaluated literally. Three variables
    at that pitch is 1e9 nodes, so the search runs coarse-to-fine instead: a
    3e-2-pitch sweep, then a 1e-3-pitch sweep of the surrounding cell block.
    Both stages only ever evaluate the given objective, never solve it.
    """
    n = len(lb)
    if n <= 2:
        axes = [np.linspace(lb[i], ub[i], 1001) for i in range(n)]
        return _grid_best(H, c, axes)
    best_x, _ = _grid_best(H, c, [np.linspace(lb[i], ub[i], 34) for i in range(n)])
    axes = []
    for i in range(n):
        width = ub[i] - lb[i]
        margin = width / 33.0 * 2.0
        lo = max(lb[i], best_x[i] - margin)
        hi = min(ub[i], best_x[i] + margin)
        count = max(int(round((hi - lo) / (width * 1e-3))) + 1, 2) if width > 0 else 1
        axes.append(np.linspace(lo, hi, count))
    return _grid_best(H, c, axes)


def _grid_best(H, c, axes) -> tuple[np.ndarray, float]:
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = 0.5 * np.einsum("ni,ij,nj->n", pts, H, pts) + pts @ c
    k = int(np.argmin(vals))
    return pts[k], float(vals[k])


def dls_solution(
    jacobians: list[np.ndarray], residuals: list[np.ndarray], weights: list[float], damping: float
) -> np.ndarray:
    """Closed-form damped least squares for min Σ wᵢ‖Jᵢx + eᵢ‖² + λ‖x‖²."""
    n = jacobians[0].shape[1]
    A = damping * np.eye(n)
    b = np.zeros(n)
    for J, e, w in zip(jacobians, residuals, weights):
        A += w * J.T @ J
        b -= w * J.T @ e
    return np.linalg.solve(A, b)


def golden_section(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Minimizer of a unimodal f on [lo, hi]."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def grid_minimize(f, lb: np.ndarray, ub: np.ndarray, pitch: float) -> tuple[np.ndarray, float]:
    """Dense grid scan of an arbitrary objective over a box (dof ≤ 2 scale)."""
    axes = [np.arange(lb[i], ub[i] + pitch * 0.5, pitch) for i in range(len(lb))]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    best_x, best_v = None, np.inf
    for x in pts:
        v = f(x)
        if v < best_v:
            best_x, best_v = x, v
    return best_x, best_v


# --- random chain generation ------------------------------------------------------


def random_chain(rng: np.random.Generator, max_dof: int = 6) -> KinematicChain:
    """Random serial chain with mixed joint kinds and non-trivial origins."""
    dof = int(rng.integers(1, max_dof + 1))
    joints = []
    parent = "base"
    q_count = 0
    idx = 0
    while q_count < dof:
        idx += 1
        child = f"link{idx}"
        kind = rng.choice([REVOLUTE, PRISMATIC, FIXED], p=[0.6, 0.25, 0.15])
        if kind != FIXED:
            q_count += 1
        elif q_count == dof:  # never trail on fixed past target; unreachable guard
            kind = REVOLUTE
            q_count += 1
        xyz = rng.uniform(-0.3, 0.3, 3)
        rotvec = rng.uniform(-0.8, 0.8, 3)
        origin = Pose(xyz, Rotation.from_rotvec(rotvec).as_quat())
        axis = rng.normal(size=3)
        while np.linalg.norm(axis) < 1e-6:
            axis = rng.normal(size=3)
        if kind == PRISMATIC:
            limits = (-0.4, 0.4)
        else:
            limits = (-2.5, 2.5)
        joints.append(
            JointSpec(
                name=f"j{idx}",
                kind=kind,
                parent_link=parent,
                child_link=child,
                origin=origin,
                axis=axis if kind != FIXED else np.array([0.0, 0.0, 1.0]),
                limits=limits if kind != FIXED else (0.0, 0.0),
                velocity_limit=float(rng.uniform(1.0, 5.0)),
            )
        )
        parent = child
    return KinematicChain(f"random{rng.integers(1 << 30)}", joints)


def random_configuration(rng: np.random.Generator, chain: KinematicChain) -> np.ndarray:
    lo, hi = chain.position_limits()
    lo = np.where(np.isfinite(lo), lo, -np.pi)
    hi = np.where(np.isfinite(hi), hi, np.pi)
    return rng.uniform(lo, hi)
