"""Simple discretisation and the iterative refinement scheme.

Level 1 solves the LP with every ``(i, j)`` pair.  Each later level builds
finer meshes, interpolates the previous ``r`` and ``z`` onto them and keeps
only the pairs whose interpolated slack ``r(m_i) + z(x_j) - log K`` is below
a threshold ``epsilon``.  A pruned LP that leaves a sample without any
constraint is unbounded; the run stops there, as do runs that exceed the
constraint cap.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from . import transport_lp as tlp
from .analytic import rho_exact
from .errors import BadBracket, ConstraintCapExceeded, Unbounded
from .geometry import inverse_rho_tilde, inverse_z_tilde, log_cost, rho_tilde, z_tilde
from .meshgen import cap_mesh, disk_mesh, pick_anchor

log = logging.getLogger(__name__)

DEFAULT_ANCHOR = (0.8, 0.0, -0.6)


@dataclass
class DiscreteSolution:
    """Solution of one level, in LP variables and as reflector surfaces."""

    level: int
    h: float
    cap: object
    disk: object
    r: np.ndarray
    z: np.ndarray
    rho: np.ndarray
    zsurf: np.ndarray
    ray_map: np.ndarray
    multiplicity: np.ndarray
    constraint_count: int
    objective: float
    epsilon: Optional[float] = None
    active: object = None

    @property
    def M(self):
        return len(self.cap)

    @property
    def N(self):
        return len(self.disk)


@dataclass
class UnboundedReport:
    """Why a pruned level could not be solved."""

    level: int
    h: float
    epsilon: float
    uncovered_inputs: np.ndarray
    uncovered_outputs: np.ndarray
    constraint_count: int
    M: int
    N: int
    reason: str = "uncovered"

    @property
    def uncovered(self):
        return len(self.uncovered_inputs) + len(self.uncovered_outputs)


@dataclass
class RefinementConfig:
    """Mesh sequence, threshold law and solver settings of a run.

    Either give ``h_sequence`` explicitly or ``h0``, ``ratio`` and
    ``n_levels``.  The threshold of level ``k >= 2`` is ``C * h_k ** a``
    (``epsilon_mode="formula"``) or slightly above the critical coverage
    threshold (``"critical"``).
    """

    C: float = 1.7
    a: float = 1.0
    h0: float = 0.12
    ratio: float = 0.8
    n_levels: int = 3
    h_sequence: Optional[list] = None
    anchor_direction: tuple = DEFAULT_ANCHOR
    anchor_rho: Optional[float] = None
    feas_tol: float = 1e-9
    act_tol: float = 1e-7
    epsilon_mode: str = "formula"
    critical_margin: float = 0.5
    interp: str = "surface"
    max_constraints: int = 5_000_000

    def __post_init__(self):
        if not (self.C > 0 and self.a >= 0):
            raise ValueError("need C > 0 and a >= 0")
        if self.epsilon_mode not in ("formula", "critical"):
            raise ValueError(f"unknown epsilon_mode {self.epsilon_mode!r}")
        if self.interp not in ("surface", "log"):
            raise ValueError(f"unknown interp {self.interp!r}")
        hs = self.levels()
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ValueError("h sequence must be strictly decreasing")

    def levels(self):
        if self.h_sequence is not None:
            return [float(h) for h in self.h_sequence]
        return [self.h0 * self.ratio**k for k in range(self.n_levels)]


@dataclass
class IterationReport:
    """Per-level summary, serialised as one JSON object per level."""

    level: int
    h: float
    M: int
    N: int
    epsilon: Optional[float]
    constraints: int
    pct_full: float
    objective: Optional[float]
    status: str
    max_err_r1: Optional[float] = None
    l2_err_r1: Optional[float] = None
    max_err_r2: Optional[float] = None
    l2_err_r2: Optional[float] = None
    wall_time_s: float = 0.0

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class RunResult:
    solutions: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    status: str = "completed"
    unbounded: Optional[UnboundedReport] = None


def epsilon_schedule(C, a, h):
    """Inclusion threshold ``C * h ** a``."""
    return C * h**a


def anchor_value(cfg, anchor_rho, direction):
    """``log rho_tilde`` of the anchor radius at the anchor sample direction."""
    return float(np.log(rho_tilde(cfg, anchor_rho, np.asarray(direction, dtype=float))))


def _anchor_rho(config, dataset):
    if config.anchor_rho is not None:
        return float(config.anchor_rho)
    if getattr(dataset, "anchor_rho", None) is not None:
        return float(dataset.anchor_rho)
    pair = getattr(dataset, "pair", None)
    if pair is None:
        raise ValueError("anchor_rho is required for datasets without an exact solution")
    return float(rho_exact(pair, np.asarray(config.anchor_direction, dtype=float)))


def build_meshes(dataset, h, anchor_direction):
    cap = cap_mesh(dataset.cap_planar_radius, h)
    _, cap = pick_anchor(cap, anchor_direction)
    disk = disk_mesh(dataset.disk_radius, h)
    return cap, disk


def _finish(level, h, cap, disk, lp, outcome, cfg, epsilon):
    rho = inverse_rho_tilde(cfg, np.exp(outcome.r), cap.lifted)
    zsurf = inverse_z_tilde(cfg, np.exp(outcome.z), disk.samples)
    jstar, mult = tlp.ray_map_from_active(outcome.active, len(cap))
    return DiscreteSolution(
        level=level, h=h, cap=cap, disk=disk, r=outcome.r, z=outcome.z,
        rho=rho, zsurf=zsurf, ray_map=jstar, multiplicity=mult,
        constraint_count=lp.n_constraints, objective=outcome.objective,
        epsilon=epsilon, active=outcome.active,
    )


def solve_simple(dataset, cfg, h0, anchor_direction=DEFAULT_ANCHOR, anchor_rho=None,
                 feas_tol=1e-9, act_tol=1e-7, level=1, dump_lp=None, max_constraints=None):
    """Solve the LP with every pair of samples on meshes of size ``h0``.

    Raises
    ------
    ConstraintCapExceeded
        When ``M * N`` exceeds ``max_constraints``.
    """
    if anchor_rho is None:
        anchor_rho = float(rho_exact(dataset.pair, np.asarray(anchor_direction, dtype=float)))
    cap, disk = build_meshes(dataset, h0, anchor_direction)
    if max_constraints is not None and len(cap) * len(disk) > max_constraints:
        raise ConstraintCapExceeded(len(cap) * len(disk), max_constraints)
    lp = tlp.assemble(cap, disk, dataset.I, dataset.L, cfg,
                      anchor_value(cfg, anchor_rho, cap.lifted[0]))
    if dump_lp:
        tlp.write_lp(lp, dump_lp)
    outcome = tlp.solve(lp, feas_tol=feas_tol, act_tol=act_tol)
    return _finish(level, h0, cap, disk, lp, outcome, cfg, None)


class PiecewiseLinear:
    """Linear interpolation over a Delaunay triangulation, nearest sample outside it."""

    def __init__(self, samples, values):
        self.samples = np.asarray(samples, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.tri = Delaunay(self.samples)
        self.tree = cKDTree(self.samples)

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        simplex = self.tri.find_simplex(q)
        out = np.empty(len(q))
        inside = simplex >= 0
        if np.any(inside):
            s = simplex[inside]
            T = self.tri.transform[s]
            b = np.einsum("nij,nj->ni", T[:, :2], q[inside] - T[:, 2])
            bary = np.column_stack([b, 1.0 - b.sum(axis=1)])
            out[inside] = np.einsum("ni,ni->n", bary, self.values[self.tri.simplices[s]])
        if np.any(~inside):
            _, nn = self.tree.query(q[~inside])
            out[~inside] = self.values[nn]
        return out


def interpolate(sol, query_dirs, cfg=None, variable="log"):
    """Interpolate ``r`` at unit directions, working in projected ``(mx, my)``.

    With ``variable="log"`` the LP values ``r`` are interpolated directly.
    With ``variable="surface"`` the recovered radii are interpolated and
    mapped back through ``log rho_tilde``; this avoids the logarithmic
    singularity of ``r`` at the pole and needs ``cfg``.
    """
    q = np.asarray(query_dirs, dtype=float)
    if variable == "log":
        return PiecewiseLinear(sol.cap.samples, sol.r)(q[:, :2])
    if variable == "surface":
        rho = PiecewiseLinear(sol.cap.samples, sol.rho)(q[:, :2])
        return np.log(rho_tilde(cfg, rho, q))
    raise ValueError(f"unknown interpolation variable {variable!r}")


def interpolate_planar(sol, query_pts, cfg=None, variable="log"):
    """Interpolate ``z`` at output plane points; see :func:`interpolate`."""
    q = np.asarray(query_pts, dtype=float)
    if variable == "log":
        return PiecewiseLinear(sol.disk.samples, sol.z)(q)
    if variable == "surface":
        zs = PiecewiseLinear(sol.disk.samples, sol.zsurf)(q)
        return np.log(z_tilde(cfg, zs, q))
    raise ValueError(f"unknown interpolation variable {variable!r}")


def _block_rows(M, N):
    return max(1, 400_000 // max(N, 1))


def select_constraints(r_interp, z_interp, cap, disk, cfg, epsilon, max_constraints=None):
    """Pairs with interpolated slack strictly below ``epsilon``.

    Returns ``(rows, cols, rhs)`` with ``rhs = log K`` of the kept pairs,
    ordered by ``(i, j)``.

    Raises
    ------
    ConstraintCapExceeded
        When more than ``max_constraints`` pairs qualify.
    """
    M, N = len(cap), len(disk)
    block = _block_rows(M, N)
    rows, cols, rhs = [], [], []
    total = 0
    for s in range(0, M, block):
        c = log_cost(cfg, cap.lifted[s:s + block, None, :], disk.samples[None, :, :])
        slack = r_interp[s:s + block, None] + z_interp[None, :] - c
        ii, jj = np.nonzero(slack < epsilon)
        total += len(ii)
        if max_constraints is not None and total > max_constraints:
            raise ConstraintCapExceeded(total, max_constraints)
        rows.append(ii + s)
        cols.append(jj)
        rhs.append(c[ii, jj])
    return (np.concatenate(rows).astype(np.int64), np.concatenate(cols).astype(np.int64),
            np.concatenate(rhs))


def slack_extremes(r_interp, z_interp, cap, disk, cfg):
    """Per-sample minimum interpolated slack: ``(min over j for each i, min over i for each j)``."""
    M, N = len(cap), len(disk)
    block = _block_rows(M, N)
    row_min = np.empty(M)
    col_min = np.full(N, np.inf)
    for s in range(0, M, block):
        c = log_cost(cfg, cap.lifted[s:s + block, None, :], disk.samples[None, :, :])
        slack = r_interp[s:s + block, None] + z_interp[None, :] - c
        row_min[s:s + block] = slack.min(axis=1)
        np.minimum(col_min, slack.min(axis=0), out=col_min)
    return row_min, col_min


def _interpolants(prev, cap, disk, cfg, variable):
    return (interpolate(prev, cap.lifted, cfg, variable),
            interpolate_planar(prev, disk.samples, cfg, variable))


def refine_once(prev, h_next, epsilon, dataset, cfg, anchor_direction=DEFAULT_ANCHOR,
                anchor_rho=None, feas_tol=1e-9, act_tol=1e-7, max_constraints=None,
                dump_lp=None, interp="surface"):
    """One refinement step from ``prev`` to meshes of size ``h_next``.

    Returns a :class:`DiscreteSolution`, or an :class:`UnboundedReport` when
    the pruned LP leaves samples uncovered or the solver finds it unbounded.
    """
    if not h_next < prev.h:
        raise ValueError("h_next must be smaller than the previous level's h")
    if anchor_rho is None:
        anchor_rho = float(rho_exact(dataset.pair, np.asarray(anchor_direction, dtype=float)))
    level = prev.level + 1
    cap, disk = build_meshes(dataset, h_next, anchor_direction)
    r_i, z_j = _interpolants(prev, cap, disk, cfg, interp)
    rows, cols, rhs = select_constraints(r_i, z_j, cap, disk, cfg, epsilon, max_constraints)
    M, N = len(cap), len(disk)
    if len(rows) == 0:
        return UnboundedReport(level, h_next, epsilon, np.arange(M), np.arange(N), 0, M, N)
    lp = tlp.assemble(cap, disk, dataset.I, dataset.L, cfg,
                      anchor_value(cfg, anchor_rho, cap.lifted[0]),
                      subset=(rows, cols), rhs=rhs)
    cov = tlp.coverage_check(lp)
    if not cov.covered:
        return UnboundedReport(level, h_next, epsilon, cov.inputs, cov.outputs,
                               lp.n_constraints, M, N)
    if dump_lp:
        tlp.write_lp(lp, dump_lp)
    try:
        outcome = tlp.solve(lp, feas_tol=feas_tol, act_tol=act_tol)
    except Unbounded:
        return UnboundedReport(level, h_next, epsilon, np.array([], dtype=int),
                               np.array([], dtype=int), lp.n_constraints, M, N,
                               reason="solver")
    return _finish(level, h_next, cap, disk, lp, outcome, cfg, epsilon)


def covered_at(row_min, col_min, epsilon):
    """Coverage predicate of the pruned set at ``epsilon`` from per-sample minimum slacks."""
    return bool(np.all(row_min < epsilon) and np.all(col_min < epsilon))


def find_critical_epsilon(prev, h_next, dataset, cfg, bracket=(0.0, 10.0), iters=20,
                          anchor_direction=DEFAULT_ANCHOR, interp="surface"):
    """Bisect for the smallest threshold at which every sample keeps a constraint.

    Coverage is necessary for a bounded LP but not sufficient, so the value
    is a lower estimate of the true critical threshold.

    Returns
    -------
    float
        Upper end of the final bracket, within ``(hi - lo) / 2**iters`` of
        the critical value.
    """
    cap, disk = build_meshes(dataset, h_next, anchor_direction)
    r_i, z_j = _interpolants(prev, cap, disk, cfg, interp)
    row_min, col_min = slack_extremes(r_i, z_j, cap, disk, cfg)
    lo, hi = bracket
    if covered_at(row_min, col_min, lo) or not covered_at(row_min, col_min, hi):
        raise BadBracket(f"coverage does not change between {lo} and {hi}")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if covered_at(row_min, col_min, mid):
            hi = mid
        else:
            lo = mid
    return hi


def _report(sol_or_none, level, h, M, N, epsilon, constraints, status, t0, pair, objective=None):
    rep = IterationReport(
        level=level, h=h, M=M, N=N, epsilon=epsilon, constraints=int(constraints),
        pct_full=100.0 * constraints / (M * N) if M and N else 0.0,
        objective=objective, status=status,
    )
    if sol_or_none is not None and pair is not None:
        from .analysis import reflector_errors

        err = reflector_errors(sol_or_none, pair)
        rep.max_err_r1, rep.l2_err_r1 = err.max_err_r1, err.l2_err_r1
        rep.max_err_r2, rep.l2_err_r2 = err.max_err_r2, err.l2_err_r2
    rep.wall_time_s = time.perf_counter() - t0
    return rep


def run(config, dataset, dump_lp_dir=None, callback=None):
    """Run level 1 and then refinement levels until the sequence ends or a level fails.

    Parameters
    ----------
    config : RefinementConfig
    dataset : SyntheticDataset or any object with ``I``, ``L``, ``config``,
        ``cap_planar_radius`` and ``disk_radius``; ``pair`` enables error columns.
    dump_lp_dir : path-like, optional
        Write each level's LP there as ``level<k>.lp``.
    callback : callable, optional
        Called with each :class:`IterationReport` as soon as it is ready.

    Returns
    -------
    RunResult
        ``status`` is ``"completed"``, ``"unbounded"`` or ``"constraint_cap"``.
    """
    cfg = dataset.config
    pair = getattr(dataset, "pair", None)
    hs = config.levels()
    rho1 = _anchor_rho(config, dataset)
    result = RunResult()

    def dump(k):
        return None if dump_lp_dir is None else f"{dump_lp_dir}/level{k}.lp"

    def emit(rep):
        result.reports.append(rep)
        log.info("level %d h=%.5g status=%s constraints=%d", rep.level, rep.h, rep.status,
                 rep.constraints)
        if callback is not None:
            callback(rep)

    t0 = time.perf_counter()
    try:
        sol = solve_simple(dataset, cfg, hs[0], config.anchor_direction, rho1,
                           config.feas_tol, config.act_tol, dump_lp=dump(1),
                           max_constraints=config.max_constraints)
    except ConstraintCapExceeded as exc:
        cap, disk = build_meshes(dataset, hs[0], config.anchor_direction)
        emit(_report(None, 1, hs[0], len(cap), len(disk), None, exc.count, "constraint_cap",
                     t0, pair))
        result.status = "constraint_cap"
        return result
    result.solutions.append(sol)
    emit(_report(sol, 1, hs[0], sol.M, sol.N, None, sol.constraint_count, "optimal", t0,
                 pair, sol.objective))

    for k, h in enumerate(hs[1:], start=2):
        t0 = time.perf_counter()
        prev = result.solutions[-1]
        if config.epsilon_mode == "formula":
            eps = epsilon_schedule(config.C, config.a, h)
        else:
            eps = find_critical_epsilon(prev, h, dataset, cfg, bracket=(0.0, 10.0),
                                        anchor_direction=config.anchor_direction,
                                        interp=config.interp)
            eps *= 1.0 + config.critical_margin
        try:
            out = refine_once(prev, h, eps, dataset, cfg, config.anchor_direction, rho1,
                              config.feas_tol, config.act_tol, config.max_constraints,
                              dump_lp=dump(k), interp=config.interp)
        except ConstraintCapExceeded as exc:
            cap, disk = build_meshes(dataset, h, config.anchor_direction)
            emit(_report(None, k, h, len(cap), len(disk), eps, exc.count, "constraint_cap",
                         t0, pair))
            result.status = "constraint_cap"
            return result
        if isinstance(out, UnboundedReport):
            emit(_report(None, k, h, out.M, out.N, eps, out.constraint_count, "unbounded",
                         t0, pair))
            result.status = "unbounded"
            result.unbounded = out
            return result
        result.solutions.append(out)
        emit(_report(out, k, h, out.M, out.N, eps, out.constraint_count, "optimal", t0, pair,
                     out.objective))
    return result
