"""Discretised dual transport LP: assembly, coverage check, solve, active set.

Variables are ``r_i = log rho_tilde(m_i)`` on the cap samples and
``z_j = log z_tilde(x_j)`` on the disk samples.  The LP is

    minimise   sum_i a_i r_i + sum_j b_j z_j
    subject to r_i + z_j >= log K(m_i, x_j)   for the selected pairs (i, j)
               r_0 = anchor value

with ``a_i = I(m_i) w_i`` and ``b_j`` the output weights rescaled so that
both sides carry the same total energy.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import EmptySubset, MissingRow, NumericalFailure, Unbounded
from .geometry import log_cost

ANCHOR = 0


def thread_count():
    """Data-parallel width, capped by ``REFLECTOR_OT_THREADS``."""
    env = os.environ.get("REFLECTOR_OT_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


def log_cost_matrix(cfg, dirs, pts, rows=None):
    """Dense ``log K`` for every pair of ``dirs[rows]`` and ``pts``.

    Rows are evaluated in blocks, in parallel when more than one thread is
    allowed; numpy releases the GIL inside the kernels.
    """
    dirs = np.asarray(dirs, dtype=float)
    if rows is not None:
        dirs = dirs[rows]
    out = np.empty((len(dirs), len(pts)))
    block = max(1, 200_000 // max(len(pts), 1))
    starts = range(0, len(dirs), block)

    def fill(s):
        out[s:s + block] = log_cost(cfg, dirs[s:s + block, None, :], pts[None, :, :])

    threads = thread_count()
    if threads > 1 and len(dirs) > block:
        with ThreadPoolExecutor(threads) as ex:
            list(ex.map(fill, starts))
    else:
        for s in starts:
            fill(s)
    return out


@dataclass(frozen=True)
class DualLP:
    """One assembled LP.  Constraint ``k`` reads ``r[rows[k]] + z[cols[k]] >= rhs[k]``."""

    r_weights: np.ndarray
    z_weights: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    rhs: np.ndarray
    anchor_value: float
    anchor_index: int = ANCHOR
    z_scale: float = 1.0

    @property
    def M(self):
        return len(self.r_weights)

    @property
    def N(self):
        return len(self.z_weights)

    @property
    def n_constraints(self):
        return len(self.rows)

    def objective(self, r, z):
        """Objective value at ``(r, z)``, summed with extended precision."""
        return math.fsum(np.concatenate([self.r_weights * r, self.z_weights * z]))

    def slacks(self, r, z):
        return r[self.rows] + z[self.cols] - self.rhs


@dataclass(frozen=True)
class Coverage:
    """Indices that appear in no constraint of an LP."""

    inputs: np.ndarray
    outputs: np.ndarray

    @property
    def covered(self):
        return len(self.inputs) == 0 and len(self.outputs) == 0


@dataclass(frozen=True)
class ActiveSet:
    """Constraints binding at a solution, with their slacks."""

    rows: np.ndarray
    cols: np.ndarray
    slack: np.ndarray

    def pairs(self):
        return set(zip(self.rows.tolist(), self.cols.tolist()))

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True)
class LPOutcome:
    """Result of :func:`solve`."""

    status: str
    r: np.ndarray = None
    z: np.ndarray = None
    objective: float = float("nan")
    active: ActiveSet = None
    witness: object = None
    iterations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status == "optimal"


def _pairs_to_arrays(subset, M, N):
    if isinstance(subset, tuple) and len(subset) == 2 and np.ndim(subset[0]) == 1:
        rows = np.asarray(subset[0], dtype=np.int64)
        cols = np.asarray(subset[1], dtype=np.int64)
    else:
        arr = np.asarray(list(subset), dtype=np.int64).reshape(-1, 2)
        rows, cols = arr[:, 0], arr[:, 1]
    if len(rows) == 0:
        raise EmptySubset("constraint subset is empty")
    if rows.min() < 0 or rows.max() >= M or cols.min() < 0 or cols.max() >= N:
        raise IndexError("constraint index out of range")
    key = np.unique(rows * N + cols)
    return key // N, key % N


def mass_balanced_weights(cap, disk, I, L):
    """Return ``(a, b, scale)`` with ``b`` rescaled so that ``sum(a) == sum(b)``."""
    a = np.asarray(I(cap.lifted), dtype=float) * cap.weights
    b_raw = np.asarray(L(disk.samples), dtype=float) * disk.weights
    if np.any(a < 0) or np.any(b_raw < 0) or a.sum() <= 0 or b_raw.sum() <= 0:
        raise ValueError("intensities must be nonnegative and not identically zero")
    scale = math.fsum(a) / math.fsum(b_raw)
    return a, b_raw * scale, scale


def assemble(cap, disk, I, L, cfg, anchor_value, subset=None, rhs=None):
    """Build the LP on the given meshes.

    Parameters
    ----------
    cap, disk : TriMesh
        Input (cap) and output (disk) meshes; sample 0 of ``cap`` is the anchor.
    I, L : callable
        Input intensity on directions and output intensity on plane points.
    cfg : OpticalConfig
    anchor_value : float
        Fixed value of ``r_0``, i.e. ``log rho_tilde`` at the anchor sample.
    subset : tuple of arrays or iterable of pairs, optional
        Constraint pairs ``(i, j)``; all ``M * N`` pairs when omitted.
    rhs : ndarray, optional
        Precomputed ``log K`` for ``subset`` (same order, already unique).
    """
    a, b, scale = mass_balanced_weights(cap, disk, I, L)
    M, N = len(cap), len(disk)
    if subset is None:
        rows = np.repeat(np.arange(M), N)
        cols = np.tile(np.arange(N), M)
        rhs = log_cost_matrix(cfg, cap.lifted, disk.samples).ravel()
    else:
        if rhs is None:
            rows, cols = _pairs_to_arrays(subset, M, N)
            rhs = log_cost(cfg, cap.lifted[rows], disk.samples[cols])
        else:
            rows = np.asarray(subset[0], dtype=np.int64)
            cols = np.asarray(subset[1], dtype=np.int64)
            if len(rows) == 0:
                raise EmptySubset("constraint subset is empty")
    return DualLP(a, b, rows, cols, np.asarray(rhs, dtype=float), float(anchor_value), ANCHOR, scale)


def coverage_check(lp):
    """List input and output indices that no constraint touches.

    Any such index makes the LP unbounded: its variable has a positive
    objective weight and is only ever bounded from below.
    """
    seen_r = np.zeros(lp.M, dtype=bool)
    seen_z = np.zeros(lp.N, dtype=bool)
    seen_r[lp.rows] = True
    seen_z[lp.cols] = True
    return Coverage(np.flatnonzero(~seen_r), np.flatnonzero(~seen_z))


def solve(lp, feas_tol=1e-9, opt_tol=1e-9, act_tol=1e-7):
    """Solve the LP with the anchor eliminated.

    ``r_0`` is substituted, turning its constraints into lower bounds on
    ``z``.  The remaining LP is handed to HiGHS's dual simplex.

    Returns
    -------
    LPOutcome
        With ``status == "optimal"``.

    Raises
    ------
    Unbounded
        When coverage fails or the solver reports unboundedness.
    NumericalFailure
        For any other solver failure.
    """
    cov = coverage_check(lp)
    if len(cov.outputs) or np.any(cov.inputs != lp.anchor_index):
        raise Unbounded("some samples appear in no constraint", witness=cov)
    M, N = lp.M, lp.N
    k = lp.anchor_index
    free_r = np.delete(np.arange(M), k)
    r_pos = np.full(M, -1)
    r_pos[free_r] = np.arange(M - 1)
    nvar = M - 1 + N

    at_anchor = lp.rows == k
    z_lb = np.full(N, -np.inf)
    np.maximum.at(z_lb, lp.cols[at_anchor], lp.rhs[at_anchor] - lp.anchor_value)
    rows, cols, rhs = lp.rows[~at_anchor], lp.cols[~at_anchor], lp.rhs[~at_anchor]
    m = len(rows)
    A = sp.csr_matrix(
        (
            -np.ones(2 * m),
            (np.repeat(np.arange(m), 2), np.column_stack([r_pos[rows], M - 1 + cols]).ravel()),
        ),
        shape=(m, nvar),
    )
    c = np.concatenate([lp.r_weights[free_r], lp.z_weights])
    lower = np.concatenate([np.full(M - 1, -np.inf), z_lb])
    bounds = np.column_stack([lower, np.full(nvar, np.inf)])
    res = linprog(
        c,
        A_ub=A if m else None,
        b_ub=-rhs if m else None,
        bounds=bounds,
        method="highs-ds",
        options={
            "primal_feasibility_tolerance": feas_tol,
            "dual_feasibility_tolerance": opt_tol,
            "presolve": True,
        },
    )
    if res.status == 3:
        raise Unbounded("LP solver reports an unbounded objective", witness=res.message)
    if res.status == 2:
        return LPOutcome("infeasible", witness=res.message)
    if res.status != 0:
        raise NumericalFailure(f"LP solver failed: {res.message}")
    r = np.empty(M)
    r[k] = lp.anchor_value
    r[free_r] = res.x[: M - 1]
    z = res.x[M - 1:]
    outcome = LPOutcome(
        "optimal", r, z, lp.objective(r, z), iterations=int(getattr(res, "nit", 0)),
        info={"message": res.message},
    )
    return LPOutcome(**{**outcome.__dict__, "active": active_constraints(lp, outcome, act_tol)})


def active_constraints(lp, outcome, act_tol=1e-7):
    """Constraints whose slack at the solution is at most ``act_tol``."""
    s = lp.slacks(outcome.r, outcome.z)
    idx = np.flatnonzero(s <= act_tol)
    return ActiveSet(lp.rows[idx], lp.cols[idx], s[idx])


def ray_map_from_active(active, M):
    """Discrete ray tracing map from an active set.

    For each input ``i`` picks the output ``j`` with the smallest slack,
    breaking ties by the smallest ``j``.

    Returns
    -------
    jstar : (M,) ndarray of int
    multiplicity : (M,) ndarray of int
        Number of active partners of each input.
    """
    mult = np.bincount(active.rows, minlength=M)
    if np.any(mult == 0):
        missing = np.flatnonzero(mult == 0)
        raise MissingRow(f"inputs without an active constraint: {missing[:10].tolist()}")
    order = np.lexsort((active.cols, active.slack, active.rows))
    rows = active.rows[order]
    first = np.flatnonzero(np.r_[True, rows[1:] != rows[:-1]])
    jstar = np.empty(M, dtype=np.int64)
    jstar[rows[first]] = active.cols[order][first]
    return jstar, mult


def write_lp(lp, path):
    """Write the LP in CPLEX LP text format with 12 significant digits.

    Variables are ``r<i>`` and ``z<j>``; the anchor is an equality row.
    """
    g = lambda v: format(float(v), ".12g")  # noqa: E731
    with open(path, "w") as fh:
        fh.write("\\ dual reflector transport LP\nMinimize\n obj:")
        for i, w in enumerate(lp.r_weights):
            fh.write(f" + {g(w)} r{i}")
        for j, w in enumerate(lp.z_weights):
            fh.write(f" + {g(w)} z{j}")
        fh.write("\nSubject To\n")
        fh.write(f" anchor: r{lp.anchor_index} = {g(lp.anchor_value)}\n")
        for k, (i, j, c) in enumerate(zip(lp.rows, lp.cols, lp.rhs)):
            fh.write(f" c{k}: r{i} + z{j} >= {g(c)}\n")
        fh.write("Bounds\n")
        for i in range(lp.M):
            fh.write(f" r{i} free\n")
        for j in range(lp.N):
            fh.write(f" z{j} free\n")
        fh.write("End\n")
