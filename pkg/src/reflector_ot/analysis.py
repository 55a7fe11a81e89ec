"""Error metrics against the exact pair, decay fits, energy and constraint statistics."""

from dataclasses import dataclass

import numpy as np

from .analytic import rho_exact, z_exact
from .errors import InsufficientData


@dataclass
class ErrorReport:
    """Max and weighted RMS errors of both reflectors, plus per-sample errors.

    The L2 errors are ``sqrt(sum w e^2 / sum w)`` with the mesh weights.
    """

    max_err_r1: float
    l2_err_r1: float
    max_err_r2: float
    l2_err_r2: float
    err_r1: np.ndarray
    err_r2: np.ndarray

    def summary(self):
        return {
            "max_err_r1": self.max_err_r1,
            "l2_err_r1": self.l2_err_r1,
            "max_err_r2": self.max_err_r2,
            "l2_err_r2": self.l2_err_r2,
        }


def _weighted_rms(e, w):
    return float(np.sqrt(np.sum(w * e * e) / np.sum(w)))


def errors_from_arrays(rho, zsurf, cap, disk, pair):
    e1 = np.abs(np.asarray(rho) - rho_exact(pair, cap.lifted))
    e2 = np.abs(np.asarray(zsurf) - z_exact(pair, disk.samples))
    return ErrorReport(
        float(e1.max()), _weighted_rms(e1, cap.weights),
        float(e2.max()), _weighted_rms(e2, disk.weights),
        e1, e2,
    )


def reflector_errors(sol, pair):
    """Errors of a :class:`~reflector_ot.refine.DiscreteSolution` against ``pair``."""
    return errors_from_arrays(sol.rho, sol.zsurf, sol.cap, sol.disk, pair)


def decay_fit(errors, n_tot):
    """Least-squares exponent ``alpha`` in ``error ~ n_tot ** alpha``."""
    errors = np.asarray(errors, dtype=float)
    n_tot = np.asarray(n_tot, dtype=float)
    if len(errors) < 3 or len(errors) != len(n_tot):
        raise InsufficientData("need at least three (error, size) pairs")
    slope, _ = np.polyfit(np.log(n_tot), np.log(errors), 1)
    return float(slope)


@dataclass
class EnergyReport:
    imbalance: np.ndarray
    max_rel: float
    mean_rel: float


def energy_report(sol, dataset):
    """Energy each output sample receives through the discrete ray map minus its own.

    Relative figures divide by the mean output cell energy.
    """
    a = dataset.I(sol.cap.lifted) * sol.cap.weights
    b = dataset.L(sol.disk.samples) * sol.disk.weights
    b = b * (a.sum() / b.sum())
    received = np.bincount(sol.ray_map, weights=a, minlength=len(b))
    imb = received - b
    scale = b.mean()
    return EnergyReport(imb, float(np.abs(imb).max() / scale), float(np.abs(imb).mean() / scale))


def constraint_stats(reports):
    """Rows ``(level, count, pct_of_full)`` from iteration reports or dicts."""
    rows = []
    for rep in reports:
        d = rep if isinstance(rep, dict) else rep.to_dict()
        full = d["M"] * d["N"]
        rows.append((d["level"], d["constraints"], 100.0 * d["constraints"] / full))
    return rows
