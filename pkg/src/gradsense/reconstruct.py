"""Initial-gradient recovery from measurement series.

Modal least squares on the truncated basis: the design matrix pairs each
(sensor, sample time) with exp(lambda_m t) times the chosen signature of
mode m.  Columns whose norm falls below the identifiability threshold are
dropped and their coefficients pinned to zero, so blind modes degrade the
answer instead of failing it.  Tikhonov and discrepancy-principle
regularization stabilize noisy or ill-conditioned solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ComputationError, ValidationError
from .quadrature import QuadratureSpec, interval_rule
from .sensors import MeasurementSeries, Sensor, signature_matrix, validate_sensor
from .spectral import (
    GradientField,
    Mode,
    ModalBasis,
    Subregion,
    eigenfunction_gradients,
    gradient_gram,
)

DEFAULT_IDENTIFIABILITY_TOL = 1e-8
REGULARIZATIONS = ("none", "tikhonov", "discrepancy")


def design_matrix(basis: ModalBasis, sensors: list[Sensor], times: np.ndarray,
                  signature_mode: str, quad: QuadratureSpec | None = None) -> np.ndarray:
    """Rows ordered sensor-major to match MeasurementSeries.values.ravel()."""
    sig = signature_matrix(basis, sensors, signature_mode, quad)  # (q, N)
    decay = np.exp(np.outer(np.asarray(times, dtype=float), basis.eigenvalues))  # (M, N)
    return (sig[:, None, :] * decay[None, :, :]).reshape(-1, basis.n_modes)


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """Estimated modal coefficients plus solve diagnostics."""

    coefficients: np.ndarray
    unidentifiable_modes: tuple[Mode, ...]
    column_norms: np.ndarray
    residual_norm: float
    condition_number: float
    regularization: str
    reg_value: float
    signature_mode: str


def _solve_regularized(design: np.ndarray, rhs: np.ndarray, kind: str,
                       value: float) -> np.ndarray:
    """Solve min |design z - rhs|^2 (+ value |z|^2) on equilibrated columns."""
    if kind == "none" or value == 0.0:
        sol, *_ = np.linalg.lstsq(design, rhs, rcond=None)
        return sol
    n = design.shape[1]
    stacked = np.vstack([design, math.sqrt(value) * np.eye(n)])
    padded = np.concatenate([rhs, np.zeros(n)])
    sol, *_ = np.linalg.lstsq(stacked, padded, rcond=None)
    return sol


def estimate_coefficients(measurements: MeasurementSeries, basis: ModalBasis,
                          sensors: list[Sensor], signature_mode: str = "state",
                          regularization: str = "tikhonov", reg_value: float = 1e-10,
                          identifiability_tol: float = DEFAULT_IDENTIFIABILITY_TOL,
                          quad: QuadratureSpec | None = None) -> ReconstructionResult:
    """Least-squares estimate of the initial modal coefficients.

    signature_mode "state" inverts the physical output pairing; "gradient"
    inverts the adjoint-gradient pairing instead, in which case modes blind
    to every sensor's gradient reading come back flagged and zeroed.

    regularization: "none", "tikhonov" (reg_value is the penalty weight),
    or "discrepancy" (reg_value is the per-sample noise level; the penalty
    is grown until the residual matches it).
    """
    if regularization not in REGULARIZATIONS:
        raise ValidationError(
            f"unknown regularization {regularization!r}; choose from {REGULARIZATIONS}")
    if not sensors:
        raise ValidationError("empty sensor list")
    for s in sensors:
        validate_sensor(s, basis.domain)
    if measurements.n_sensors != len(sensors):
        raise ValidationError(
            f"measurement series has {measurements.n_sensors} rows "
            f"but {len(sensors)} sensors were given")
    y = measurements.values.ravel()
    if y.size == 0:
        raise ValidationError("empty measurements")

    Phi = design_matrix(basis, sensors, measurements.times, signature_mode, quad)
    norms = np.linalg.norm(Phi, axis=0)
    identifiable = norms > identifiability_tol
    if not np.any(identifiable):
        raise ValidationError(
            "all design-matrix columns are degenerate; no mode is identifiable")

    # column equilibration keeps the solve accurate despite the decay spread
    sub = Phi[:, identifiable]
    scale = norms[identifiable]
    equilibrated = sub / scale

    svals = np.linalg.svd(equilibrated, compute_uv=False)
    condition = float(svals[0] / svals[-1]) if svals[-1] > 0 else math.inf

    if regularization == "discrepancy":
        z = _solve_discrepancy(equilibrated, y, reg_value)
    else:
        z = _solve_regularized(equilibrated, y, regularization, reg_value)

    coeffs = np.zeros(basis.n_modes)
    coeffs[identifiable] = z / scale
    residual = float(np.linalg.norm(Phi @ coeffs - y))
    flagged = tuple(m for m, ok in zip(basis.modes, identifiable) if not ok)
    return ReconstructionResult(
        coefficients=coeffs,
        unidentifiable_modes=flagged,
        column_norms=norms,
        residual_norm=residual,
        condition_number=condition,
        regularization=regularization,
        reg_value=reg_value,
        signature_mode=signature_mode)


def _solve_discrepancy(design: np.ndarray, rhs: np.ndarray,
                       noise_level: float) -> np.ndarray:
    """Morozov principle: grow the penalty until the residual hits the noise."""
    if noise_level < 0:
        raise ValidationError(f"noise level must be nonnegative, got {noise_level}")
    target = noise_level * math.sqrt(rhs.size)
    z = _solve_regularized(design, rhs, "none", 0.0)
    if float(np.linalg.norm(design @ z - rhs)) >= target or target == 0.0:
        return z
    lo, hi = -16.0, 6.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        z = _solve_regularized(design, rhs, "tikhonov", 10.0 ** mid)
        if float(np.linalg.norm(design @ z - rhs)) < target:
            lo = mid
        else:
            hi = mid
    return _solve_regularized(design, rhs, "tikhonov", 10.0 ** lo)


def gradient_field_on_region(basis: ModalBasis, coeffs: np.ndarray, region: Subregion,
                             grid: int | np.ndarray | str = "quadrature",
                             quad: QuadratureSpec | None = None) -> GradientField:
    """Sample the coefficient combination of basis gradients over a region.

    grid: "quadrature" uses the region's composite Gauss-Legendre nodes and
    carries their weights, so the field can be normed; an integer requests
    that many uniformly spaced interior points per axis; an explicit array
    of points is used as given.  Points outside the region are rejected.
    """
    region.validate_in(basis.domain)
    a = np.asarray(coeffs, dtype=float)
    if a.shape != (basis.n_modes,):
        raise ValidationError(
            f"coefficient vector has length {a.shape}, basis has {basis.n_modes} modes")
    weights = None
    if isinstance(grid, str):
        if grid != "quadrature":
            raise ValidationError(f"unknown grid spec {grid!r}")
        axes = []
        for axis, (lo, hi) in enumerate(region.float_bounds):
            _, span = basis.axis_interval(axis)
            cycles = basis.truncation * (hi - lo) / span
            axes.append(interval_rule(lo, hi, cycles, quad))
        if basis.dim == 1:
            points = axes[0][0][:, None]
            weights = axes[0][1]
        else:
            (x1, w1), (x2, w2) = axes
            points = np.column_stack([np.repeat(x1, len(x2)), np.tile(x2, len(x1))])
            weights = np.outer(w1, w2).ravel()
    elif isinstance(grid, int):
        if grid < 1:
            raise ValidationError(f"grid point count must be >= 1, got {grid}")
        axes_pts = [np.linspace(lo, hi, grid + 2)[1:-1]
                    for lo, hi in region.float_bounds]
        if basis.dim == 1:
            points = axes_pts[0][:, None]
        else:
            points = np.column_stack([np.repeat(axes_pts[0], grid),
                                      np.tile(axes_pts[1], grid)])
    else:
        points = np.atleast_2d(np.asarray(grid, dtype=float))
        if points.shape[1] != basis.dim:
            raise ValidationError(
                f"grid points have {points.shape[1]} coordinates, basis dimension is {basis.dim}")
        for p in points:
            if not region.contains(p, tol=1e-12):
                raise ValidationError(f"grid point {tuple(p)} lies outside the region")

    grads = eigenfunction_gradients(basis, points)        # (N, dim, n_pts)
    values = np.einsum("m,mdp->pd", a, grads)
    return GradientField(points=points, values=values, weights=weights)


@dataclass(frozen=True)
class ErrorRecord:
    """Gradient reconstruction error over the region and the whole domain."""

    err_region: float
    err_domain: float

    @property
    def restriction_ok(self) -> bool:
        return self.err_region <= self.err_domain + 1e-12


def reconstruction_error(true_coeffs: np.ndarray, est_coeffs: np.ndarray,
                         basis: ModalBasis, region: Subregion,
                         quad: QuadratureSpec | None = None) -> ErrorRecord:
    """L2 gradient error of the estimate, restricted and unrestricted."""
    a = np.asarray(true_coeffs, dtype=float)
    b = np.asarray(est_coeffs, dtype=float)
    if a.shape != b.shape or a.shape != (basis.n_modes,):
        raise ValidationError(
            "coefficient vectors must both match the basis truncation; got "
            f"{a.shape} and {b.shape} for {basis.n_modes} modes")
    region.validate_in(basis.domain)
    e = a - b
    W_region = gradient_gram(basis, region, quad)
    W_domain = gradient_gram(basis, None, quad)
    err_region = math.sqrt(max(0.0, float(e @ W_region @ e)))
    err_domain = math.sqrt(max(0.0, float(e @ W_domain @ e)))
    record = ErrorRecord(err_region=err_region, err_domain=err_domain)
    if not record.restriction_ok:
        raise ComputationError(
            f"restriction inequality violated: {err_region} > {err_domain}; "
            "quadrature resolution is insufficient")
    return record
