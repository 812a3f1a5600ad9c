"""Finite-rank observability Gramian and margin on the gradient-trace span.

The output Gram matrix pairs the per-mode sensor responses over the
measurement window: A[m, m'] = (integral of exp((l_m + l_m') t) over
[0, T]) times the signature products summed over sensors.  Positive
definiteness of the Gramian on the span of the gradient traces over the
region is certified per eigenvalue group through the generalized
eigenproblem against the corresponding block of the gradient Gram matrix;
the margin is the smallest of those group eigenvalues.

The joint all-modes pencil is also solved and reported, but only as a
diagnostic: the Gram matrix of decaying exponentials is so ill-conditioned
(smallest eigenvalue around 1e-13 for twelve modes on a unit window) that
its smallest generalized eigenvalue sits at the double-precision floor for
every sensor placement, strategic or not, and cannot separate the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .quadrature import QuadratureSpec
from .sensors import Sensor, signature_matrix, validate_sensor
from .spectral import ModalBasis, Subregion, gradient_gram
from .strategic import DEFAULT_GROUPING_RTOL, group_eigenvalues

DEFAULT_MARGIN_TOL = 1e-10
DEFAULT_TRACE_RANK_TOL = 1e-12


def time_correlation(lam1: float, lam2: float, horizon: float) -> float:
    """Integral of exp((lam1 + lam2) t) over [0, horizon].

    Closed form (exp(s T) - 1)/s with the s -> 0 limit equal to T.  An
    infinite horizon is allowed when the rate sum is negative.  expm1
    keeps the value accurate for both tiny and very negative rate sums.
    """
    s = lam1 + lam2
    if math.isinf(horizon):
        if s < 0:
            return -1.0 / s
        return math.inf
    if horizon <= 0:
        raise ValidationError(f"measurement horizon must be positive, got {horizon}")
    if s == 0.0:
        return horizon
    return float(math.expm1(s * horizon) / s)


@dataclass(frozen=True)
class GroupMargin:
    """Positive-definiteness margin of one eigenvalue group."""

    eigenvalue: float
    multiplicity: int
    margin: float
    trace_rank: int
    rank_deficient: bool


@dataclass(frozen=True, eq=False)
class GramianResult:
    """Assembled finite-rank Gramian data.

    output_gram: time-correlation weighted signature Gram (A).
    trace_gram: gradient-trace Gram over the region (W).
    margin: smallest per-group generalized eigenvalue of (A, W) blocks,
    clamped at zero; the strategic verdict is margin > margin_tol.
    joint_margin: raw smallest generalized eigenvalue of the full pencil,
    diagnostic only (see module docstring).
    """

    output_gram: np.ndarray
    trace_gram: np.ndarray
    margin: float
    joint_margin: float
    group_margins: tuple[GroupMargin, ...]
    positive_definite: bool
    constant: float
    signature_mode: str
    horizon: float
    truncation: int
    margin_tol: float
    trace_rank_tol: float
    all_zero_signatures: bool
    rank_deficient: bool


def _correlation_matrix(eigenvalues: np.ndarray, horizon: float) -> np.ndarray:
    """Vectorized time_correlation over all eigenvalue pairs."""
    s = eigenvalues[:, None] + eigenvalues[None, :]
    if math.isinf(horizon):
        if np.any(s >= 0):
            raise ValidationError(
                "infinite horizon needs strictly negative eigenvalue sums")
        return -1.0 / s
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(s == 0.0, horizon, np.expm1(s * horizon) / s)
    return tau


def _whitened_pencil_min(A: np.ndarray, W: np.ndarray,
                         trace_rank_tol: float) -> tuple[float, int]:
    """Smallest eigenvalue of the pencil (A, W) on the numerical range of W."""
    Ws = 0.5 * (W + W.T)
    evals, vecs = np.linalg.eigh(Ws)
    keep = evals > trace_rank_tol * max(float(evals.max()), 0.0)
    if not np.any(keep):
        return 0.0, 0
    basis_cols = vecs[:, keep] / np.sqrt(evals[keep])
    M = basis_cols.T @ (0.5 * (A + A.T)) @ basis_cols
    return float(np.linalg.eigvalsh(M)[0]), int(np.count_nonzero(keep))


def assemble_gramian(basis: ModalBasis, sensors: list[Sensor], region: Subregion,
                     horizon: float = 1.0, signature_mode: str = "gradient",
                     quad: QuadratureSpec | None = None,
                     grouping_rtol: float = DEFAULT_GROUPING_RTOL,
                     margin_tol: float = DEFAULT_MARGIN_TOL,
                     trace_rank_tol: float = DEFAULT_TRACE_RANK_TOL,
                     trace_gram: np.ndarray | None = None) -> GramianResult:
    """Assemble the finite-rank Gramian and its observability margin.

    ``signature_mode`` selects which signatures weight the output Gram
    matrix: "gradient" matches the rank condition the margin certifies,
    "state" gives the physical-output pairing.  A precomputed
    ``trace_gram`` may be passed to amortize quadrature across calls with
    identical basis and region.
    """
    if horizon <= 0 and not math.isinf(horizon):
        raise ValidationError(f"measurement horizon must be positive, got {horizon}")
    if not sensors:
        raise ValidationError("empty sensor list")
    for s in sensors:
        validate_sensor(s, basis.domain)
    region.validate_in(basis.domain)
    if signature_mode not in ("gradient", "state"):
        raise ValidationError(f"unknown signature mode {signature_mode!r}")

    sig = signature_matrix(basis, sensors, signature_mode, quad)
    tau = _correlation_matrix(basis.eigenvalues, horizon)
    A = tau * (sig.T @ sig)
    A = 0.5 * (A + A.T)

    W = trace_gram if trace_gram is not None else gradient_gram(basis, region, quad)

    groups = group_eigenvalues(basis, grouping_rtol)
    group_margins = []
    overall = math.inf
    deficient = False
    for g in groups:
        idx = list(g.indices)
        m, kept = _whitened_pencil_min(A[np.ix_(idx, idx)], W[np.ix_(idx, idx)],
                                       trace_rank_tol)
        m = max(0.0, m)
        is_deficient = kept < g.multiplicity
        deficient = deficient or is_deficient
        group_margins.append(GroupMargin(
            eigenvalue=g.eigenvalue, multiplicity=g.multiplicity,
            margin=m, trace_rank=kept, rank_deficient=is_deficient))
        if kept > 0:
            overall = min(overall, m)
    if math.isinf(overall):
        overall = 0.0

    joint, _ = _whitened_pencil_min(A, W, trace_rank_tol)

    all_zero = bool(np.all(np.abs(sig) == 0.0))
    positive = overall > margin_tol
    constant = 1.0 / math.sqrt(overall) if positive else math.inf

    return GramianResult(
        output_gram=A,
        trace_gram=W,
        margin=overall,
        joint_margin=joint,
        group_margins=tuple(group_margins),
        positive_definite=positive,
        constant=constant,
        signature_mode=signature_mode,
        horizon=horizon,
        truncation=basis.truncation,
        margin_tol=margin_tol,
        trace_rank_tol=trace_rank_tol,
        all_zero_signatures=all_zero,
        rank_deficient=deficient)


def observability_constant(result: GramianResult,
                           margin_tol: float | None = None) -> float:
    """Smallest admissible constant in the truncated observation inequality.

    Equals 1/sqrt(margin) in the region-weighted metric; infinite when the
    margin does not clear the tolerance, meaning the truncated system is
    not gradient observable on the region at this sensor placement.
    """
    tol = result.margin_tol if margin_tol is None else margin_tol
    if result.margin > tol:
        return 1.0 / math.sqrt(result.margin)
    return math.inf
