"""Command dispatch: turn a scenario plus a command name into a Report.

Commands:
  check        rank test plus the closed-form engines, with agreement flags
  gramian      finite-rank Gramian margin and observability constant
  simulate     forward measurement series from the initial coefficients
  reconstruct  simulate, invert, and report coefficient and gradient errors
  scan         sweep candidate pointwise locations over a grid
  split        sensor-kernel mode split and the independence check

Every result block echoes the truncation and tolerances it was computed
with, so emitted verdicts are reproducible claims.
"""

from __future__ import annotations

import time
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._version import __version__
from .errors import ValidationError
from .gramian import assemble_gramian, observability_constant
from .reconstruct import (
    estimate_coefficients,
    gradient_field_on_region,
    reconstruction_error,
)
from .report import Report
from .scenario import Scenario, parse_number
from .sensors import PointwiseSensor, simulate_output
from .spectral import gradient_gram
from .strategic import (
    basis_split,
    closed_form_condition,
    exact_pointwise_verdict_1d,
    forbidden_sets_1d,
    rank_test,
    residual_independence_check,
)

COMMANDS = ("check", "gramian", "simulate", "reconstruct", "scan", "split")


def _mode_json(mode):
    return list(mode) if isinstance(mode, tuple) else mode


def _tolerances(sc: Scenario) -> dict:
    return {
        "rank": sc.rank_rtol,
        "grouping": sc.grouping_rtol,
        "margin": sc.margin_tol,
        "blind": sc.blind_tol,
        "identifiability": sc.identifiability_tol,
    }


def run_command(sc: Scenario, command: str, seed: int | None = None,
                grid_spec: str | None = None) -> Report:
    """Execute one command against a validated scenario."""
    if command not in COMMANDS:
        raise ValidationError(f"unknown command {command!r}; choose from {COMMANDS}")
    start = time.perf_counter()
    effective_seed = sc.noise_seed if seed is None else seed
    if command == "check":
        results = _check_results(sc)
    elif command == "gramian":
        results = _gramian_results(sc)
    elif command == "simulate":
        results = _simulate_results(sc, effective_seed)
    elif command == "reconstruct":
        results = _reconstruct_results(sc, effective_seed)
    elif command == "scan":
        results = _scan_results(sc, grid_spec)
    else:
        results = _split_results(sc)
    results["truncation"] = sc.basis.truncation
    results["tolerances"] = _tolerances(sc)
    if seed is not None:
        results["seed"] = seed
    return Report(command=command, version=__version__, scenario=sc.echo,
                  results=results, wall_time_seconds=time.perf_counter() - start)


def _group_rows(verdict) -> list[dict]:
    rows = []
    for grad, state in zip(verdict.gradient_records, verdict.state_records):
        rows.append({
            "eigenvalue": grad.eigenvalue,
            "modes": [_mode_json(m) for m in grad.modes],
            "multiplicity": grad.multiplicity,
            "rank_gradient": grad.rank,
            "rank_state": state.rank,
            "pass_gradient": grad.passed,
            "pass_state": state.passed,
            "marginal": grad.marginal or state.marginal,
        })
    return rows


def _normalized_1d_location(sensor: PointwiseSensor, length: float):
    """Location rescaled to the unit interval; exactness kept when length is 1."""
    b = sensor.location[0]
    if isinstance(b, Fraction) and length == 1.0:
        return b
    if isinstance(b, int) and length == 1.0:
        return Fraction(b)
    return float(b) / length


def _check_results(sc: Scenario) -> dict:
    verdict = rank_test(sc.basis, list(sc.sensors), sc.rank_rtol,
                        sc.grouping_rtol, sc.quad)
    results: dict = {
        "state_strategic": verdict.state_strategic,
        "gradient_strategic": verdict.gradient_strategic,
        "engine": "rank",
        "sensor_count": verdict.sensor_count,
        "max_multiplicity": verdict.max_multiplicity,
        "gradient_reason": verdict.gradient_reason,
        "state_reason": verdict.state_reason,
        "any_member_gradient_strategic": verdict.any_member_gradient_strategic,
        "per_sensor_gradient_strategic": list(verdict.per_sensor_gradient_strategic),
        "marginal": verdict.marginal,
        "groups": _group_rows(verdict),
        "witness": _witnesses(verdict),
    }
    if sc.domain.dim == 1:
        _attach_1d_closed_form(sc, verdict, results)
    else:
        _attach_2d_closed_form(sc, verdict, results)
    return results


def _witnesses(verdict) -> dict:
    out: dict = {}
    if verdict.first_failing_gradient is not None:
        out["gradient_mode"] = _mode_json(verdict.first_failing_gradient.modes[0])
    if verdict.first_failing_state is not None:
        out["state_mode"] = _mode_json(verdict.first_failing_state.modes[0])
    return out


def _attach_1d_closed_form(sc: Scenario, verdict, results: dict) -> None:
    length = sc.domain.lengths[0]
    sensor_blocks = []
    normalized: list = []
    all_pointwise = all(isinstance(s, PointwiseSensor) for s in sc.sensors)
    for k, sensor in enumerate(sc.sensors):
        if not isinstance(sensor, PointwiseSensor):
            sensor_blocks.append({"sensor": k + 1, "available": False,
                                  "reason": f"{sensor.kind} sensors have no 1D blind-set test"})
            continue
        b = _normalized_1d_location(sensor, length)
        normalized.append(b)
        fs = forbidden_sets_1d(b, sc.basis.truncation, sc.blind_tol)
        block = {
            "sensor": k + 1,
            "available": True,
            "exact": fs.exact,
            "in_state_blind_set": fs.in_state_set,
            "in_gradient_blind_set": fs.in_gradient_set,
        }
        if fs.state_witness is not None:
            block["state_witness"] = {"n": fs.state_witness[0], "k": fs.state_witness[1]}
        if fs.gradient_witness is not None:
            block["gradient_witness"] = {"n": fs.gradient_witness[0],
                                         "k": fs.gradient_witness[1]}
        if fs.min_sine is not None:
            block["min_sine"] = fs.min_sine
            block["min_cosine"] = fs.min_cosine
        sensor_blocks.append(block)
    results["blind_sets"] = sensor_blocks

    exact_locs = [b for b in normalized if isinstance(b, Fraction)]
    if all_pointwise and len(exact_locs) == len(sc.sensors):
        joint = exact_pointwise_verdict_1d(exact_locs)
        results["engine"] = "exact"
        results["state_strategic"] = joint.state_strategic
        results["gradient_strategic"] = joint.gradient_strategic
        results["exact_joint"] = {
            "state_strategic": joint.state_strategic,
            "gradient_strategic": joint.gradient_strategic,
            "state_witness": joint.state_witness,
            "gradient_witness": joint.gradient_witness,
            "period": joint.period,
        }
        if joint.state_witness is not None and joint.state_witness <= sc.basis.truncation:
            results["witness"].setdefault("state_mode", joint.state_witness)
        if joint.gradient_witness is not None:
            results["witness"].setdefault("gradient_mode", joint.gradient_witness)
        results["engines_agree"] = {
            "state": joint.state_strategic == verdict.state_strategic,
            "gradient": joint.gradient_strategic == verdict.gradient_strategic,
        }
    elif all_pointwise and normalized:
        # numeric locations: the rank verdict stays authoritative, the
        # per-sensor blind-set blocks above carry the closed-form data
        results["engines_agree"] = _numeric_agreement(sc, verdict, normalized)


def _numeric_agreement(sc: Scenario, verdict, normalized: list) -> dict:
    # single-sensor shortcut: blind-set membership must mirror the rank verdict
    if len(normalized) == 1:
        fs = forbidden_sets_1d(normalized[0], sc.basis.truncation, sc.blind_tol)
        return {
            "state": (not fs.in_state_set) == verdict.state_strategic,
            "gradient": (not fs.in_gradient_set) == verdict.gradient_strategic,
        }
    return {}


def _attach_2d_closed_form(sc: Scenario, verdict, results: dict) -> None:
    blocks = []
    for k, sensor in enumerate(sc.sensors):
        try:
            cf = closed_form_condition(sensor, sc.region, sc.basis.truncation,
                                       sc.blind_tol)
        except ValidationError as exc:
            blocks.append({"sensor": k + 1, "available": False, "reason": str(exc)})
            continue
        block = {
            "sensor": k + 1,
            "available": True,
            "all_pass": cf.all_pass,
            "reference_point": list(cf.reference_point),
            "exact": list(cf.exact),
        }
        if cf.first_failure is not None:
            block["first_failure"] = {
                "pair": list(cf.first_failure.pair),
                "axis_values": list(cf.first_failure.axis_values),
                "axis_integer": list(cf.first_failure.axis_integer),
            }
        blocks.append(block)
    results["closed_form"] = blocks
    available = [b for b in blocks if b["available"]]
    if available:
        aggregate = any(b["all_pass"] for b in available)
        # the printed conditions test sine-type zeros, which is the state
        # vanishing pattern; flag agreement against both verdicts
        results["engines_agree"] = {
            "closed_form_vs_state": aggregate == verdict.state_strategic,
            "closed_form_vs_gradient": aggregate == verdict.gradient_strategic,
        }


def _gramian_results(sc: Scenario) -> dict:
    result = assemble_gramian(sc.basis, list(sc.sensors), sc.region, sc.horizon,
                              sc.signature_mode, sc.quad, sc.grouping_rtol,
                              sc.margin_tol)
    constant = observability_constant(result)
    return {
        "signature_mode": result.signature_mode,
        "horizon": result.horizon,
        "margin": result.margin,
        "joint_margin": result.joint_margin,
        "positive_definite": result.positive_definite,
        "observability_constant": constant,
        "all_zero_signatures": result.all_zero_signatures,
        "trace_rank_deficient": result.rank_deficient,
        "group_margins": [{
            "eigenvalue": g.eigenvalue,
            "multiplicity": g.multiplicity,
            "margin": g.margin,
            "trace_rank": g.trace_rank,
            "rank_deficient": g.rank_deficient,
        } for g in result.group_margins],
    }


def _require_initial(sc: Scenario) -> np.ndarray:
    if sc.initial_coeffs is None:
        raise ValidationError(
            'this command needs "initial.coefficients" in the scenario')
    return sc.initial_coeffs


def _simulate_results(sc: Scenario, seed: int) -> dict:
    coeffs = _require_initial(sc)
    series = simulate_output(sc.basis, coeffs, list(sc.sensors), sc.times,
                             sc.horizon, sc.noise_std, seed, sc.quad)
    return {
        "noise_stddev": sc.noise_std,
        "noise_seed": seed,
        "times": series.times,
        "series": [series.values[i] for i in range(series.n_sensors)],
    }


def _reconstruct_results(sc: Scenario, seed: int) -> dict:
    coeffs = _require_initial(sc)
    series = simulate_output(sc.basis, coeffs, list(sc.sensors), sc.times,
                             sc.horizon, sc.noise_std, seed, sc.quad)
    estimate = estimate_coefficients(series, sc.basis, list(sc.sensors),
                                     sc.signature_mode, sc.regularization,
                                     sc.reg_value, sc.identifiability_tol, sc.quad)
    errors = reconstruction_error(coeffs, estimate.coefficients, sc.basis,
                                  sc.region, sc.quad)
    field = gradient_field_on_region(sc.basis, estimate.coefficients, sc.region,
                                     grid=9, quad=sc.quad)
    identifiable = [m not in estimate.unidentifiable_modes for m in sc.basis.modes]
    denom = float(np.linalg.norm(coeffs))
    rel = float(np.linalg.norm(estimate.coefficients - coeffs)) / denom if denom else 0.0
    return {
        "signature_mode": estimate.signature_mode,
        "regularization": estimate.regularization,
        "regularization_value": estimate.reg_value,
        "noise_stddev": sc.noise_std,
        "noise_seed": seed,
        "modes": [_mode_json(m) for m in sc.basis.modes],
        "true_coefficients": coeffs,
        "estimated_coefficients": estimate.coefficients,
        "identifiable": identifiable,
        "unidentifiable_modes": [_mode_json(m) for m in estimate.unidentifiable_modes],
        "residual_norm": estimate.residual_norm,
        "condition_number": estimate.condition_number,
        "relative_coefficient_error": rel,
        "err_region": errors.err_region,
        "err_domain": errors.err_domain,
        "gradient_field": {
            "points": field.points,
            "values": field.values,
        },
    }


def parse_scan_grid(spec: str, domain) -> list[tuple]:
    """Parse a candidate-location grid.

    1D: "a:b:n" (n points from a to b inclusive) or "v1,v2,...".
    2D: "NxM" (interior lattice of the domain), "a:b:n,a:b:n" (per-axis
    ranges, tensor product), or "x,y; x,y; ..." explicit points.
    """
    spec = spec.strip()
    if not spec:
        raise ValidationError("empty scan grid")
    if domain.dim == 1:
        if ":" in spec:
            a, b, n = _parse_range(spec)
            return [(v,) for v in np.linspace(a, b, n)]
        return [(parse_number(chunk),) for chunk in spec.split(",") if chunk.strip()]
    if ";" in spec:
        points = []
        for chunk in spec.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            coords = [parse_number(c) for c in chunk.split(",")]
            if len(coords) != 2:
                raise ValidationError(f"scan grid point {chunk!r} needs 2 coordinates")
            points.append(tuple(coords))
        return points
    if "x" in spec and ":" not in spec:
        try:
            n1, n2 = (int(v) for v in spec.split("x"))
        except ValueError:
            raise ValidationError(f"bad lattice spec {spec!r}; expected like 8x8") from None
        if n1 < 1 or n2 < 1:
            raise ValidationError(f"lattice spec {spec!r} needs positive counts")
        xs = [domain.lengths[0] * i / (n1 + 1) for i in range(1, n1 + 1)]
        ys = [domain.lengths[1] * j / (n2 + 1) for j in range(1, n2 + 1)]
        return [(x, y) for x in xs for y in ys]
    parts = spec.split(",")
    if len(parts) != 2:
        raise ValidationError(f"bad 2D scan grid {spec!r}")
    a1, b1, n1 = _parse_range(parts[0])
    a2, b2, n2 = _parse_range(parts[1])
    return [(x, y) for x in np.linspace(a1, b1, n1) for y in np.linspace(a2, b2, n2)]


def _parse_range(spec: str) -> tuple[float, float, int]:
    parts = spec.strip().split(":")
    if len(parts) != 3:
        raise ValidationError(f"bad range spec {spec!r}; expected a:b:n")
    a, b = float(parse_number(parts[0])), float(parse_number(parts[1]))
    n = int(parts[2])
    if n < 1:
        raise ValidationError(f"range spec {spec!r} needs at least one point")
    return a, b, n


@lru_cache(maxsize=32)
def _blind_members_1d(truncation: int) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    state = {Fraction(k, n) for n in range(2, truncation + 1) for k in range(1, n)}
    gradient = {Fraction(2 * k + 1, 2 * n) for n in range(1, truncation + 1)
                for k in range(0, n)}
    return tuple(sorted(state)), tuple(sorted(gradient))


def _nearest_member(members: tuple[Fraction, ...], value: float) -> tuple[Fraction, float]:
    floats = np.array([float(m) for m in members])
    k = int(np.argmin(np.abs(floats - value)))
    return members[k], abs(floats[k] - value)


def location_scan(sc: Scenario, grid_spec: str | None = None) -> list[dict]:
    """Sweep candidate pointwise locations; one independent row per candidate.

    Each row carries the location, both strategic verdicts at the
    scenario's truncation, the Gramian margin, and in 1D the nearest blind
    set member when it lies within the grid resolution.  Rows depend only
    on their own candidate, so any sub-grid reproduces the matching rows.
    """
    spec = grid_spec if grid_spec is not None else sc.scan_grid
    if spec is None:
        raise ValidationError('scan needs a grid: pass --grid or set "scan.grid"')
    candidates = parse_scan_grid(spec, sc.domain)
    if not candidates:
        raise ValidationError("empty scan grid")
    for point in candidates:
        if not sc.domain.contains([float(c) for c in point], strict=True):
            raise ValidationError(f"scan grid point {point!r} is outside the domain")

    resolution = _grid_resolution(candidates)
    trace_gram = gradient_gram(sc.basis, sc.region, sc.quad)
    state_members, gradient_members = (_blind_members_1d(sc.basis.truncation)
                                       if sc.domain.dim == 1 else (None, None))
    rows = []
    for point in candidates:
        sensor = PointwiseSensor(location=tuple(point))
        verdict = rank_test(sc.basis, [sensor], sc.rank_rtol, sc.grouping_rtol, sc.quad)
        gram = assemble_gramian(sc.basis, [sensor], sc.region, sc.horizon,
                                sc.signature_mode, sc.quad, sc.grouping_rtol,
                                sc.margin_tol, trace_gram=trace_gram)
        row = {
            "b1": float(point[0]),
            "b2": float(point[1]) if sc.domain.dim == 2 else None,
            "state_strategic": verdict.state_strategic,
            "gradient_strategic": verdict.gradient_strategic,
            "margin": gram.margin,
        }
        if sc.domain.dim == 1:
            b = float(point[0]) / sc.domain.lengths[0]
            member, dist = _nearest_member(state_members, b)
            if dist <= resolution:
                row["nearest_state_blind"] = {"location": member, "distance": dist}
            member, dist = _nearest_member(gradient_members, b)
            if dist <= resolution:
                row["nearest_gradient_blind"] = {"location": member, "distance": dist}
        rows.append(row)
    return rows


def _scan_results(sc: Scenario, grid_spec: str | None) -> dict:
    spec = grid_spec if grid_spec is not None else sc.scan_grid
    if spec is None:
        raise ValidationError('scan needs a grid: pass --grid or set "scan.grid"')
    rows = location_scan(sc, spec)
    resolution = _grid_resolution(parse_scan_grid(spec, sc.domain))
    return {"grid": spec, "resolution": resolution,
            "signature_mode": sc.signature_mode, "horizon": sc.horizon, "rows": rows}


def _grid_resolution(candidates: list[tuple]) -> float:
    values = sorted({float(c[0]) for c in candidates})
    if len(values) < 2:
        return float("inf")
    diffs = np.diff(values)
    positive = diffs[diffs > 0]
    return float(positive.min()) if positive.size else float("inf")


def _split_results(sc: Scenario) -> dict:
    split = basis_split(sc.basis, list(sc.sensors), "gradient", sc.blind_tol, sc.quad)
    independence = residual_independence_check(split.kernel_modes, sc.basis,
                                               sc.region, sc.quad)
    return {
        "signature_kind": split.signature_kind,
        "modes": [_mode_json(m) for m in sc.basis.modes],
        "in_kernel": [m in split.kernel_modes for m in sc.basis.modes],
        "mode_strengths": list(split.mode_strengths),
        "kernel_modes": [_mode_json(m) for m in split.kernel_modes],
        "active_modes": [_mode_json(m) for m in split.active_modes],
        "scale": split.scale,
        "independent_outside_region": independence.independent,
        "vacuous": independence.vacuous,
        "smallest_eigenvalue": independence.smallest_eigenvalue,
        "orthogonal_on_region": independence.orthogonal_on_region,
        "max_offdiagonal": independence.max_offdiagonal,
    }
