"""Boundedness pipeline: iterated tail and interior surgeries per axis.

The pipeline keeps the working domain at unit measure by rescaling the
cell size after every accepted surgery, so raw and normalized eigenvalues
coincide throughout and every comparison is the scale-free one.  A step is
accepted only if the solver confirms that every normalized eigenvalue
strictly decreases (threshold 2 tol, relative); rejected scans leave the
domain bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridDomain, GridSpec, reflect, tau, width
from .spectral import Spectrum, SolverError, assemble, lowest_eigenpairs
from .surgery import (
    COND3,
    SectionProfile,
    SurgeryResult,
    TheoryConstants,
    build_interior_cut,
    build_tail_cut,
    formula_condition,
    graft_test_functions,
    transport_spectrum,
)

__all__ = [
    "PipelineConfig",
    "StepRecord",
    "PipelineReport",
    "bound_tail",
    "bound_interior",
    "bound_all",
    "compact_axis",
    "reflect_spectrum",
]

HARD_CAP = 64


@dataclass
class PipelineConfig:
    """Budgets, constants, and solver settings for the boundedness passes."""

    k: int
    constants: TheoryConstants
    tol: float = 1e-8
    seed: int = 0
    solver_maxiter: int = 500
    scan_fast_iters: int = 40
    max_case_iterations: int = 0   # 0: ceil(K / eta), capped at HARD_CAP
    axis_order: tuple[int, ...] | None = None
    max_candidates_per_pass: int = 256

    def iteration_cap(self) -> int:
        if self.max_case_iterations > 0:
            return min(self.max_case_iterations, HARD_CAP)
        return min(int(math.ceil(self.constants.K / self.constants.eta)), HARD_CAP)

    @classmethod
    def for_domain(cls, domain: GridDomain, k: int, budget: float | None = None,
                   nu: float = 0.1, c4: float = 10.0, c6: float = 10.0,
                   spectrum: Spectrum | None = None, **kwargs) -> "PipelineConfig":
        """Choose the eigenvalue budget from the domain when not given."""
        if budget is None:
            if spectrum is None:
                spectrum = lowest_eigenpairs(assemble(domain), k,
                                             tol=kwargs.get("tol", 1e-8),
                                             seed=kwargs.get("seed", 0))
            lam = spectrum.normalized()
            budget = max(25.0, 1.05 * float(lam[-1]))
        tc = TheoryConstants.for_budget(budget, domain.dimension, nu=nu, c4=c4, c6=c6)
        return cls(k, tc, **kwargs)


@dataclass
class StepRecord:
    step: int
    axis: int
    mode: str           # tail | interior | compact | reflect
    t: float
    cls: str
    accepted: bool
    lambdas: tuple      # normalized eigenvalues after the step
    bbox: tuple         # bounding-box lengths after the step


@dataclass
class PipelineReport:
    steps: list = field(default_factory=list)
    initial_normalized: np.ndarray | None = None
    final_normalized: np.ndarray | None = None
    initial_bbox: tuple | None = None
    final_bbox: tuple | None = None
    widths: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def record(self, axis, mode, t, cls, accepted, spectrum):
        bbox = tuple(float(v) for v in spectrum.domain.bounding_box_lengths())
        self.steps.append(StepRecord(len(self.steps), axis, mode, t, cls,
                                     accepted, tuple(spectrum.normalized()), bbox))

    @property
    def accepted_steps(self) -> list:
        return [s for s in self.steps if s.accepted and s.mode in ("tail", "interior")]


def _solve(domain: GridDomain, k: int, config: PipelineConfig,
           warm: np.ndarray | None = None) -> Spectrum:
    return lowest_eigenpairs(assemble(domain), k, tol=config.tol, seed=config.seed,
                             maxiter=config.solver_maxiter, warm_start=warm)


def _normalize_state(result: SurgeryResult, config: PipelineConfig) -> tuple[GridDomain, Spectrum]:
    """Trim the grafted domain, rescale to unit measure, re-certify strictly."""
    trimmed = result.grafted.trimmed()
    unit = trimmed.normalized()
    if result.grafted_spectrum is not None:
        carried = transport_spectrum(result.grafted_spectrum, unit)
        spectrum = lowest_eigenpairs(assemble(unit), carried.k, tol=config.tol,
                                     seed=config.seed, maxiter=config.solver_maxiter,
                                     warm_start=carried.eigenfunctions)
    else:
        spectrum = _solve(unit, config.k, config)
    return unit, spectrum


def _candidate_drop(result: SurgeryResult, sd, base: Spectrum,
                    config: PipelineConfig) -> float | None:
    """Fast-solve the grafted domain; min relative drop, or None if any rises.

    Uses the grafted test functions as the warm start (they realize the
    min-max bound, so a few block iterations suffice); the winning
    candidate is re-verified at full tolerance before acceptance.
    """
    warm = graft_test_functions(base, result, sd).functions
    try:
        spec_hat = lowest_eigenpairs(assemble(result.grafted), base.k,
                                     tol=config.tol, seed=config.seed,
                                     warm_start=warm,
                                     fast_iters=config.scan_fast_iters)
    except SolverError:
        return None
    lam_hat = spec_hat.normalized()
    lam_base = base.normalized()
    result.normalized_spectrum = lam_hat
    result.grafted_spectrum = spec_hat
    rel = 1.0 - lam_hat / lam_base
    if np.all(rel > 2.0 * config.tol):
        result.classification = COND3
        return float(rel.min())
    return None


def _strict_recheck(result: SurgeryResult, base: Spectrum, config: PipelineConfig) -> bool:
    """Re-solve the winner at full tolerance before accepting it."""
    try:
        spec_hat = lowest_eigenpairs(
            assemble(result.grafted), base.k, tol=config.tol, seed=config.seed,
            maxiter=config.solver_maxiter,
            warm_start=result.grafted_spectrum.eigenfunctions)
    except SolverError:
        return False
    lam_hat = spec_hat.normalized()
    lam_base = base.normalized()
    result.normalized_spectrum = lam_hat
    result.grafted_spectrum = spec_hat
    return bool(np.all(1.0 - lam_hat / lam_base > 2.0 * config.tol))


def _best_cond3(candidates: list, base: Spectrum, config: PipelineConfig):
    """Max-min-drop winner among verified candidates; ties by mass then -t."""
    ranked = sorted(candidates, key=lambda c: (-c[0], -c[1].m, c[1].t))
    for drop, sd, result in ranked:
        if _strict_recheck(result, base, config):
            return drop, sd, result
    return None


def bound_tail(domain: GridDomain, axis: int, spectrum: Spectrum,
               config: PipelineConfig, report: PipelineReport) -> tuple[GridDomain, Spectrum]:
    """Iterated tail surgeries on the low-coordinate end of one axis.

    Scans every boundary-aligned level up to the 2 mhat quantile,
    classifies by formula, verifies the surviving candidates with the
    solver, and accepts the cut maximizing the minimum normalized
    eigenvalue drop.  Stops when no verified cut remains, the tail width
    stops improving, or the iteration cap is hit.
    """
    tc = config.constants
    prev_width = None
    for it in range(config.iteration_cap() + 1):
        if it == config.iteration_cap():
            report.warnings.append(
                f"tail pass axis {axis}: iteration cap {config.iteration_cap()} reached")
            break
        w_now = width(domain, axis, 0.0, tc.mhat * domain.measure)
        if prev_width is not None and w_now > prev_width - domain.cell_size / 2.0:
            break
        prev_width = w_now
        prof = SectionProfile(domain, spectrum, axis)
        lo, _ = domain.bounding_box()
        c_lo = int(lo[axis - 1])
        t_bar = tau(domain, axis, 2.0 * tc.mhat * domain.measure)
        c_bar = domain.spec.boundary_index(axis, t_bar)
        sections = [prof.tail(c) for c in range(c_lo, c_bar + 1)]
        open_sections = [sd for sd in sections if formula_condition(sd, tc) is None]
        if len(open_sections) > config.max_candidates_per_pass:
            open_sections = sorted(open_sections, key=lambda s: -s.m)
            open_sections = open_sections[:config.max_candidates_per_pass]
        candidates = []
        for sd in open_sections:
            try:
                result = build_tail_cut(domain, axis, sd.t, sd)
            except ValueError:
                continue
            drop = _candidate_drop(result, sd, spectrum, config)
            if drop is not None:
                candidates.append((drop, sd, result))
        best = _best_cond3(candidates, spectrum, config) if candidates else None
        if best is None:
            report.record(axis, "tail", float("nan"), "none", False, spectrum)
            break
        _, sd, result = best
        domain, spectrum = _normalize_state(result, config)
        report.record(axis, "tail", sd.t, COND3, True, spectrum)
    return domain, spectrum


def compact_axis(domain: GridDomain, axis: int) -> tuple[GridDomain, bool]:
    """Collapse every interior run of empty slabs along ``axis`` to one slab.

    No occupied cell changes neighbors, so the operator (hence the whole
    spectrum) is preserved exactly; only the bounding box shrinks.
    """
    a = axis - 1
    occ_a = np.moveaxis(domain.occupancy, a, 0)
    counts = occ_a.sum(axis=tuple(range(1, domain.dimension)))
    nz = np.flatnonzero(counts)
    if len(nz) == 0:
        return domain, False
    keep = []
    pending_gap = False
    for c in range(nz[0], nz[-1] + 1):
        if counts[c] > 0:
            if pending_gap:
                keep.append(-1)  # one separator slab per interior gap
                pending_gap = False
            keep.append(c)
        else:
            pending_gap = True
    if len(keep) == (nz[-1] - nz[0] + 1):
        return domain, False
    slabs = [np.zeros_like(occ_a[0]) if c < 0 else occ_a[c] for c in keep]
    new_a = np.stack(slabs, axis=0)
    occ = np.ascontiguousarray(np.moveaxis(new_a, 0, a))
    origin = list(domain.spec.origin)
    origin[a] += int(nz[0])
    new = GridDomain(GridSpec(domain.dimension, domain.cell_size, tuple(origin), occ.shape), occ)
    return new, True


def _carry_spectrum(spectrum: Spectrum, new_domain: GridDomain) -> Spectrum:
    """Spectrum carried over a relabeling that preserves cell C-order."""
    if new_domain.cell_count != spectrum.domain.cell_count:
        raise ValueError("compaction changed the cell count")
    return Spectrum(new_domain, spectrum.eigenvalues.copy(),
                    spectrum.eigenfunctions.copy(), spectrum.residuals.copy(),
                    spectrum.ortho_defect, spectrum.tol, spectrum.converged)


def bound_interior(domain: GridDomain, axis: int, mbar: float, spectrum: Spectrum,
                   config: PipelineConfig, report: PipelineReport) -> tuple[GridDomain, Spectrum]:
    """Iterated interior surgeries centered at the ``mbar`` quantile band.

    Translation-compaction runs first (exact spectrum preservation), then
    band candidates are scanned symmetrically around the band center.
    """
    tc = config.constants
    if not tc.mhat < mbar < 1.0 - tc.mhat / 2.0 + 1e-12:
        raise ValueError(f"mbar={mbar} outside (mhat, 1 - mhat/2)")
    compacted, changed = compact_axis(domain, axis)
    if changed:
        spectrum = _carry_spectrum(spectrum, compacted)
        domain = compacted
        report.record(axis, "compact", float("nan"), "exact", True, spectrum)
    for it in range(config.iteration_cap() + 1):
        if it == config.iteration_cap():
            report.warnings.append(
                f"interior pass axis {axis} mbar={mbar:.4f}: iteration cap reached")
            break
        total = domain.measure
        t_lo = tau(domain, axis, (mbar - tc.mhat) * total)
        t_hi = tau(domain, axis, (mbar + tc.mhat / 2.0) * total)
        i_lo = domain.spec.boundary_index(axis, t_lo)
        i_hi = domain.spec.boundary_index(axis, t_hi)
        span = i_hi - i_lo
        if span < 1:
            report.record(axis, "interior", float("nan"), "none", False, spectrum)
            break
        s_sum = i_lo + i_hi
        prof = SectionProfile(domain, spectrum, axis)
        sections = []
        for d in range(s_sum % 2, span + 1, 2):
            c_lo = (s_sum - d) // 2
            c_hi = (s_sum + d) // 2
            sections.append(prof.interior(c_lo, c_hi))
        open_sections = [sd for sd in sections if formula_condition(sd, tc) is None]
        if len(open_sections) > config.max_candidates_per_pass:
            open_sections = sorted(open_sections, key=lambda s: -s.m)
            open_sections = open_sections[:config.max_candidates_per_pass]
        candidates = []
        for sd in open_sections:
            try:
                result = build_interior_cut(domain, axis, sd.t0, sd.t, sd)
            except ValueError:
                continue  # cylinders do not fit in the band
            drop = _candidate_drop(result, sd, spectrum, config)
            if drop is not None:
                candidates.append((drop, sd, result))
        best = _best_cond3(candidates, spectrum, config) if candidates else None
        if best is None:
            report.record(axis, "interior", float("nan"), "none", False, spectrum)
            break
        _, sd, result = best
        domain, spectrum = _normalize_state(result, config)
        report.record(axis, "interior", sd.t, COND3, True, spectrum)
    return domain, spectrum


def reflect_spectrum(spectrum: Spectrum, axis: int) -> Spectrum:
    """Spectrum of the mirrored domain (eigenvectors re-indexed exactly)."""
    d = spectrum.domain
    a = axis - 1
    mirrored = reflect(d, axis)
    grid = np.zeros(d.occupancy.shape + (spectrum.k,))
    grid[d.occupancy] = spectrum.eigenfunctions
    flipped = np.flip(grid, axis=a)
    vecs = flipped[mirrored.occupancy]
    return Spectrum(mirrored, spectrum.eigenvalues.copy(), vecs,
                    spectrum.residuals.copy(), spectrum.ortho_defect,
                    spectrum.tol, spectrum.converged)


def _mbar_grid(mhat: float) -> list[float]:
    """2 mhat, 3 mhat, ... while admissible, then the final 1 - mhat."""
    out = []
    ell = 2
    while ell * mhat <= 1.0 - mhat / 2.0 + 1e-12:
        out.append(ell * mhat)
        ell += 1
    last = 1.0 - mhat
    if not out or last > out[-1] + 1e-9:
        out.append(last)
    return out


def bound_all(domain: GridDomain, spectrum: Spectrum | None,
              config: PipelineConfig) -> tuple[GridDomain, Spectrum, PipelineReport]:
    """Full boundedness pass: per axis, tail, interior sweep, mirrored tail.

    The input is renormalized to unit measure first; the output stays at
    unit measure.  The final orientation matches the input (reflections
    are undone), so a run with no accepted steps returns a bit-identical
    domain.
    """
    report = PipelineReport()
    work = domain.trimmed().normalized()
    if spectrum is None or spectrum.domain != work:
        spectrum = _solve(work, config.k, config)
    report.initial_normalized = spectrum.normalized()
    report.initial_bbox = tuple(float(v) for v in work.bounding_box_lengths())
    tc = config.constants
    axes = config.axis_order or tuple(range(1, work.dimension + 1))
    for axis in axes:
        work, spectrum = bound_tail(work, axis, spectrum, config, report)
        report.widths[(axis, "tail")] = width(work, axis, 0.0, tc.mhat * work.measure)
        for mbar in _mbar_grid(tc.mhat):
            work, spectrum = bound_interior(work, axis, mbar, spectrum, config, report)
        report.widths[(axis, "interior")] = width(
            work, axis, 0.0, (1.0 - tc.mhat) * work.measure)
        work = reflect(work, axis)
        spectrum = reflect_spectrum(spectrum, axis)
        report.record(axis, "reflect", float("nan"), "exact", True, spectrum)
        work, spectrum = bound_tail(work, axis, spectrum, config, report)
        work = reflect(work, axis)
        spectrum = reflect_spectrum(spectrum, axis)
        report.record(axis, "reflect", float("nan"), "exact", True, spectrum)
        report.widths[(axis, "final")] = float(work.bounding_box_lengths()[axis - 1])
    report.final_normalized = spectrum.normalized()
    report.final_bbox = tuple(float(v) for v in work.bounding_box_lengths())
    return work, spectrum, report
