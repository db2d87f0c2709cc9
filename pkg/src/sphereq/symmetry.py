"""Reflectional-symmetry auditing of fields on the sphere.

The pipeline detects meridians along which the longitudinal derivative
vanishes at every colatitude (axial extrema), classifies whether all maxima
(resp. minima) share one colatitude profile (leveled), and then checks the
structure a nonconstant equilibrium with leveled axial extrema must have:
extrema evenly spaced, the field mirror-symmetric about each extremal
meridian, and the swept-sector difference field u - u o R_eps one-signed up
to the next extremum.  The linearized-annihilation check confirms that the
difference of a solution and its reflection satisfies the averaged linear
equation a * Lap w + b * w = 0.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import worker_count
from .errors import ContractError, DegenerateFieldError, ParameterError
from .grid import (
    TWO_PI,
    d_phi,
    eval_on_grid,
    interp_phi,
    oversample_phi,
    quadrature_mean,
    reflect_phi,
    rotate_phi,
    sector_mask,
)
from .problems import hadamard_coeffs, residual
from .harmonics import apply_laplacian

_REFINE_FACTOR = 16


@dataclass(frozen=True)
class AuditThresholds:
    """Normalized tolerances for the audit pipeline.

    The underlying statements are exact; discretization forces explicit
    thresholds, all scaled by the field span (or the sup of u_phi) so they
    are resolution- and amplitude-aware.  ``midpoint_tol`` defaults to one
    coarse longitude cell of the audited grid.
    """

    tol_ax: float = 1e-6
    tol_lvl: float = 1e-5
    tol_w: float = 1e-7
    midpoint_tol: float = None
    n_eps: int = 100
    n_tau: int = 8

    def __post_init__(self):
        for name in ("tol_ax", "tol_lvl", "tol_w"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ParameterError("%s must lie in (0, 1)" % name)
        if self.midpoint_tol is not None and self.midpoint_tol <= 0:
            raise ParameterError("midpoint_tol must be positive")
        if self.n_eps < 2:
            raise ParameterError("n_eps must be at least 2")


@dataclass(frozen=True)
class AxialExtremumSet:
    """Detected extremal meridians of a field.

    ``angles`` are sorted longitudes in [0, 2*pi); ``kinds`` label each as
    "max" or "min"; ``axiality_defects`` give max over colatitude of
    |u_phi| at the axis, normalized by sup|u_phi|.  ``axis_profiles[i]``
    samples u along axis i at the grid colatitudes.  Candidates that were
    critical on some rings but not all are reported separately in
    ``non_axial_critical`` and never count as extrema.
    """

    angles: np.ndarray
    kinds: tuple
    axiality_defects: np.ndarray
    merged: np.ndarray
    axis_profiles: np.ndarray
    non_axial_critical: np.ndarray
    all_longitudes_critical: bool
    u_phi_sup: float
    field_span: float

    @property
    def n(self):
        return len(self.angles)

    @property
    def maxima_indices(self):
        return [i for i, k in enumerate(self.kinds) if k == "max"]

    @property
    def minima_indices(self):
        return [i for i, k in enumerate(self.kinds) if k == "min"]

    @property
    def kinds_alternate(self):
        if self.n < 2:
            return False
        return all(
            self.kinds[i] != self.kinds[(i + 1) % self.n] for i in range(self.n)
        )

    def _group_profiles(self, indices):
        if not indices:
            return None
        return self.axis_profiles[indices]

    @property
    def level_M(self):
        """Mean colatitude profile over the axial maxima (None if none)."""
        profs = self._group_profiles(self.maxima_indices)
        return None if profs is None else profs.mean(axis=0)

    @property
    def level_m(self):
        profs = self._group_profiles(self.minima_indices)
        return None if profs is None else profs.mean(axis=0)

    @property
    def level_defect(self):
        """Largest pointwise deviation of any axis profile from its group
        mean, normalized by the field span."""
        worst = 0.0
        for idx in (self.maxima_indices, self.minima_indices):
            profs = self._group_profiles(idx)
            if profs is None or len(profs) < 2:
                continue
            worst = max(worst, float(np.max(np.abs(profs - profs.mean(axis=0)))))
        return worst / self.field_span if self.field_span > 0 else 0.0


def _circular_gap(a, b):
    """Arc length from a to b going counterclockwise, in (0, 2*pi]."""
    d = (b - a) % TWO_PI
    return d if d > 0 else TWO_PI


def _local_minima(values):
    left = np.roll(values, 1)
    right = np.roll(values, -1)
    return np.nonzero((values < left) & (values <= right))[0]


def detect_axial_extrema(u, tol_ax=1e-6):
    """Find meridians where u_phi vanishes at every colatitude.

    The scan evaluates g(phi) = max over rings of |u_phi| on a 16x refined
    longitude grid (trigonometric interpolation); local minima of g are
    refined by bisection on the sign change of the alignment-weighted ring
    average of u_phi, then kept as axial extrema when the normalized
    defect max_theta |u_phi| / sup|u_phi| falls below ``tol_ax``.  Kinds
    come from the sign of the ring-integrated second longitudinal
    derivative.  Candidates closer than one coarse cell are merged (and
    flagged); a longitude where only some rings are critical is reported
    as non-axial instead of as an extremum.
    """
    grid = u.grid
    mean = quadrature_mean(u)
    if np.max(np.abs(u.values - mean)) <= 1e-12 * max(u.sup_norm, 1e-300):
        raise DegenerateFieldError("field is constant; axial extrema undefined")
    span = u.span

    du = d_phi(u)
    d2u = d_phi(du)
    fine = oversample_phi(du, _REFINE_FACTOR)
    n_fine = fine.shape[1]
    phis_fine = TWO_PI * np.arange(n_fine) / n_fine
    abs_fine = np.abs(fine)
    g = abs_fine.max(axis=0)
    u_phi_sup = float(g.max())

    if u_phi_sup <= 1e-12 * span:
        return AxialExtremumSet(
            angles=np.empty(0),
            kinds=(),
            axiality_defects=np.empty(0),
            merged=np.zeros(0, dtype=bool),
            axis_profiles=np.empty((0, grid.n_theta)),
            non_axial_critical=np.empty(0),
            all_longitudes_critical=True,
            u_phi_sup=u_phi_sup,
            field_span=span,
        )

    w = grid.theta_weights
    ring_sup = abs_fine.max(axis=1)
    significant = ring_sup >= 1e-3 * u_phi_sup

    def aligned_average(phi, reference):
        vals = interp_phi(du, phi)[:, 0]
        return float(np.dot(w, vals * reference))

    candidates = []
    non_axial = []
    h_fine = TWO_PI / n_fine
    for r in _local_minima(g):
        left = phis_fine[r] - h_fine
        right = phis_fine[r] + h_fine
        ref = interp_phi(du, left)[:, 0]
        norm = float(np.max(np.abs(ref)))
        if norm > 0:
            ref = ref / norm
        ca = aligned_average(left, ref)
        cb = aligned_average(right, ref)
        if ca * cb < 0.0:
            a, b = left, right
            fa = ca
            for _ in range(60):
                mid = 0.5 * (a + b)
                fm = aligned_average(mid, ref)
                if fm == 0.0:
                    a = b = mid
                    break
                if fa * fm < 0.0:
                    b = mid
                else:
                    a, fa = mid, fm
            phi_star = 0.5 * (a + b)
        else:
            # parabolic vertex through the three refined samples of g
            gm, g0, gp = g[r - 1], g[r], g[(r + 1) % n_fine]
            denom = gm - 2.0 * g0 + gp
            shift = 0.5 * (gm - gp) / denom if denom != 0 else 0.0
            phi_star = phis_fine[r] + shift * h_fine
        phi_star %= TWO_PI
        du_star = interp_phi(du, phi_star)[:, 0]
        defect = float(np.max(np.abs(du_star))) / u_phi_sup
        if defect <= tol_ax:
            candidates.append((phi_star, defect))
        else:
            du_l = interp_phi(du, left)[:, 0]
            du_r = interp_phi(du, right)[:, 0]
            crossing = (du_l * du_r < 0.0) & significant
            if np.any(crossing):
                non_axial.append(phi_star)

    if not candidates:
        return AxialExtremumSet(
            angles=np.empty(0),
            kinds=(),
            axiality_defects=np.empty(0),
            merged=np.zeros(0, dtype=bool),
            axis_profiles=np.empty((0, grid.n_theta)),
            non_axial_critical=np.array(sorted(non_axial)),
            all_longitudes_critical=False,
            u_phi_sup=u_phi_sup,
            field_span=span,
        )

    # merge candidates closer than one coarse cell (circularly)
    candidates.sort()
    cell = grid.phi_cell
    groups = [[candidates[0]]]
    for cand in candidates[1:]:
        if cand[0] - groups[-1][-1][0] < cell:
            groups[-1].append(cand)
        else:
            groups.append([cand])
    if len(groups) > 1 and (TWO_PI - groups[-1][-1][0] + groups[0][0][0]) < cell:
        groups[0] = [(a - TWO_PI, d) for a, d in groups[-1]] + groups[0]
        groups.pop()

    angles, defects, merged = [], [], []
    for grp in groups:
        ang = float(np.mean([a for a, _ in grp])) % TWO_PI
        if ang >= TWO_PI - 1e-9:  # wrap values within roundoff of 2*pi to 0
            ang -= TWO_PI
        angles.append(max(ang, 0.0) if abs(ang) < 1e-12 else ang)
        defects.append(max(d for _, d in grp))
        merged.append(len(grp) > 1)
    order = np.argsort(angles)
    angles = np.array(angles)[order]
    defects = np.array(defects)[order]
    merged = np.array(merged, dtype=bool)[order]

    curvature = interp_phi(d2u, angles)
    kinds = tuple(
        "max" if float(np.dot(w, curvature[:, i])) < 0.0 else "min"
        for i in range(len(angles))
    )
    profiles = interp_phi(u, angles).T

    return AxialExtremumSet(
        angles=angles,
        kinds=kinds,
        axiality_defects=defects,
        merged=merged,
        axis_profiles=profiles,
        non_axial_critical=np.array(sorted(non_axial)),
        all_longitudes_critical=False,
        u_phi_sup=u_phi_sup,
        field_span=span,
    )


@dataclass(frozen=True)
class LeveledCheck:
    defect: float
    passed: bool
    applicable: bool


def check_leveled(ext, u, tol_lvl=1e-5):
    """Do all axial maxima share one colatitude profile (and likewise the
    minima)?  The defect is the largest pointwise deviation from the group
    mean profile, normalized by the field span.  Needs at least two
    extrema; otherwise the check is reported as not applicable."""
    if ext.n < 2:
        return LeveledCheck(defect=float("nan"), passed=False, applicable=False)
    profiles = interp_phi(u, ext.angles).T
    span = u.span
    worst = 0.0
    for indices in (ext.maxima_indices, ext.minima_indices):
        if len(indices) < 2:
            continue
        group = profiles[indices]
        worst = max(worst, float(np.max(np.abs(group - group.mean(axis=0)))))
    defect = worst / span if span > 0 else 0.0
    return LeveledCheck(defect=defect, passed=defect <= tol_lvl, applicable=True)


def check_reflection(u, phi_i, interval):
    """Normalized sup of |u - u o R_{phi_i}| over grid longitudes strictly
    inside ``interval`` (a (lo, hi) pair with hi - lo in [0, 2*pi])."""
    mirrored = reflect_phi(u, phi_i)
    mask = sector_mask(u.grid, interval[0], interval[1])
    cols = mask.indices
    if cols.size == 0:
        return 0.0
    diff = np.abs(u.values[:, cols] - mirrored.values[:, cols])
    span = u.span
    return float(diff.max()) / span if span > 0 else float(diff.max())


@dataclass(frozen=True)
class MidpointCheck:
    defects: np.ndarray
    max_defect: float
    applicable: bool


def check_midpoint(ext):
    """Even-spacing check: each extremum should reflect its predecessor onto
    its successor.

    The per-extremum defect is the circular distance between the reflected
    neighbor R_{phi_i}(phi_{i-1}) and phi_{i+1}, i.e. |gap_after -
    gap_before|; it vanishes exactly when phi_i is the circular midpoint of
    its neighbors.  Needs at least three extrema."""
    if ext.n < 3:
        return MidpointCheck(
            defects=np.empty(0), max_defect=float("nan"), applicable=False
        )
    angles = ext.angles
    n = ext.n
    defects = np.empty(n)
    for i in range(n):
        before = _circular_gap(angles[(i - 1) % n], angles[i])
        after = _circular_gap(angles[i], angles[(i + 1) % n])
        defects[i] = abs(after - before)
    return MidpointCheck(defects=defects, max_defect=float(defects.max()), applicable=True)


@dataclass(frozen=True)
class MovingArcReport:
    """Result of sweeping a reflection arc from a seed minimum toward the
    neighboring maximum.

    ``w_max[t]`` is the (signed) maximum of u - u o R_eps over grid points
    strictly inside the swept sector at eps = epsilons[t]; a sector that
    contains no grid longitude yet reports 0.  ``eps_star`` is the largest
    sweep value up to which every w_max stayed below tol_w * span, and
    ``phi_star`` the a-priori bound min(gap to either neighbor of the
    target maximum).  ``target_reflection_sup`` is sup|w| at the full gap,
    normalized; its smallness is the equality half of the argument.
    """

    start_angle: float
    direction: int
    target_angle: float
    epsilons: np.ndarray
    w_max: np.ndarray
    eps_star: float
    phi_star: float
    tol_w: float
    span: float
    reaches_target: bool
    target_reflection_sup: float
    equality_ok: bool


def moving_arc_sweep(u, ext, seed_index, direction, n_eps=100, tol_w=1e-7):
    """Sweep the reflection arc from the axial minimum ``seed_index`` in
    ``direction`` (+1 counterclockwise, -1 clockwise) up to the adjacent
    maximum, recording the signed maximum of w = u - u o R_eps on the open
    sector between the seed meridian and the arc.

    Coordinates are shifted so the seed sits at longitude 0 with the sweep
    running counterclockwise; reflections are evaluated by trigonometric
    interpolation, so arbitrary off-grid eps are exact for band-limited
    fields.  The seed must be a minimum and its neighbor in the sweep
    direction a maximum."""
    if ext.n < 2:
        raise ContractError("need at least two extrema to sweep")
    if direction not in (1, -1):
        raise ParameterError("direction must be +1 or -1")
    if ext.kinds[seed_index] != "min":
        raise ContractError("moving-arc seed must be an axial minimum")
    n = ext.n
    target_index = (seed_index + direction) % n
    if ext.kinds[target_index] != "max":
        raise ContractError("extremum adjacent to the seed is not a maximum")
    seed = float(ext.angles[seed_index])
    target = float(ext.angles[target_index])
    if direction == 1:
        gap = _circular_gap(seed, target)
        beyond = _circular_gap(target, ext.angles[(target_index + 1) % n])
    else:
        gap = _circular_gap(target, seed)
        beyond = _circular_gap(ext.angles[(target_index - 1) % n], target)
    phi_star = min(gap, beyond)

    shifted = rotate_phi(u, seed)
    if direction == -1:
        shifted = reflect_phi(shifted, 0.0)

    span = u.span
    eps = gap * np.arange(1, n_eps + 1) / n_eps
    phi_cols = u.grid.phi_nodes

    def w_max_at(e):
        w = shifted.values - reflect_phi(shifted, e).values
        cols = (phi_cols > 0.0) & (phi_cols < e)
        if not np.any(cols):
            return 0.0
        return float(w[:, cols].max())

    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            w_max = np.array(list(pool.map(w_max_at, eps)))
    else:
        w_max = np.array([w_max_at(e) for e in eps])

    bound = tol_w * span
    bad = np.nonzero(w_max > bound)[0]
    if bad.size == 0:
        eps_star = float(eps[-1])
    elif bad[0] == 0:
        eps_star = 0.0
    else:
        eps_star = float(eps[bad[0] - 1])

    w_target = shifted.values - reflect_phi(shifted, gap).values
    cols = (phi_cols > 0.0) & (phi_cols < gap)
    target_sup = float(np.abs(w_target[:, cols]).max()) / span if np.any(cols) else 0.0

    return MovingArcReport(
        start_angle=seed,
        direction=direction,
        target_angle=target,
        epsilons=eps,
        w_max=w_max,
        eps_star=eps_star,
        phi_star=phi_star,
        tol_w=tol_w,
        span=span,
        reaches_target=eps_star >= gap * (1.0 - 1.0 / n_eps) - 1e-12,
        target_reflection_sup=target_sup,
        equality_ok=target_sup <= tol_w,
    )


def linearized_annihilation(problem, op, u, eps, n_tau=8):
    """Residual of the averaged linear equation on the reflection difference.

    Builds w = u - u o R_eps and the homotopy-averaged coefficients (a, b);
    returns sup|a * Lap w + b * w| normalized by
    ||a|| * ||Lap w|| + ||b|| * ||w|| (sup norms).  Near zero for an
    equilibrium, because the reflected field is then also an equilibrium
    and the averaged equation reproduces the difference of the two
    residuals exactly."""
    u_ref = reflect_phi(u, eps)
    w = u - u_ref
    if w.sup_norm <= 1e-13 * max(1.0, u.sup_norm):
        return 0.0  # reflection is a symmetry to machine precision
    coeffs = hadamard_coeffs(problem, op, u, u_ref, n_tau=n_tau)
    lap_w = apply_laplacian(op, w)
    resid = coeffs.a.values * lap_w.values + coeffs.b.values * w.values
    scale = (
        coeffs.a.sup_norm * lap_w.sup_norm + coeffs.b.sup_norm * w.sup_norm
    )
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(resid))) / scale


VERDICT_PASS = "pass"
VERDICT_HYPOTHESES = "hypotheses-not-met"
VERDICT_FAIL = "not-theorem-compatible"


@dataclass(frozen=True)
class SymmetryReport:
    """Full audit outcome for one field.

    ``verdict`` is "pass" when both the hypotheses (axial, alternating,
    leveled extrema) and the conclusions (even spacing, mirror symmetry,
    one-signed arc sweeps) hold within thresholds;
    "hypotheses-not-met" when the field is outside the audited class (the
    conclusion checks are still reported for information); and
    "not-theorem-compatible" when the hypotheses hold but a conclusion
    fails, which certifies the field cannot be an equilibrium of any
    uniformly elliptic problem of the audited form."""

    extrema: AxialExtremumSet
    leveled: LeveledCheck
    reflection_defects: np.ndarray
    midpoint: MidpointCheck
    arc_reports: tuple
    annihilation_residuals: np.ndarray
    equilibrium_residual: float
    thresholds: AuditThresholds
    midpoint_tol: float
    hypotheses_met: bool
    conclusions_ok: bool
    verdict: str


def theorem_audit(problem, op, u, thresholds=None):
    """Run the full symmetry audit pipeline on a field.

    detect_axial_extrema -> check_leveled -> per-extremum reflection over
    the preceding gap -> check_midpoint -> moving-arc sweeps from every
    minimum in both orientations, plus the linearized-annihilation residual
    at every extremal meridian and the equation residual of u itself (both
    informational).  Requires a nonconstant field."""
    if thresholds is None:
        thresholds = AuditThresholds()
    midpoint_tol = (
        thresholds.midpoint_tol
        if thresholds.midpoint_tol is not None
        else u.grid.phi_cell
    )
    ext = detect_axial_extrema(u, tol_ax=thresholds.tol_ax)
    eq_residual = residual(problem, op, u).sup_norm

    if ext.all_longitudes_critical or ext.n == 0:
        return SymmetryReport(
            extrema=ext,
            leveled=LeveledCheck(float("nan"), False, False),
            reflection_defects=np.empty(0),
            midpoint=MidpointCheck(np.empty(0), float("nan"), False),
            arc_reports=(),
            annihilation_residuals=np.empty(0),
            equilibrium_residual=eq_residual,
            thresholds=thresholds,
            midpoint_tol=midpoint_tol,
            hypotheses_met=False,
            conclusions_ok=False,
            verdict=VERDICT_HYPOTHESES,
        )

    leveled = check_leveled(ext, u, tol_lvl=thresholds.tol_lvl)

    n = ext.n
    reflection_defects = np.empty(n)
    for i in range(n):
        hi = ext.angles[i]
        lo = hi - _circular_gap(ext.angles[(i - 1) % n], hi)
        reflection_defects[i] = check_reflection(u, hi, (lo, hi))

    midpoint = check_midpoint(ext)

    arc_reports = []
    if ext.kinds_alternate:
        for i in ext.minima_indices:
            for direction in (1, -1):
                arc_reports.append(
                    moving_arc_sweep(
                        u,
                        ext,
                        i,
                        direction,
                        n_eps=thresholds.n_eps,
                        tol_w=thresholds.tol_w,
                    )
                )

    annihilation = np.array(
        [
            linearized_annihilation(problem, op, u, ang, n_tau=thresholds.n_tau)
            for ang in ext.angles
        ]
    )

    hypotheses_met = (
        n >= 2
        and ext.kinds_alternate
        and ext.non_axial_critical.size == 0
        and leveled.applicable
        and leveled.passed
    )
    conclusion_parts = [bool(np.all(reflection_defects <= thresholds.tol_w))]
    if midpoint.applicable:
        conclusion_parts.append(midpoint.max_defect <= midpoint_tol)
    if arc_reports:
        conclusion_parts.append(
            all(r.reaches_target and r.equality_ok for r in arc_reports)
        )
    conclusions_ok = all(conclusion_parts)

    if not hypotheses_met:
        verdict = VERDICT_HYPOTHESES
    elif conclusions_ok:
        verdict = VERDICT_PASS
    else:
        verdict = VERDICT_FAIL

    return SymmetryReport(
        extrema=ext,
        leveled=leveled,
        reflection_defects=reflection_defects,
        midpoint=midpoint,
        arc_reports=tuple(arc_reports),
        annihilation_residuals=annihilation,
        equilibrium_residual=eq_residual,
        thresholds=thresholds,
        midpoint_tol=midpoint_tol,
        hypotheses_met=hypotheses_met,
        conclusions_ok=conclusions_ok,
        verdict=verdict,
    )


# ---------------------------------------------------------------------------
# synthetic biradial demo field
# ---------------------------------------------------------------------------

# Extremal longitudes (units of pi/16) of the uneven-but-leveled pattern:
# a slow full sine period on each quadrant pair alternating with two
# compressed periods, repeating with period pi.
_BIRADIAL_TARGETS = np.array([2.0, 6.0, 9.0, 11.0, 13.0, 15.0]) * math.pi / 16.0


def _biradial_phase_coefficients():
    """Trigonometric phase modulation p with sin(6 phi + p(phi)) hitting
    +-1 exactly at the target longitudes; minimum-norm interpolation."""
    targets = _BIRADIAL_TARGETS
    values = math.pi / 2.0 + np.arange(6) * math.pi - 6.0 * targets
    basis = _biradial_basis(targets)
    coef, *_ = np.linalg.lstsq(basis, values, rcond=None)
    return coef


def _biradial_basis(phi):
    phi = np.atleast_1d(phi)
    return np.stack(
        [
            np.ones_like(phi),
            np.cos(2 * phi),
            np.sin(2 * phi),
            np.cos(4 * phi),
            np.sin(4 * phi),
            np.cos(6 * phi),
            np.sin(6 * phi),
        ],
        axis=-1,
    )


def biradial_angles():
    """The twelve extremal longitudes of the biradial demo field (sorted)."""
    return np.sort(np.concatenate([_BIRADIAL_TARGETS, _BIRADIAL_TARGETS + math.pi]))


def biradial_field(grid):
    """Synthetic negative-control field with biradial (C_2v) symmetry.

    u = sin(theta) * sin(g(phi)) with a smooth, strictly increasing phase
    g, so the twelve extrema are exactly leveled (+-sin(theta)) and exactly
    axial, but unevenly spaced: two slowly varying arcs alternate with four
    compressed ones per half-turn, repeating with period pi.  Such a field
    passes the axial and leveled hypotheses yet fails the even-spacing
    conclusion, so it cannot arise as an equilibrium.  The analytic phase
    keeps the field effectively band-limited, unlike a piecewise-sine
    construction whose derivative kinks would leave Gibbs noise in every
    spectral evaluation."""
    coef = _biradial_phase_coefficients()

    def h(phi):
        return np.sin(6.0 * phi + _biradial_basis(phi) @ coef)

    return eval_on_grid(grid, lambda t, p: np.sin(t) * h(p))
