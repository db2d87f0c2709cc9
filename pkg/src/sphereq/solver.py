"""Equilibrium computation: matrix-free Newton-Krylov iteration, a
semi-implicit gradient-flow relaxer used as globalizer and cross-check,
trivial-branch bifurcation detection, eigenmode branch switching, and
natural-parameter continuation.  Also hosts the independent one-dimensional
circle solver used as an oracle for the sphere code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import (
    ContractError,
    ConvergenceError,
    DivergenceError,
    LinearSolveError,
    ParameterError,
)
from .grid import ScalarField, TWO_PI
from .harmonics import apply_laplacian, harmonic_mode, max_degree, sht_forward, sht_inverse, SpectralCoeffs
from .problems import linearization_coefficients, residual


@dataclass(frozen=True)
class Equilibrium:
    """A converged solution at fixed lambda.

    ``residual_norm`` is the sup-norm of F(u, Lap u), guaranteed to be at
    most the recorded solve tolerance ``tol``.
    """

    lam: float
    u: ScalarField
    residual_norm: float
    newton_iters: int
    amplitude: float
    tol: float


@dataclass(frozen=True)
class Branch:
    """Equilibria ordered strictly monotonically in lambda, with the (l, m)
    of the eigenmode that seeded the branch as provenance."""

    points: tuple
    provenance: tuple = (None, None)

    def __post_init__(self):
        lams = [p.lam for p in self.points]
        diffs = np.diff(lams)
        if len(diffs) and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ContractError("branch lambdas must be strictly monotone")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def lams(self):
        return np.array([p.lam for p in self.points])

    @property
    def amplitudes(self):
        return np.array([p.amplitude for p in self.points])


def _spectral_solve_factory(op):
    """Closures mapping fields to/from harmonic coefficients for the
    preconditioner, independent of the operator realization."""
    grid = op.grid
    cap = min(max_degree(grid), op.degree_cap)
    l = np.arange(cap + 1, dtype=float)
    eig = -l * (l + 1.0)

    def precondition(vec, coeff_u, coeff_q):
        f = ScalarField(grid, vec.reshape(grid.n_theta, grid.n_phi))
        coeffs = sht_forward(f, cap)
        diag = coeff_u + coeff_q * eig
        floor = 1e-6 * max(1.0, abs(coeff_u) + abs(coeff_q))
        diag = np.where(np.abs(diag) < floor, np.copysign(floor, diag + (diag == 0)), diag)
        resolved = sht_inverse(
            SpectralCoeffs(cap, coeffs.coeffs / diag[:, None]), grid
        )
        # unresolved remainder is treated as a zero-eigenvalue mode of Lap
        denom = coeff_u if abs(coeff_u) > floor else math.copysign(floor, coeff_u or 1.0)
        remainder = f.values - sht_inverse(coeffs, grid).values
        return (resolved.values + remainder / denom).ravel()

    return precondition


def _krylov_solve(op, fu, fq, rhs, rtol, restart, maxiter):
    """Solve (fu + fq * Lap) s = rhs matrix-free with GMRES, preconditioned
    by the harmonic-space diagonal of the mean-coefficient operator."""
    grid = op.grid
    shape = (grid.n_theta, grid.n_phi)
    size = shape[0] * shape[1]
    w = grid.theta_weights

    def matvec(vec):
        f = ScalarField(grid, vec.reshape(shape))
        lap = apply_laplacian(op, f)
        return (fu * f.values + fq * lap.values).ravel()

    mean_w = w / np.sum(w)
    coeff_u = float(mean_w @ fu.mean(axis=1))
    coeff_q = float(mean_w @ fq.mean(axis=1))
    precondition = _spectral_solve_factory(op)

    a = LinearOperator((size, size), matvec=matvec)
    m = LinearOperator(
        (size, size), matvec=lambda v: precondition(v, coeff_u, coeff_q)
    )
    sol, info = gmres(
        a, rhs.ravel(), rtol=rtol, atol=0.0, restart=restart, maxiter=maxiter, M=m
    )
    if info != 0:
        raise LinearSolveError("GMRES stagnated (info=%d)" % info)
    return sol.reshape(shape)


def newton_solve(problem, op, guess, tol=1e-9, max_iter=30, krylov_rtol=1e-10,
                 restart=40, max_krylov_restarts=50):
    """Newton iteration on F(u, Lap u) = 0 from ``guess``.

    Each step solves the linearized system with restarted GMRES
    (harmonic-diagonal preconditioning), then applies a damped update with
    a halving line search on the residual sup-norm.  Raises
    ConvergenceError carrying the last iterate when the budget runs out.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    u = guess
    r = residual(problem, op, u)
    r_norm = r.sup_norm
    for it in range(max_iter + 1):
        if r_norm <= tol:
            return Equilibrium(
                lam=problem.lam,
                u=u,
                residual_norm=r_norm,
                newton_iters=it,
                amplitude=u.sup_norm,
                tol=tol,
            )
        if it == max_iter:
            raise ConvergenceError(
                "Newton did not reach tol=%g in %d iterations (residual %g)"
                % (tol, max_iter, r_norm),
                last_iterate=u,
                residual_norm=r_norm,
            )
        fu, fq = linearization_coefficients(problem, op, u)
        step = _krylov_solve(
            op, fu, fq, -r.values, krylov_rtol, restart, max_krylov_restarts
        )
        alpha = 1.0
        while True:
            u_try = ScalarField(u.grid, u.values + alpha * step)
            r_try = residual(problem, op, u_try)
            if r_try.sup_norm < r_norm:
                u, r, r_norm = u_try, r_try, r_try.sup_norm
                break
            alpha *= 0.5
            if alpha < 2.0**-11:
                raise ConvergenceError(
                    "line search failed at residual %g" % r_norm,
                    last_iterate=u,
                    residual_norm=r_norm,
                )
    raise AssertionError("unreachable")


def gradient_flow_relax(problem, op, u0, dt, steps, krylov_rtol=1e-10,
                        blowup=1e6):
    """Semi-implicit relaxation of u_t = F(u, Lap u).

    The Laplacian slot is advanced implicitly through a linear solve with
    the frozen coefficient F_q(u_n, Lap u_n); everything else is explicit:

        (I - dt F_q Lap) u_{n+1} = u_n + dt (F(u_n, Lap u_n) - F_q Lap u_n)

    Intended as a globalizer and as an independent check that Newton fixed
    points attract the flow, not as a time-accurate integrator.
    """
    if dt <= 0:
        raise ParameterError("dt must be positive")
    u = u0
    for _ in range(int(steps)):
        q = apply_laplacian(op, u)
        f = residual(problem, op, u)
        fu, fq = linearization_coefficients(problem, op, u)
        rhs = u.values + dt * (f.values - fq * q.values)
        new_vals = _krylov_solve(
            op, np.ones_like(fq), -dt * fq, rhs, krylov_rtol, 40, 50
        )
        u = ScalarField(u.grid, new_vals)
        if u.sup_norm > blowup:
            raise DivergenceError("gradient flow exceeded norm %g" % blowup)
    return u


def detect_bifurcations(problem_family, lam_range, l_max, n_scan=512, xtol=1e-12):
    """Parameter values where the linearization at the trivial state u == 0
    crosses zero on a degree-l harmonic.

    The trivial state must satisfy F(0, 0) = 0 across the range (verified).
    Crossings are roots of g_l(lam) = F_u(0,0; lam) - l(l+1) F_q(0,0; lam),
    located by scanning for sign changes and bisecting to ``xtol``.
    Returns a list of (lam_star, l) sorted by lam_star.
    """
    lo, hi = float(lam_range[0]), float(lam_range[1])
    if not hi > lo:
        raise ParameterError("empty lambda range")
    for lam in np.linspace(lo, hi, 9):
        p = problem_family(lam)
        if abs(float(np.asarray(p.eval_F(0.0, 0.0)))) > 1e-12:
            raise ContractError(
                "u == 0 is not an equilibrium at lambda=%g; "
                "trivial-branch bifurcation detection does not apply" % lam
            )

    found = []
    grid = np.linspace(lo, hi, int(n_scan))
    for l in range(int(l_max) + 1):
        ll1 = float(l * (l + 1))

        def g(lam, ll1=ll1):
            p = problem_family(lam)
            return float(np.asarray(p.eval_Fu(0.0, 0.0))) - ll1 * float(
                np.asarray(p.eval_Fq(0.0, 0.0))
            )

        vals = np.array([g(x) for x in grid])
        for i in range(len(grid) - 1):
            a, b = grid[i], grid[i + 1]
            fa, fb = vals[i], vals[i + 1]
            if fa == 0.0:
                if i == 0 or vals[i - 1] != 0.0:
                    found.append((float(a), l))
                continue
            if fa * fb < 0.0:
                while b - a > xtol:
                    mid = 0.5 * (a + b)
                    fm = g(mid)
                    if fm == 0.0:
                        a = b = mid
                        break
                    if fa * fm < 0.0:
                        b, fb = mid, fm
                    else:
                        a, fa = mid, fm
                found.append((0.5 * (a + b), l))
        if vals[-1] == 0.0:
            found.append((float(grid[-1]), l))
    return sorted(found)


def branch_switch(grid, lam_star, l, m, amplitude=None, side=1, dlam0=0.25):
    """Initial point for a nontrivial branch emerging at ``lam_star``.

    Returns (lam_start, guess) with lam_start = lam_star + side * dlam0 and
    guess = amplitude * Y_l^m / sup|Y_l^m|.  The default amplitude is the
    cubic normal-form estimate sqrt(4 |lam_start - lam_star| / (3 lam_start)),
    which is exact to leading order for the built-in cubic problem.  Using
    the cosine-type harmonic (m >= 0) pins the rotational phase of the
    branch at phi = 0.
    """
    if abs(m) > l:
        raise ParameterError("order |m|=%d exceeds degree l=%d" % (abs(m), l))
    if side not in (1, -1):
        raise ParameterError("side must be +1 or -1")
    lam_start = lam_star + side * dlam0
    if amplitude is None:
        denom = 3.0 * lam_start
        if denom <= 0:
            raise ParameterError(
                "default amplitude undefined at lam_start=%g; pass amplitude" % lam_start
            )
        amplitude = math.sqrt(4.0 * abs(lam_start - lam_star) / denom)
    if amplitude <= 0:
        raise ParameterError("amplitude must be positive")
    mode = harmonic_mode(grid, l, m)
    guess = mode * (amplitude / mode.sup_norm)
    return lam_start, guess


def continue_branch(problem_family, op, start, dlam, n_steps, tol=1e-9,
                    min_amplitude=1e-7, provenance=(None, None), **newton_kw):
    """Natural-parameter continuation with a secant predictor in u.

    Marches from a converged ``start`` in steps of ``dlam``; each new point
    is corrected by Newton.  Stops early (returning the partial branch) on
    non-convergence after the first step, or when the corrected point falls
    below ``min_amplitude`` -- the branch has collapsed onto the trivial
    state, which happens when continuation runs back into the bifurcation
    point.
    """
    if dlam == 0 and n_steps > 0:
        raise ParameterError("dlam must be nonzero for a nontrivial continuation")
    if start.residual_norm > start.tol:
        raise ContractError("start point is not converged")
    points = [start]
    prev_u = None
    for k in range(int(n_steps)):
        lam_next = points[-1].lam + dlam
        if prev_u is None:
            guess = points[-1].u
        else:
            guess = ScalarField(
                points[-1].u.grid, 2.0 * points[-1].u.values - prev_u.values
            )
        problem = problem_family(lam_next)
        try:
            eq = newton_solve(problem, op, guess, tol=tol, **newton_kw)
        except (ConvergenceError, LinearSolveError):
            if k == 0:
                raise
            break
        if eq.amplitude < min_amplitude:
            break
        prev_u = points[-1].u
        points.append(eq)
    return Branch(tuple(points), provenance=tuple(provenance))


def jacobian_matrix(problem, op, u):
    """Dense matrix of the linearization at u acting on grid values.

    Columns are jacobian_apply on unit basis fields, so the matrix exercises
    exactly the operator code path.  Desk-scale only (O(N^2) memory)."""
    grid = u.grid
    fu, fq = linearization_coefficients(problem, op, u)
    n = grid.n_theta * grid.n_phi
    out = np.empty((n, n))
    basis = np.zeros((grid.n_theta, grid.n_phi))
    for idx in range(n):
        basis.flat[idx] = 1.0
        lap = apply_laplacian(op, ScalarField(grid, basis))
        out[:, idx] = (fu * basis + fq * lap.values).ravel()
        basis.flat[idx] = 0.0
    return out


def quadrature_weight_vector(grid):
    """Flattened quadrature weights matching jacobian_matrix's ordering."""
    w = np.repeat(grid.theta_weights[:, None], grid.n_phi, axis=1) * grid.phi_cell
    return w.ravel()


# ---------------------------------------------------------------------------
# one-dimensional circle oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircleProfile:
    """Periodic equilibrium of u'' + lam * u * (1 - u^2) = 0 on the circle.

    ``values`` samples u on n uniform points of [0, 2*pi); the profile has
    fundamental period 2*pi / k_mode and is phase-fixed by u'(0) = 0 and
    u(0) > 0.  ``trivial`` flags the zero profile returned when no
    nontrivial solution exists (lam <= k^2).
    """

    n: int
    values: np.ndarray
    lam: float
    k_mode: int
    residual_norm: float
    trivial: bool

    @property
    def amplitude(self):
        return float(np.max(np.abs(self.values)))


def circle_normal_form_amplitude(lam, k):
    """Leading-order amplitude sqrt(4 (lam - k^2) / (3 lam)) of the branch."""
    if lam <= k * k:
        return 0.0
    return math.sqrt(4.0 * (lam - k * k) / (3.0 * lam))


def circle_solve(lam, k, n=256, tol=1e-12, max_iter=60):
    """Nontrivial periodic equilibrium on the circle by cosine-Galerkin
    Newton iteration, independent of all sphere machinery.

    Expands u(phi) = sum_j c_j cos(j*k*phi) (which enforces the phase fix
    structurally), collocates the residual on n uniform points, projects it
    back onto the cosine modes via FFT, and Newton-solves the coefficient
    system with a dense Jacobian.  For lam <= k^2 the trivial profile is
    returned with ``trivial=True``.
    """
    lam = float(lam)
    k = int(k)
    if k < 1:
        raise ParameterError("k must be a positive integer")
    if n < 16 or n % 2:
        raise ParameterError("n must be an even integer >= 16")
    if lam <= k * k:
        return CircleProfile(n, np.zeros(n), lam, k, 0.0, True)

    n_modes = n // (2 * k)
    if n_modes < 4:
        raise ParameterError("n too small to resolve period 2*pi/%d" % k)
    phi = TWO_PI * np.arange(n) / n
    synth = np.cos(np.outer(phi, k * np.arange(n_modes)))  # (n, n_modes)
    d2 = -((k * np.arange(n_modes, dtype=float)) ** 2)
    proj = synth.T * (2.0 / n)
    proj[0] *= 0.5

    c = np.zeros(n_modes)
    c[1] = circle_normal_form_amplitude(lam, k)
    for _ in range(max_iter):
        u = synth @ c
        r = synth @ (d2 * c) + lam * u * (1.0 - u * u)
        rc = proj @ r
        if np.max(np.abs(rc)) <= tol:
            break
        jac = (proj * (lam * (1.0 - 3.0 * u * u))) @ synth + np.diag(d2)
        c -= np.linalg.solve(jac, rc)
    else:
        raise ConvergenceError(
            "circle Newton did not converge", residual_norm=float(np.max(np.abs(rc)))
        )
    if c[np.argmax(np.abs(c))] < 0:
        c = -c  # pin u(0) > 0
    u = synth @ c

    # independent residual check on a 4x oversampled grid
    fine = 4 * n
    phi_f = TWO_PI * np.arange(fine) / fine
    synth_f = np.cos(np.outer(phi_f, k * np.arange(n_modes)))
    u_f = synth_f @ c
    res_f = synth_f @ (d2 * c) + lam * u_f * (1.0 - u_f * u_f)
    res_norm = float(np.max(np.abs(res_f)))
    trivial = bool(np.max(np.abs(u)) < 1e-8)
    return CircleProfile(n, u, lam, k, res_norm, trivial)


def circle_extrema(profile, refine_tol=1e-12):
    """Longitudes of the extrema of a circle profile, by sign changes of the
    cosine-series derivative plus bisection."""
    n_modes = profile.n // (2 * profile.k_mode)
    k = profile.k_mode
    # recover coefficients by projection (profile stores only samples)
    phi = TWO_PI * np.arange(profile.n) / profile.n
    synth = np.cos(np.outer(phi, k * np.arange(n_modes)))
    proj = synth.T * (2.0 / profile.n)
    proj[0] *= 0.5
    c = proj @ profile.values

    def du(x):
        j = np.arange(n_modes, dtype=float)
        return float(-np.sum(c * k * j * np.sin(k * j * x)))

    fine = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
    vals = np.array([du(x) for x in fine])
    roots = []
    for i in range(len(fine)):
        a, b = fine[i], fine[(i + 1) % len(fine)] + (TWO_PI if i + 1 == len(fine) else 0)
        fa, fb = vals[i], vals[(i + 1) % len(fine)]
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0.0:
            while b - a > refine_tol:
                mid = 0.5 * (a + b)
                fm = du(mid)
                if fa * fm <= 0.0:
                    b, fb = mid, fm
                else:
                    a, fa = mid, fm
            roots.append(0.5 * (a + b))
    return np.array(sorted(r % TWO_PI for r in roots))
