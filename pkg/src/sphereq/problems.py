"""Nonlinear problem definitions F(u, q) with q the Laplace-Beltrami of u,
their partial derivatives, ellipticity auditing, residual and Jacobian
assembly, and the averaged linearization coefficients along the straight
homotopy between a field and a reference field.

A problem is a bundle of three pointwise evaluators (F, F_u, F_q) plus an
ellipticity floor delta and a scalar parameter lambda.  Keeping the
evaluators opaque leaves the module agnostic to the form of F while making
the partial derivatives explicit, which every audit downstream needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ContractError, EvaluationError, ParameterError
from .grid import ScalarField, gauss_legendre
from .harmonics import apply_laplacian


@dataclass(frozen=True)
class NonlinearProblem:
    """Evaluator triple for 0 = F(u, q) with uniform ellipticity F_q >= delta.

    The evaluators must accept numpy arrays (or scalars) for both slots and
    broadcast; ``lam`` is the bifurcation parameter, which a problem is free
    to ignore.
    """

    name: str
    eval_F: Callable
    eval_Fu: Callable
    eval_Fq: Callable
    delta_floor: float
    lam: float = 0.0


def chafee_infante(lam):
    """The cubic problem F(u, q) = q + lam * u * (1 - u^2).

    Constant equilibria are 0 and +-1; the trivial branch loses stability
    on degree-l harmonics at lam = l*(l+1).  F_q is identically 1, so the
    ellipticity floor is 1.
    """
    lam = float(lam)

    def f(u, q):
        return q + lam * u * (1.0 - u * u)

    def fu(u, q):
        return lam * (1.0 - 3.0 * u * u) + 0.0 * np.asarray(q, dtype=float)

    def fq(u, q):
        return np.ones_like(np.asarray(u, dtype=float) + np.asarray(q, dtype=float))

    return NonlinearProblem("chafee-infante", f, fu, fq, delta_floor=1.0, lam=lam)


#: Built-in problem factories addressable by name (lambda is passed through).
PROBLEM_REGISTRY = {
    "chafee-infante": chafee_infante,
}


def problem_from_name(name, lam):
    try:
        factory = PROBLEM_REGISTRY[name]
    except KeyError:
        raise ParameterError(
            "unknown problem %r (available: %s)"
            % (name, ", ".join(sorted(PROBLEM_REGISTRY)))
        ) from None
    return factory(lam)


def residual(problem, op, u):
    """Pointwise F(u, Lap u) on the grid."""
    q = apply_laplacian(op, u)
    vals = np.asarray(problem.eval_F(u.values, q.values), dtype=float)
    if not np.all(np.isfinite(vals)):
        j, k = np.argwhere(~np.isfinite(vals))[0]
        raise EvaluationError(
            "F produced a non-finite value at ring %d, column %d" % (j, k)
        )
    return ScalarField(u.grid, vals)


def linearization_coefficients(problem, op, u):
    """Pointwise F_u and F_q evaluated at (u, Lap u), as plain arrays."""
    q = apply_laplacian(op, u)
    fu = np.broadcast_to(
        np.asarray(problem.eval_Fu(u.values, q.values), dtype=float), u.values.shape
    ).copy()
    fq = np.broadcast_to(
        np.asarray(problem.eval_Fq(u.values, q.values), dtype=float), u.values.shape
    ).copy()
    return fu, fq


def jacobian_apply(problem, op, u, w):
    """Action of the linearization at u on w: F_u(u, Lap u) w + F_q(u, Lap u) Lap w."""
    fu, fq = linearization_coefficients(problem, op, u)
    lap_w = apply_laplacian(op, w)
    return ScalarField(u.grid, fu * w.values + fq * lap_w.values)


class EllipticityAudit(NamedTuple):
    min_fq: float
    passed: bool


def ellipticity_audit(problem, op, u):
    """Minimum of F_q(u, Lap u) over the grid and whether it clears the floor.

    Failure is a reported outcome, not an exception: audits must be able to
    describe problems that lose ellipticity on a given state.
    """
    _, fq = linearization_coefficients(problem, op, u)
    min_fq = float(np.min(fq))
    return EllipticityAudit(min_fq, min_fq >= problem.delta_floor)


@dataclass(frozen=True)
class HadamardCoeffs:
    """Averaged linearization coefficients along the straight homotopy
    u^tau = tau * u + (1 - tau) * u_ref:

        a = integral_0^1 F_q(u^tau, Lap u^tau) dtau
        b = integral_0^1 F_u(u^tau, Lap u^tau) dtau

    With w = u - u_ref, the fundamental theorem of calculus gives
    a * Lap w + b * w = F(u, Lap u) - F(u_ref, Lap u_ref) exactly, which is
    what makes reflection differences satisfy a linear elliptic equation.
    """

    a: ScalarField
    b: ScalarField
    tau_nodes: np.ndarray


def hadamard_coeffs(problem, op, u, u_ref, n_tau=8):
    """Compute the averaged coefficients by n_tau-point Gauss-Legendre
    quadrature in tau (exact for polynomial F up to degree 2*n_tau - 1).

    ``u_ref`` is typically a reflection of u supplied by the caller; the
    Laplacian along the homotopy is formed by linearity as
    tau * Lap u + (1 - tau) * Lap u_ref.
    """
    if n_tau < 2:
        raise ParameterError("n_tau must be at least 2")
    if u_ref.grid != u.grid:
        raise ContractError("u and u_ref must share a grid")
    x, wts = gauss_legendre(int(n_tau))
    tau = 0.5 * (x + 1.0)
    wtau = 0.5 * wts
    q_u = apply_laplacian(op, u).values
    q_ref = apply_laplacian(op, u_ref).values
    shape = u.values.shape
    a = np.zeros(shape)
    b = np.zeros(shape)
    for t, wt in zip(tau, wtau):
        u_tau = t * u.values + (1.0 - t) * u_ref.values
        q_tau = t * q_u + (1.0 - t) * q_ref
        a += wt * np.broadcast_to(
            np.asarray(problem.eval_Fq(u_tau, q_tau), dtype=float), shape
        )
        b += wt * np.broadcast_to(
            np.asarray(problem.eval_Fu(u_tau, q_tau), dtype=float), shape
        )
    return HadamardCoeffs(
        a=ScalarField(u.grid, a), b=ScalarField(u.grid, b), tau_nodes=tau
    )


def verify_partial_derivatives(problem, rng=None, n_samples=64, h=1e-6, scale=2.0):
    """Largest relative mismatch of (F_u, F_q) against centered differences
    of F on random (u, q) samples.  A quick contract check for user-supplied
    problems."""
    rng = np.random.default_rng(rng)
    u = scale * rng.standard_normal(n_samples)
    q = scale * rng.standard_normal(n_samples)
    fu = np.asarray(problem.eval_Fu(u, q), dtype=float)
    fq = np.asarray(problem.eval_Fq(u, q), dtype=float)
    fu_fd = (problem.eval_F(u + h, q) - problem.eval_F(u - h, q)) / (2.0 * h)
    fq_fd = (problem.eval_F(u, q + h) - problem.eval_F(u, q - h)) / (2.0 * h)
    denom = np.maximum(1.0, np.abs(fu_fd))
    err_u = float(np.max(np.abs(fu - fu_fd) / denom))
    denom = np.maximum(1.0, np.abs(fq_fd))
    err_q = float(np.max(np.abs(fq - fq_fd) / denom))
    return err_u, err_q
