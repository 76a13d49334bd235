"""Discrete-time stochastic calculus on finite filtered spaces.

Conventions: ``(H.X)_t = sum_{s<=t} H_s (X_s - X_{s-1})`` for predictable H,
``[X,Y]_t = sum_{s<=t} dX_s dY_s``, and every process starts at t=0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import solve_min_norm
from .space import (
    ADAPTED,
    PREDICTABLE,
    RAW,
    Diagnostic,
    Filtration,
    MeasurabilityError,
    Process,
    cumulate,
    delta,
    ratio,
)


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, Process) else np.asarray(x)


def integrate(H, X, filtration: Filtration | None = None) -> Process:
    """Stochastic integral H.X (zero at t=0).

    ``H`` and ``X`` may be single processes or equal-length sequences, in
    which case the integrands are paired and summed.
    """
    Hs = list(H) if isinstance(H, (list, tuple)) else [H]
    Xs = list(X) if isinstance(X, (list, tuple)) else [X]
    if len(Hs) != len(Xs):
        raise ValueError(f"{len(Hs)} integrands for {len(Xs)} integrators")
    filt = filtration or next(p.filtration for p in Hs + Xs if isinstance(p, Process))
    for h in Hs:
        if isinstance(h, Process) and h.tag == ADAPTED and not _is_predictable(h):
            raise MeasurabilityError("integrand must be predictable")
        if isinstance(h, Process) and h.tag == RAW:
            raise MeasurabilityError("integrand is untagged (raw)")
    for x in Xs:
        if isinstance(x, Process) and x.tag == RAW:
            raise MeasurabilityError("integrator must be adapted")
    space = filt.space
    inc = space.zeros((space.horizon + 1, space.n))
    for h, x in zip(Hs, Xs):
        inc = inc + _values(h) * delta(_values(x))
    return Process(cumulate(inc), filt, ADAPTED, check=False)


def _is_predictable(p: Process) -> bool:
    from .space import measurability_violation

    return measurability_violation(p.values, p.filtration, PREDICTABLE) is None


def integrate_values(H: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Array-level H.X without measurability checks."""
    return cumulate(H * delta(X))


def bracket(X, Y, filtration: Filtration | None = None) -> Process:
    """Quadratic covariation [X,Y]."""
    filt = filtration or (X.filtration if isinstance(X, Process) else Y.filtration)
    if isinstance(X, Process) and isinstance(Y, Process) and X.space is not Y.space:
        raise ValueError("space mismatch")
    return Process(cumulate(delta(_values(X)) * delta(_values(Y))), filt, ADAPTED, check=False)


def dual_projection(V, mode: str, filtration: Filtration) -> Process:
    """Dual optional/predictable projection of a raw finite-variation process."""
    values = _values(V)
    inc = delta(values)
    space = filtration.space
    out = space.zeros(values.shape)
    for s in range(1, values.shape[0]):
        if mode == "optional":
            out[s] = filtration.cond_exp(inc[s], s)
        elif mode == "predictable":
            out[s] = filtration.cond_exp(inc[s], s - 1)
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return Process(cumulate(out), filtration, ADAPTED, check=False)


def angle_bracket(X, Y, filtration: Filtration | None = None) -> Process:
    """Predictable compensator <X,Y> of [X,Y]."""
    filt = filtration or (X.filtration if isinstance(X, Process) else Y.filtration)
    comp = dual_projection(bracket(X, Y, filt), "predictable", filt)
    return comp.retag(PREDICTABLE, check=False)


def conditional_moment_ratio(A, B, filtration: Filtration) -> np.ndarray:
    """Atomwise d<A,B>/d<B> = E[dA dB | s-1] / E[dB^2 | s-1], 0/0 -> 0.

    Returned as a predictable array (value at 0 is zero).
    """
    a, b = delta(_values(A)), delta(_values(B))
    space = filtration.space
    out = space.zeros(a.shape)
    for s in range(1, a.shape[0]):
        num = filtration.cond_exp(a[s] * b[s], s - 1)
        den = filtration.cond_exp(b[s] * b[s], s - 1)
        out[s] = ratio(num, den, space)
    return out


def is_martingale(X, filtration: Filtration | None = None) -> Diagnostic:
    """Check E[dX_s | atoms at s-1] == 0 for every step and atom."""
    filt = filtration or X.filtration
    values = _values(X)
    space = filt.space
    inc = delta(values)
    tol = space.tolerance(values)
    worst, where = 0.0, None
    for s in range(1, values.shape[0]):
        drift = filt.cond_exp(inc[s], s - 1)
        for k, atom in enumerate(filt[s - 1].atoms):
            d = drift[atom[0]]
            if d == 0:
                continue
            mag = abs(float(d))
            if where is None or mag > worst:
                worst, where = mag, (s, k)
    ok = where is None if space.exact else worst <= tol
    return Diagnostic(ok, worst, None if ok else where,
                      "" if ok else f"drift {worst:g} at (t, atom)={where}")


def are_orthogonal(M, N, filtration: Filtration | None = None) -> Diagnostic:
    """M and N orthogonal iff [M,N] is a martingale."""
    filt = filtration or (M.filtration if isinstance(M, Process) else N.filtration)
    return is_martingale(bracket(M, N, filt), filt)


@dataclass
class GkwParts:
    """M = M_0 + integrand . X + residual with <X, residual> == 0."""

    integrand: list[Process]
    residual: Process
    integrators: list[Process]
    initial: np.ndarray

    @property
    def theta(self) -> Process:
        if len(self.integrand) != 1:
            raise ValueError("multi-asset decomposition; use .integrand")
        return self.integrand[0]


def gkw(M, X, filtration: Filtration | None = None, check: bool = True) -> GkwParts:
    """Galtchouk-Kunita-Watanabe decomposition of M against integrators X.

    Per step and predictable atom the conditional normal equations
    E[dX dX^T | A] theta = E[dX dM | A] are solved; singular Gram matrices
    take the minimum-norm solution.
    """
    Xs = list(X) if isinstance(X, (list, tuple)) else [X]
    filt = filtration or (M.filtration if isinstance(M, Process) else Xs[0].filtration)
    space = filt.space
    if check:
        for name, p in [("M", M)] + [(f"X[{i}]", x) for i, x in enumerate(Xs)]:
            diag = is_martingale(p, filt)
            if not diag.ok:
                raise ValueError(f"{name} is not a martingale: {diag.detail}")
    m = _values(M)
    dm = delta(m)
    dxs = [delta(_values(x)) for x in Xs]
    d = len(Xs)
    thetas = [space.zeros(m.shape) for _ in range(d)]
    for s in range(1, m.shape[0]):
        level = s - 1
        if d == 1:
            num = filt.cond_exp(dxs[0][s] * dm[s], level)
            den = filt.cond_exp(dxs[0][s] * dxs[0][s], level)
            thetas[0][s] = ratio(num, den, space)
            continue
        for atom in filt[level].atoms:
            w = space.weights[atom]
            gram = [[(w * dxs[i][s][atom] * dxs[j][s][atom]).sum() for j in range(d)]
                    for i in range(d)]
            rhs = [(w * dxs[i][s][atom] * dm[s][atom]).sum() for i in range(d)]
            sol = solve_min_norm(gram, rhs, exact=space.exact)
            for i in range(d):
                thetas[i][s][atom] = sol[i]
    integrand = [Process(th, filt, PREDICTABLE, check=False) for th in thetas]
    hedge = space.zeros(m.shape)
    for th, dx in zip(thetas, dxs):
        hedge = hedge + th * dx
    resid = cumulate(dm - hedge)
    residual = Process(resid, filt, ADAPTED, check=False)
    return GkwParts(integrand, residual, Xs, m[0].copy())
