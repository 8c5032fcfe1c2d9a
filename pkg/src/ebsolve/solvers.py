"""Richardson and Chebyshev iterations driven by the matrix-free residual.

All three methods share one loop: compute the residual, zero it at the
constrained nodes, advance the iterate, record norms.  They differ only in
the step they take from the current residual:

* richardson      x += omega * r                  with omega = 2/(lam1+lam2)
* chebyshev2      x += (1/alpha_{k mod N}) * r    cycling through the N roots
                  of the shifted Chebyshev polynomial in natural order
* chebyshev3      two-term alpha/beta recurrence, the numerically stable
                  realization of the same Chebyshev polynomial

The cyclic two-level method is kept deliberately in its naive root order:
its intra-cycle amplification of round-off is a feature under study, not a
bug to fix here.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .elements import ElementBatch
from .operators import DirichletData, mask_dirichlet, residual


@dataclass(frozen=True)
class SpectralBounds:
    """An interval [lambda1, lambda2] enclosing the spectrum on free nodes.

    lambda1 = 0 is admitted so that root computations on a half-open
    spectrum stay expressible; convergence guarantees need lambda1 > 0.
    """

    lambda1: float
    lambda2: float

    def __post_init__(self):
        if not (np.isfinite(self.lambda1) and np.isfinite(self.lambda2)):
            raise ValueError("spectral bounds must be finite")
        if self.lambda1 < 0 or self.lambda2 < self.lambda1 or self.lambda2 <= 0:
            raise ValueError(
                f"need 0 <= lambda1 <= lambda2, lambda2 > 0; "
                f"got [{self.lambda1}, {self.lambda2}]"
            )

    @property
    def center(self) -> float:
        return (self.lambda2 + self.lambda1) / 2.0

    @property
    def half_width(self) -> float:
        return (self.lambda2 - self.lambda1) / 2.0


@dataclass(frozen=True)
class ChebyshevCycle:
    """Precomputed cycle of step denominators for the two-level method."""

    N: int
    alphas: npt.NDArray[np.float64]
    d: float
    c: float


@dataclass(frozen=True)
class ConvergenceHistory:
    """Per-iteration record of one solve.

    residual_norms[k] is ||r^k||_2 for k = 0..iters (one entry more than the
    number of steps, since the residual after the final update is recorded
    too).  error_norms tracks ||x^k - reference||_2 when a reference
    solution was supplied.
    """

    residual_norms: npt.NDArray[np.float64]
    error_norms: npt.NDArray[np.float64] | None
    wall_time: float
    diverged: bool = False


def chebyshev_roots(bounds: SpectralBounds, N: int) -> ChebyshevCycle:
    """Roots of the degree-N Chebyshev polynomial shifted to [lambda1, lambda2].

    alphas[k] = d + c*cos(pi*(k+1/2)/N), k = 0..N-1, with d the interval
    center and c its half-width.  N = 1 degenerates to the single root d, so
    one cycle step equals Richardson's optimal step.
    """
    if N < 1:
        raise ValueError(f"cycle length must be positive, got N={N}")
    d = bounds.center
    c = bounds.half_width
    k = np.arange(N)
    alphas = d + c * np.cos(np.pi * (k + 0.5) / N)
    alphas.setflags(write=False)
    return ChebyshevCycle(N=N, alphas=alphas, d=d, c=c)


def chebyshev_scaling_factor(bounds: SpectralBounds, k: int) -> float:
    """C_k from the three-term recurrence; equals T_k((lam1+lam2)/(lam2-lam1))."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    if bounds.lambda1 >= bounds.lambda2:
        raise ValueError("scaling factors need lambda1 < lambda2")
    t = (bounds.lambda1 + bounds.lambda2) / (bounds.lambda2 - bounds.lambda1)
    c_prev, c_cur = 1.0, t
    if k == 0:
        return c_prev
    for _ in range(k - 1):
        c_prev, c_cur = c_cur, 2.0 * t * c_cur - c_prev
    return c_cur


def _iterate(batch, dirichlet, x0, iters, advance, *, tol, reference, callback,
             threads, deterministic):
    """Shared solver loop; ``advance(k, x, r) -> new x`` defines the method."""
    if iters < 0:
        raise ValueError(f"iteration count must be nonnegative, got {iters}")
    x = np.array(x0, dtype=np.float64, copy=True)
    errors = [] if reference is not None else None
    diverged = False
    t0 = time.perf_counter()

    r = mask_dirichlet(residual(batch, x, threads, deterministic), dirichlet)
    norms = [float(np.linalg.norm(r))]
    if errors is not None:
        errors.append(float(np.linalg.norm(x - reference)))
    if callback is not None:
        callback(0, x, r)

    for k in range(iters):
        if tol is not None and norms[-1] <= tol * norms[0]:
            break
        x = advance(k, x, r)
        if not np.all(np.isfinite(x)):
            norms.append(float("inf"))
            if errors is not None:
                errors.append(float("inf"))
            diverged = True
            break
        r = mask_dirichlet(residual(batch, x, threads, deterministic), dirichlet)
        norms.append(float(np.linalg.norm(r)))
        if errors is not None:
            errors.append(float(np.linalg.norm(x - reference)))
        if callback is not None:
            callback(k + 1, x, r)
        if not np.isfinite(norms[-1]):
            diverged = True
            break

    history = ConvergenceHistory(
        residual_norms=np.array(norms),
        error_norms=None if errors is None else np.array(errors),
        wall_time=time.perf_counter() - t0,
        diverged=diverged,
    )
    return x, history


def richardson(
    batch: ElementBatch,
    d: DirichletData,
    x0: np.ndarray,
    bounds: SpectralBounds,
    iters: int,
    *,
    tol: float | None = None,
    reference: np.ndarray | None = None,
    callback=None,
    threads: int = 1,
    deterministic: bool = True,
):
    """Damped Richardson iteration with the optimal fixed step 2/(lam1+lam2)."""
    omega = 2.0 / (bounds.lambda1 + bounds.lambda2)

    def advance(k, x, r):
        return x + omega * r

    return _iterate(batch, d, x0, iters, advance, tol=tol, reference=reference,
                    callback=callback, threads=threads, deterministic=deterministic)


def chebyshev2(
    batch: ElementBatch,
    d: DirichletData,
    x0: np.ndarray,
    bounds: SpectralBounds,
    N: int,
    iters: int,
    *,
    tol: float | None = None,
    reference: np.ndarray | None = None,
    callback=None,
    threads: int = 1,
    deterministic: bool = True,
):
    """Cyclic two-level Chebyshev iteration (roots in natural order).

    After each full cycle of N steps the accumulated error polynomial is the
    optimal shifted Chebyshev polynomial; within a cycle the small-root
    steps amplify high-frequency content, which makes intermediate residuals
    grow before the cycle completes.
    """
    cycle = chebyshev_roots(bounds, N)

    def advance(k, x, r):
        return x + (1.0 / cycle.alphas[k % cycle.N]) * r

    return _iterate(batch, d, x0, iters, advance, tol=tol, reference=reference,
                    callback=callback, threads=threads, deterministic=deterministic)


def chebyshev3(
    batch: ElementBatch,
    d: DirichletData,
    x0: np.ndarray,
    bounds: SpectralBounds,
    iters: int,
    *,
    tol: float | None = None,
    reference: np.ndarray | None = None,
    callback=None,
    threads: int = 1,
    deterministic: bool = True,
):
    """Three-level Chebyshev iteration via the stable two-term recurrence.

    First step x^1 = x^0 + (1/d) r^0; afterwards

        beta_k  = (c*alpha_{k-1})^2 / 2        for k = 1,
                  (c*alpha_{k-1}/2)^2          for k > 1,
        alpha_k = 1 / (d - beta_k/alpha_{k-1}),
        p^k     = r^k + beta_k p^{k-1},
        x^{k+1} = x^k + alpha_k p^k.

    Equivalent, step for step, to the explicit three-term form built on the
    scaling factors C_k, but free of their exponential growth.
    """
    if not bounds.lambda1 < bounds.lambda2:
        raise ValueError("chebyshev3 needs lambda1 < lambda2")
    dd = bounds.center
    cc = bounds.half_width
    state = {"alpha": 0.0, "p": None}

    def advance(k, x, r):
        if k == 0:
            state["alpha"] = 1.0 / dd
            state["p"] = r.copy()
        else:
            beta = 0.5 * (cc * state["alpha"]) ** 2
            if k > 1:
                beta *= 0.5
            state["alpha"] = 1.0 / (dd - beta / state["alpha"])
            state["p"] = r + beta * state["p"]
        return x + state["alpha"] * state["p"]

    return _iterate(batch, d, x0, iters, advance, tol=tol, reference=reference,
                    callback=callback, threads=threads, deterministic=deterministic)
