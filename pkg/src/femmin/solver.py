"""Unconstrained minimization over free dofs with fixed Dirichlet values.

The default solver is a Hessian-free trust-region Newton method: the
quadratic model is solved by Steihaug truncated conjugate gradients with
Hessian-vector products obtained by central-differencing the gradient.
An L-BFGS fallback with Armijo backtracking is selectable.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh


class InvalidStartError(ValueError):
    """The initial field has non-finite energy."""


class StagnationError(RuntimeError):
    """No admissible step could be found at the minimal trust radius."""


@dataclass
class SolveOptions:
    solver: str = "tr"             # "tr" | "lbfgs"
    tol_g: float = 1e-6            # relative gradient inf-norm tolerance
    tol_step: float = 1e-6
    tol_f: float = 1e-6
    max_iters: int = 2000
    tr_radius0: float = 1.0
    tr_radius_max: float = 1e10
    max_cg: int | None = None
    hvp_step: float | None = None  # None: sqrt(eps_mach)*(1+|x|)/|dir|
    lbfgs_memory: int = 10
    verbose: bool = False

    def __post_init__(self):
        if min(self.tol_g, self.tol_step, self.tol_f) <= 0:
            raise ValueError("tolerances must be positive")
        if self.solver not in ("tr", "lbfgs"):
            raise ValueError(f"unknown solver {self.solver!r}")


@dataclass
class MinimizeResult:
    u: np.ndarray                  # full field, Dirichlet entries as given
    J_u: float
    iters: int
    grad_norm: float
    time: float
    converged: bool
    status: str
    J_grad_u: float | None = None  # filled by callers that track the split
    n_energy: int = 0
    n_grad: int = 0


def _hvp_factory(gx, x, opts):
    sqrt_eps = np.sqrt(np.finfo(float).eps)
    xnorm = np.linalg.norm(x)

    def hvp(p):
        pnorm = np.linalg.norm(p)
        if pnorm == 0.0:
            return np.zeros_like(p)
        h = opts.hvp_step or sqrt_eps * (1.0 + xnorm) / pnorm
        return (gx(x + h * p) - gx(x - h * p)) / (2.0 * h)

    return hvp


def _steihaug(g, hvp, radius, rtol, maxiter):
    """Truncated CG on the quadratic model inside the trust region.

    Returns (step, hit_boundary).
    """
    z = np.zeros_like(g)
    r = -g.copy()
    d = r.copy()
    rr = float(r @ r)
    if np.sqrt(rr) <= rtol:
        return z, False

    def to_boundary(z, d):
        dd = float(d @ d)
        zd = float(z @ d)
        zz = float(z @ z)
        tau = (-zd + np.sqrt(zd * zd + dd * (radius * radius - zz))) / dd
        return z + tau * d

    for _ in range(maxiter):
        Hd = hvp(d)
        dHd = float(d @ Hd)
        if dHd <= 0.0:
            return to_boundary(z, d), True
        alpha = rr / dHd
        z_next = z + alpha * d
        if np.linalg.norm(z_next) >= radius:
            return to_boundary(z, d), True
        z = z_next
        r -= alpha * Hd
        rr_next = float(r @ r)
        if np.sqrt(rr_next) <= rtol:
            return z, False
        d = r + (rr_next / rr) * d
        rr = rr_next
    return z, False


def minimize(
    J,
    g,
    v0: np.ndarray,
    dofs_minim: np.ndarray,
    opts: SolveOptions | None = None,
) -> MinimizeResult:
    """Minimize J over the free dofs of v0, holding the other entries fixed.

    ``J`` maps a full field vector to a scalar (possibly +inf for
    inadmissible states), ``g`` maps it to the gradient restricted to the
    free dofs.  The Dirichlet entries of v0 are preserved bit-exactly.
    """
    opts = opts or SolveOptions()
    template = np.array(v0, dtype=float, copy=True)
    counters = {"f": 0, "g": 0}

    def embed(x):
        vv = template.copy()
        vv[dofs_minim] = x
        return vv

    def fx(x):
        counters["f"] += 1
        return float(J(embed(x)))

    def gx(x):
        counters["g"] += 1
        return np.asarray(g(embed(x)), dtype=float)

    x0 = template[dofs_minim].copy()
    t0 = time.perf_counter()
    f0 = fx(x0)
    if not np.isfinite(f0):
        raise InvalidStartError("initial field has non-finite energy")

    if opts.solver == "lbfgs":
        x, f, iters, gnorm, converged, status = _lbfgs_loop(fx, gx, x0, f0, opts)
    else:
        x, f, iters, gnorm, converged, status = _tr_loop(fx, gx, x0, f0, opts)

    return MinimizeResult(
        u=embed(x),
        J_u=f,
        iters=iters,
        grad_norm=gnorm,
        time=time.perf_counter() - t0,
        converged=converged,
        status=status,
        n_energy=counters["f"],
        n_grad=counters["g"],
    )


def _tr_loop(fx, gx, x, f, opts):
    gcur = gx(x)
    gnorm0 = float(np.linalg.norm(gcur, np.inf))
    gtol = opts.tol_g * max(1.0, gnorm0)
    radius = opts.tr_radius0
    n = x.size
    max_cg = opts.max_cg or max(2 * n, 10)

    status = "max-iters"
    converged = False
    iters = 0
    for iters in range(1, opts.max_iters + 1):
        gnorm = float(np.linalg.norm(gcur, np.inf))
        if gnorm <= gtol:
            status, converged = "gradient-tolerance", True
            break
        if opts.verbose:
            print(
                f"tr iter {iters:4d}  J={f: .8e}  |g|={gnorm:.3e}  "
                f"radius={radius:.3e}",
                file=sys.stderr,
            )

        hvp = _hvp_factory(gx, x, opts)
        g2 = float(np.linalg.norm(gcur))
        eta = min(0.5, np.sqrt(g2 / max(gnorm0, 1e-300)))
        p, _ = _steihaug(gcur, hvp, radius, eta * g2, max_cg)
        pred = -(float(gcur @ p) + 0.5 * float(p @ hvp(p)))
        pnorm = float(np.linalg.norm(p))

        if pred <= 0.0 or pnorm == 0.0:
            radius *= 0.25
            if radius < 1e-14 * (1.0 + np.linalg.norm(x)):
                raise StagnationError(
                    f"no model decrease at radius {radius:.3e}, |g|={gnorm:.3e}"
                )
            continue

        f_trial = fx(x + p)
        ratio = (f - f_trial) / pred if np.isfinite(f_trial) else 0.0

        if ratio < 0.25:
            radius = 0.25 * min(radius, pnorm)
        elif ratio > 0.75 and pnorm >= 0.99 * radius:
            radius = min(2.0 * radius, opts.tr_radius_max)

        if ratio > 1e-4 and f_trial < f:
            x = x + p
            f_prev, f = f, f_trial
            gcur = gx(x)
            small_step = pnorm <= opts.tol_step * (1.0 + np.linalg.norm(x))
            small_decrease = (f_prev - f) <= opts.tol_f * (1.0 + abs(f))
            if small_step and small_decrease:
                status, converged = "step-tolerance", True
                break
        elif radius < 1e-14 * (1.0 + np.linalg.norm(x)):
            raise StagnationError(
                f"trial steps rejected down to radius {radius:.3e}"
            )

    gnorm = float(np.linalg.norm(gcur, np.inf))
    return x, f, iters, gnorm, converged, status


def _lbfgs_loop(fx, gx, x, f, opts):
    m = opts.lbfgs_memory
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    gcur = gx(x)
    gnorm0 = float(np.linalg.norm(gcur, np.inf))
    gtol = opts.tol_g * max(1.0, gnorm0)

    status = "max-iters"
    converged = False
    iters = 0
    for iters in range(1, opts.max_iters + 1):
        gnorm = float(np.linalg.norm(gcur, np.inf))
        if gnorm <= gtol:
            status, converged = "gradient-tolerance", True
            break
        if opts.verbose:
            print(
                f"lbfgs iter {iters:4d}  J={f: .8e}  |g|={gnorm:.3e}",
                file=sys.stderr,
            )

        d = _lbfgs_direction(gcur, s_hist, y_hist)
        # Armijo backtracking, rejecting inadmissible (+inf) trials
        step = 1.0
        gd = float(gcur @ d)
        if gd >= 0.0:
            d = -gcur
            gd = float(gcur @ d)
        accepted = False
        for _ in range(60):
            f_trial = fx(x + step * d)
            if np.isfinite(f_trial) and f_trial <= f + 1e-4 * step * gd:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise StagnationError("line search failed at minimal step")

        x_new = x + step * d
        g_new = gx(x_new)
        s = x_new - x
        y = g_new - gcur
        if float(s @ y) > 1e-12 * float(s @ s):
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > m:
                s_hist.pop(0)
                y_hist.pop(0)
        f_prev, f = f, float(f_trial)
        x, gcur = x_new, g_new
        small_step = np.linalg.norm(s) <= opts.tol_step * (1.0 + np.linalg.norm(x))
        small_decrease = (f_prev - f) <= opts.tol_f * (1.0 + abs(f))
        if small_step and small_decrease:
            status, converged = "step-tolerance", True
            break

    gnorm = float(np.linalg.norm(gcur, np.inf))
    return x, f, iters, gnorm, converged, status


def _lbfgs_direction(g, s_hist, y_hist):
    q = -g.copy()
    if not s_hist:
        return q
    alphas = []
    rhos = [1.0 / float(y @ s) for s, y in zip(s_hist, y_hist)]
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rhos)):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    y_last, s_last = y_hist[-1], s_hist[-1]
    q *= float(s_last @ y_last) / float(y_last @ y_last)
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rhos), reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return q


def continuation_solve(
    J,
    g,
    v0: np.ndarray,
    dofs_minim: np.ndarray,
    dofs_dirichlet: np.ndarray,
    dirichlet_values: list,
    opts: SolveOptions | None = None,
    callback=None,
) -> list[MinimizeResult]:
    """Warm-started load stepping.

    ``dirichlet_values[t]`` holds the prescribed values at the Dirichlet
    dofs for step t; each step starts from the previous minimizer with the
    boundary entries overwritten.
    """
    results = []
    v = np.array(v0, dtype=float, copy=True)
    for t, bc in enumerate(dirichlet_values, start=1):
        v[dofs_dirichlet] = bc
        try:
            res = minimize(J, g, v, dofs_minim, opts)
        except (InvalidStartError, StagnationError) as exc:
            raise type(exc)(f"load step {t}: {exc}") from exc
        results.append(res)
        v = res.u.copy()  # the next step overwrites boundary entries in place
        if callback is not None:
            callback(t, res)
    return results


def hessian_sparsity(mesh: Mesh, d: int) -> sp.csr_matrix:
    """Boolean Hessian pattern: node adjacency, d-fold blocks, free dofs only."""
    nv = mesh.dim + 1
    rows = np.repeat(mesh.elems2nodes, nv, axis=1).ravel()
    cols = np.tile(mesh.elems2nodes, (1, nv)).ravel()
    A = sp.coo_matrix(
        (np.ones(rows.size, dtype=bool), (rows, cols)),
        shape=(mesh.nn, mesh.nn),
    ).tocsr()
    A = sp.kron(A, np.ones((d, d), dtype=bool), format="csr")
    A = A[mesh.dofs_minim][:, mesh.dofs_minim]
    A.sum_duplicates()
    return A.astype(bool)


def greedy_coloring(pattern: sp.csr_matrix) -> np.ndarray:
    """Distance-2 greedy coloring of a symmetric sparsity pattern.

    Columns sharing a row get distinct colors, so one differenced gradient
    per color recovers all its Hessian columns.
    """
    conflict = (pattern.T @ pattern).tocsr()
    n = pattern.shape[0]
    colors = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        neigh = conflict.indices[conflict.indptr[i] : conflict.indptr[i + 1]]
        used = set(colors[neigh[neigh < i]].tolist())
        c = 0
        while c in used:
            c += 1
        colors[i] = c
    return colors


def colored_fd_hessian(gx, x, pattern: sp.csr_matrix, step=1e-6) -> sp.csr_matrix:
    """Explicit sparse Hessian by colored forward differences of the gradient.

    Intended for parity experiments on small problems; the trust-region
    solver itself stays Hessian-free.
    """
    colors = greedy_coloring(pattern)
    g0 = gx(x)
    n = x.size
    H = sp.lil_matrix((n, n))
    csc = pattern.tocsc()
    for c in range(colors.max() + 1):
        cols = np.flatnonzero(colors == c)
        xp = x.copy()
        xp[cols] += step
        diff = (gx(xp) - g0) / step
        for col in cols:
            rows = csc.indices[csc.indptr[col] : csc.indptr[col + 1]]
            H[rows, col] = diff[rows]
    H = H.tocsr()
    return (H + H.T) * 0.5
