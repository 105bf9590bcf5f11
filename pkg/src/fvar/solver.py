"""Penalized least squares for the lagged score regression.

Row j of the model solves, over the blocks Psi_jk^(h),

    0.5 || V_j^(0) - sum_h sum_k V_k^(h) Psi_jk^(h) ||_F^2
        + gamma * sum_h sum_k || V_k^(h) Psi_jk^(h) ||_F,

a standardized group lasso.  Internally each predictor block is scaled by
the inverse symmetric square root D^{-1} of its empirical score Gram, which
turns the penalty into a plain Frobenius-norm group penalty on the
standardized coefficients B = D Psi; gamma is therefore expressed in
standardized units throughout, differing from the raw-penalty parameter by
the factor sqrt(n - L) (raw = standardized / sqrt(n - L)).

The solver is a restart-based block FISTA: gradient step, blockwise group
soft-threshold, momentum extrapolation, and a restart that drops the
momentum whenever trace{(X - Xt_new)^T (Xt_new - Xt)} > 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import ConfigError, NumericalError
from .fpca import KLModel

IC_FLOOR = 1e-300


@dataclass
class DesignSet:
    """Lagged score matrices, standardizers and precomputed Gram data."""

    n: int
    L: int
    responses: list            # j -> (n-L, q_j) scores at times L+1..n
    lagged: list               # [h-1][k] -> (n-L, q_k) scores at L+1-h..n-h
    standardizers: list        # [h-1][k] -> (q_k, q_k) symmetric PSD root
    standardizers_inv: list
    design: np.ndarray         # (n-L, r) standardized stacked predictors
    offsets: np.ndarray        # (p*L + 1,) block row offsets
    gram: np.ndarray           # design^T design
    _step: float | None = field(default=None, repr=False)

    @property
    def p(self) -> int:
        return len(self.responses)

    @property
    def n_eff(self) -> int:
        return self.n - self.L

    @property
    def r(self) -> int:
        return self.design.shape[1]

    @property
    def n_blocks(self) -> int:
        return self.offsets.size - 1

    def block(self, h: int, k: int) -> int:
        """Flat block index of lag h (1-based), variable k."""
        return (h - 1) * self.p + k

    def block_sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def step_size(self) -> float:
        """0.9 / lambda_max(design^T design), via power iteration."""
        if self._step is None:
            self._step = 0.9 / _power_lambda_max(self.gram)
        return self._step


@dataclass
class FitResult:
    """One penalized row fit: coefficient blocks and selection summaries."""

    j: int
    gamma: float
    psi: list                  # [h-1][k] -> (q_k, q_j) un-standardized blocks
    coeffs_std: np.ndarray     # (r, q_j) standardized solution
    objective_trace: np.ndarray
    iterations: int
    converged: bool
    rss: float
    vpsi_sq: np.ndarray        # per block ||V Psi||_F^2
    df: float
    aic: float
    bic: float

    def active(self) -> np.ndarray:
        return self.vpsi_sq > 0

    def to_dict(self) -> dict:
        return {
            "j": self.j, "gamma": self.gamma,
            "psi": [[b.tolist() for b in row] for row in self.psi],
            "iterations": self.iterations, "converged": self.converged,
            "rss": self.rss, "df": self.df, "aic": self.aic, "bic": self.bic,
        }


def _power_lambda_max(G: np.ndarray, tol: float = 1e-6, max_iter: int = 5000) -> float:
    r = G.shape[0]
    v = 1.0 + 1e-3 * np.arange(r)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = G @ v
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        if abs(nrm - lam) <= tol * max(nrm, 1e-300):
            return nrm
        lam = nrm
    return lam


def _sym_root_pair(gram_block: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    sym = 0.5 * (gram_block + gram_block.T)
    w, V = np.linalg.eigh(sym)
    if w.min() <= 1e-12 * max(w.max(), 1.0):
        raise NumericalError(
            f"score Gram of variable {k} is singular; use a smaller q for it")
    return (V * np.sqrt(w)) @ V.T, (V * (w ** -0.5)) @ V.T


def build_design(kl_models: list[KLModel], L: int) -> DesignSet:
    """Assemble lagged score matrices and their standardizers.

    Row i (0-based) of the lag-h block of variable k holds the scores at time
    L + i - h, so the response rows (lag 0) align with times L+1..n.
    """
    if L < 1:
        raise ConfigError("lag order must be at least 1")
    n = kl_models[0].n
    if any(m.n != n for m in kl_models):
        raise ConfigError("KL models must share the sample size")
    if n <= L:
        raise ConfigError(f"need more than L={L} observations, got {n}")

    p = len(kl_models)
    scores = [m.scores for m in kl_models]
    responses = [s[L:] for s in scores]
    lagged, roots, roots_inv, cols = [], [], [], []
    n_eff = n - L
    for h in range(1, L + 1):
        row_l, row_r, row_ri = [], [], []
        for k in range(p):
            V = scores[k][L - h: n - h]
            D, Dinv = _sym_root_pair(V.T @ V / n_eff, k)
            row_l.append(V)
            row_r.append(D)
            row_ri.append(Dinv)
            cols.append(V @ Dinv)
        lagged.append(row_l)
        roots.append(row_r)
        roots_inv.append(row_ri)

    design = np.concatenate(cols, axis=1)
    sizes = [c.shape[1] for c in cols]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    gram = design.T @ design
    return DesignSet(n=n, L=L, responses=responses, lagged=lagged,
                     standardizers=roots, standardizers_inv=roots_inv,
                     design=design, offsets=offsets, gram=gram)


def group_soft_threshold(Z: np.ndarray, tau: float, offsets=None) -> np.ndarray:
    """Blockwise (1 - tau/||Z_k||_F)_+ Z_k; a single block when offsets is None."""
    if tau < 0:
        raise ConfigError("threshold must be nonnegative")
    Z = np.asarray(Z, dtype=float)
    if offsets is None:
        offsets = np.array([0, Z.shape[0]], dtype=np.int64)
    out = np.zeros_like(Z)
    for k in range(len(offsets) - 1):
        block = Z[offsets[k]: offsets[k + 1]]
        nrm = np.linalg.norm(block)
        if nrm > tau:
            out[offsets[k]: offsets[k + 1]] = (1.0 - tau / nrm) * block
    return out


@dataclass
class SolveInfo:
    x: np.ndarray
    objective_trace: np.ndarray
    iterations: int
    converged: bool


def block_fista_gram(gram: np.ndarray, hmat: np.ndarray, ynorm_sq: float,
                     offsets: np.ndarray, gamma: float, step: float,
                     tol: float = 1e-8, max_iter: int = 10000,
                     x0: np.ndarray | None = None) -> SolveInfo:
    """Run the FISTA kernel on precomputed Gram data."""
    if gamma < 0:
        raise ConfigError("gamma must be nonnegative")
    if x0 is None:
        x0 = np.zeros_like(hmat)
    x, trace, n_trace, status = _accel.fista_solve(
        np.ascontiguousarray(gram), np.ascontiguousarray(hmat),
        float(ynorm_sq), np.ascontiguousarray(offsets, dtype=np.int64),
        float(gamma), float(step), float(tol), int(max_iter),
        np.ascontiguousarray(x0, dtype=float))
    if status == _accel.FISTA_DIVERGED:
        raise NumericalError("objective diverged; step size too large")
    return SolveInfo(x=x, objective_trace=np.array(trace[:n_trace]),
                     iterations=n_trace - 1,
                     converged=status == _accel.FISTA_CONVERGED)


def block_fista(Y: np.ndarray, B_design: np.ndarray, gamma: float,
                C_step: float | None = None, tol: float = 1e-8,
                max_iter: int = 10000, offsets=None,
                x0: np.ndarray | None = None) -> SolveInfo:
    """Solve min_X 0.5||Y - B X||_F^2 + gamma sum_k ||X_k||_F."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    B = np.asarray(B_design, dtype=float)
    if Y.shape[0] != B.shape[0]:
        raise ConfigError("response and design row counts differ")
    if offsets is None:
        offsets = np.array([0, B.shape[1]], dtype=np.int64)
    gram = B.T @ B
    hmat = B.T @ Y
    if C_step is None:
        C_step = 0.9 / _power_lambda_max(gram)
    return block_fista_gram(gram, hmat, float(np.sum(Y * Y)),
                            np.asarray(offsets, dtype=np.int64), gamma,
                            C_step, tol, max_iter, x0)


def df_from_contributions(vpsi_sq: np.ndarray, group_sizes: np.ndarray,
                          gamma: float) -> float:
    """Effective degrees of freedom: per selected block, one plus the
    shrinkage fraction of the remaining q_j*q_k - 1 parameters."""
    vpsi_sq = np.asarray(vpsi_sq, dtype=float)
    group_sizes = np.asarray(group_sizes, dtype=float)
    active = vpsi_sq > 0
    df = float(active.sum())
    with np.errstate(invalid="ignore"):
        shrink = np.where(active, vpsi_sq / (vpsi_sq + gamma), 0.0)
    df += float(np.sum((group_sizes - 1.0) * shrink))
    return df


def degrees_of_freedom(design: DesignSet, fit: "FitResult", gamma: float) -> float:
    """df of an existing fit at an arbitrary penalty level gamma."""
    q_j = design.responses[fit.j].shape[1]
    sizes = design.block_sizes() * q_j
    return df_from_contributions(fit.vpsi_sq, sizes, gamma)


def observation_count(design: DesignSet, j: int) -> int:
    """Scalar observations in row j's regression: (n - L) * q_j."""
    return design.n_eff * design.responses[j].shape[1]


def information_criterion(design: DesignSet, fit: "FitResult",
                          kappa: float) -> float:
    """N log(RSS) + kappa * df with N the scalar observation count of the
    row regression and the RSS floored away from zero."""
    return (observation_count(design, fit.j) * np.log(max(fit.rss, IC_FLOOR))
            + kappa * fit.df)


def fit_row(j: int, design: DesignSet, gamma: float, tol: float = 1e-8,
            max_iter: int = 10000, x0: np.ndarray | None = None) -> FitResult:
    """Solve row j at the given (standardized-units) gamma and attach the
    selection summaries (df, AIC, BIC).

    The df shrinkage ratio uses the same gamma the solver minimized with;
    the information criteria multiply log(RSS) by the scalar observation
    count (n - L) * q_j of the row regression, with kappa = 2 for AIC and
    log(n) for BIC.
    """
    Y = design.responses[j]
    hmat = design.design.T @ Y
    info = block_fista_gram(design.gram, hmat, float(np.sum(Y * Y)),
                            design.offsets, gamma, design.step_size(),
                            tol, max_iter, x0)
    X = info.x
    n_eff = design.n_eff
    q_j = Y.shape[1]

    psi, vpsi_sq = [], []
    for h in range(1, design.L + 1):
        row = []
        for k in range(design.p):
            b = design.block(h, k)
            Xb = X[design.offsets[b]: design.offsets[b + 1]]
            row.append(design.standardizers_inv[h - 1][k] @ Xb)
            vpsi_sq.append(n_eff * float(np.sum(Xb * Xb)))
        psi.append(row)
    vpsi_sq = np.asarray(vpsi_sq)

    resid = Y - design.design @ X
    rss = float(np.sum(resid * resid))
    df = df_from_contributions(vpsi_sq, design.block_sizes() * q_j, gamma)
    n_obs = n_eff * q_j
    aic = n_obs * np.log(max(rss, IC_FLOOR)) + 2.0 * df
    bic = n_obs * np.log(max(rss, IC_FLOOR)) + np.log(design.n) * df
    return FitResult(j=j, gamma=gamma, psi=psi, coeffs_std=X,
                     objective_trace=info.objective_trace,
                     iterations=info.iterations, converged=info.converged,
                     rss=rss, vpsi_sq=vpsi_sq, df=df, aic=aic, bic=bic)


def gamma_max(design: DesignSet, j: int) -> float:
    """Smallest gamma at which the all-zero solution is optimal (padded by a
    1e-10 relative margin so the boundary survives floating-point rounding)."""
    hmat = design.design.T @ design.responses[j]
    top = max(
        float(np.linalg.norm(hmat[design.offsets[k]: design.offsets[k + 1]]))
        for k in range(design.n_blocks))
    return top * (1.0 + 1e-10)


def default_gamma_grid(design: DesignSet, j: int, n_gammas: int = 50,
                       min_ratio: float = 1e-3) -> np.ndarray:
    top = gamma_max(design, j)
    if top <= 0:
        return np.zeros(1)
    return np.geomspace(top, top * min_ratio, n_gammas)


def regularization_path(design: DesignSet, j: int, gamma_grid=None,
                        n_gammas: int = 50, min_ratio: float = 1e-3,
                        warm_start: bool = True, tol: float = 1e-8,
                        max_iter: int = 10000) -> list[FitResult]:
    """Fits along a descending gamma grid, warm-starting by default."""
    if gamma_grid is None:
        gamma_grid = default_gamma_grid(design, j, n_gammas, min_ratio)
    gamma_grid = np.asarray(gamma_grid, dtype=float)
    if np.any(np.diff(gamma_grid) > 0):
        raise ConfigError("gamma grid must be nonincreasing")
    fits = []
    x0 = None
    for gamma in gamma_grid:
        fit = fit_row(j, design, float(gamma), tol=tol, max_iter=max_iter, x0=x0)
        fits.append(fit)
        if warm_start:
            x0 = fit.coeffs_std
    return fits


def select_gamma(design: DesignSet, j: int, criterion: str = "bic",
                 gamma_grid=None, n_gammas: int = 50, min_ratio: float = 1e-3,
                 tol: float = 1e-8, max_iter: int = 10000):
    """Minimize AIC or BIC along the path; returns (best fit, path)."""
    if criterion not in ("aic", "bic"):
        raise ConfigError("criterion must be 'aic' or 'bic'")
    path = regularization_path(design, j, gamma_grid=gamma_grid,
                               n_gammas=n_gammas, min_ratio=min_ratio,
                               tol=tol, max_iter=max_iter)
    values = [getattr(f, criterion) for f in path]
    return path[int(np.argmin(values))], path


def kkt_residuals(design: DesignSet, fit: FitResult) -> tuple[float, float]:
    """Optimality certificate in standardized coordinates.

    Returns (worst zero-block excess ||grad_k|| - gamma, worst active-block
    stationarity norm ||grad_k + gamma X_k / ||X_k|| ||).
    """
    X = fit.coeffs_std
    grad = design.gram @ X - design.design.T @ design.responses[fit.j]
    zero_excess = 0.0
    active_res = 0.0
    for k in range(design.n_blocks):
        gb = grad[design.offsets[k]: design.offsets[k + 1]]
        xb = X[design.offsets[k]: design.offsets[k + 1]]
        nx = np.linalg.norm(xb)
        if nx == 0.0:
            zero_excess = max(zero_excess, np.linalg.norm(gb) - fit.gamma)
        else:
            active_res = max(active_res,
                             float(np.linalg.norm(gb + fit.gamma * xb / nx)))
    return zero_excess, active_res


@dataclass
class KernelEstimate:
    """Estimated transition kernels in the eigenfunction bases.

    ``psi[h-1][j][k]`` is the (q_k, q_j) block of row j; the kernel is
    A_jk^(h)(u, v) = phi_k(v)^T Psi_jk^(h) phi_j(u).
    """

    L: int
    kl_models: list
    psi: list
    hs: np.ndarray  # (L, p, p)

    @property
    def p(self) -> int:
        return len(self.kl_models)

    def evaluate(self, h: int, j: int, k: int, u, v) -> np.ndarray:
        phi_j = self.kl_models[j].eigenfunctions(u)
        phi_k = self.kl_models[k].eigenfunctions(v)
        return phi_j @ self.psi[h - 1][j][k].T @ phi_k.T

    def hs_norms(self) -> np.ndarray:
        return self.hs

    def support(self) -> np.ndarray:
        return (self.hs > 0).any(axis=0)

    def edge_weights(self) -> np.ndarray:
        """(p, p) matrix of max-over-lag Hilbert-Schmidt norms."""
        return self.hs.max(axis=0)

    def to_json(self) -> str:
        return json.dumps({
            "L": self.L,
            "kl_models": [m.to_dict() for m in self.kl_models],
            "psi": [[[b.tolist() for b in row] for row in lag] for lag in self.psi],
        })

    @classmethod
    def from_json(cls, text: str) -> "KernelEstimate":
        obj = json.loads(text)
        kl_models = [KLModel.from_dict(d) for d in obj["kl_models"]]
        psi = [[[np.asarray(b, dtype=float) for b in row] for row in lag]
               for lag in obj["psi"]]
        return _kernel_estimate(int(obj["L"]), kl_models, psi)


def _kernel_estimate(L: int, kl_models: list, psi: list) -> KernelEstimate:
    p = len(kl_models)
    hs = np.zeros((L, p, p))
    for h in range(L):
        for j in range(p):
            for k in range(p):
                hs[h, j, k] = np.linalg.norm(psi[h][j][k])
    return KernelEstimate(L=L, kl_models=kl_models, psi=psi, hs=hs)


def recover_kernels(fits: list[FitResult], kl_models: list[KLModel]) -> KernelEstimate:
    """Assemble the functional estimates from the p row fits."""
    if len(fits) != len(kl_models):
        raise ConfigError("need one fit per variable")
    by_j = sorted(fits, key=lambda f: f.j)
    L = len(by_j[0].psi)
    psi = [[by_j[j].psi[h] for j in range(len(by_j))] for h in range(L)]
    return _kernel_estimate(L, kl_models, psi)
