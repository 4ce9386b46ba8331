"""
Parameter estimation for harmonic and comparison covariance models.

Weighted least squares
    Records from :mod:`axisym.variogram` are matched at first latitude
    ``L0 + 1/2``, second latitude ``L0 + 1/2 - mean_dlat`` and lon lag
    ``mean_dlon`` (offsets are first minus second). On the real basis,
    ``gamma = 0.5 (u1 - u2)^T Sigma (u1 - u2) + nugget``, so the criterion
    is linear in the block entries and quadratic in the Cholesky factors.

Likelihood
    Observations are mean-zero Gaussian with covariance
    ``nugget * I + B Sigma B^T``, ``B`` the real basis at the points. With
    ``Sigma = M M^T``, the Woodbury identity reduces every likelihood or
    kriging solve to one ``(N+1)^2`` Cholesky factorization of
    ``H = nugget * I + M^T (B^T B) M``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

from .covariance import (
    BlockModel, ExpChordalModel, HarmonicCovariance, ParamLayout, assemble_blocks,
    block_dims, drop_y00, factor_embedding, gamma_model, model_from_blocks, sigma_from_blocks,
    y00_keys,
)
from .geom import as_table, central_angle_deg, chordal_distance_arr, chordal_matrix
from .harmonics import basis_size, basis_slices, real_basis

LOG2PI = np.log(2 * np.pi)


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class OptimizerConfig:
    max_iter: int = 2000
    gtol: float = 1e-6
    ftol: float = 1e-10


@dataclass
class FitResult:
    model: object
    value: float
    trace: list
    converged: bool
    message: str
    n_iter: int
    n_free: int
    frozen: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        from .covariance import model_to_dict
        return {
            "model": model_to_dict(self.model),
            "value": self.value,
            "trace": list(map(float, self.trace)),
            "converged": self.converged,
            "message": self.message,
            "n_iter": self.n_iter,
            "n_free": self.n_free,
            "frozen": [list(k) for k in self.frozen],
            **self.extra,
        }


def _run_lbfgs(fun, x0, bounds, cfg: OptimizerConfig):
    trace = []

    def cb(intermediate_result):
        trace.append(float(intermediate_result.fun))

    f0 = fun(x0)[0]
    res = minimize(fun, x0, jac=True, method="L-BFGS-B", bounds=bounds, callback=cb,
                   options={"maxiter": cfg.max_iter, "gtol": cfg.gtol,
                            "ftol": cfg.ftol, "maxcor": 20})
    x, f = res.x, float(res.fun)
    if not f <= f0:
        x, f = x0, f0
    trace = [f0] + trace
    # accepted iterates only; a final rejected step never enters the trace
    mono = [trace[0]]
    for v in trace[1:]:
        if v <= mono[-1]:
            mono.append(v)
    return x, f, mono, bool(res.success), str(res.message), int(res.nit)


# --- weighted least squares -------------------------------------------------


def record_points(records):
    """First/second latitude and lon lag at which each record is matched."""
    L0 = np.array([r.L0 for r in records], dtype=float)
    L1 = L0 + 0.5
    L2 = np.clip(L1 - np.array([r.mean_dlat for r in records]), -90.0, 90.0)
    dl = np.array([r.mean_dlon for r in records], dtype=float)
    return L1, L2, dl


def wls_weights(records, lat_bin=1.0, lon_bin=1.0):
    """Pair count divided by (bin-center angle in degrees + 1).

    Bin centers are ``(L0 + 1/2, 0)`` and ``(L0 + 1/2 - (j + 1/2), k + 1/2)``
    in units of the bin sizes.
    """
    c1 = np.array([r.L0 + 0.5 for r in records])
    c2 = np.clip(c1 - np.array([(r.j + 0.5) * lat_bin for r in records]), -90.0, 90.0)
    lon2 = np.array([(r.k + 0.5) * lon_bin for r in records])
    angle = central_angle_deg(c1, np.zeros_like(c1), c2, lon2)
    counts = np.array([r.count for r in records], dtype=float)
    return counts / (np.asarray(angle) + 1.0)


@dataclass
class WlsProblem:
    """Records, weights, truncation and the identifiability mask.

    ``freeze_y00`` freezes var Y00 and cov(Y00, Yn0): in factor form the
    first column of ``A_0`` (N + 1 entries).
    """

    records: list
    weights: np.ndarray
    N: int
    freeze_y00: bool = True

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (len(self.records),):
            raise ValueError("one weight per record required")
        if np.any(~(self.weights > 0)):
            raise ValueError("weights must be positive")
        L1, L2, dl = record_points(self.records)
        self.gamma_hat = np.array([r.gamma_hat for r in self.records], dtype=float)
        self.D = real_basis(self.N, L1, dl) - real_basis(self.N, L2, np.zeros_like(L2))
        self.distinct = ~((L1 == L2) & (dl == 0.0))

    @classmethod
    def build(cls, records, N, weights=None, freeze_y00=True):
        return cls(list(records), wls_weights(records) if weights is None else weights, N,
                   freeze_y00)

    @property
    def mask(self):
        return y00_keys(self.N) if self.freeze_y00 else frozenset()

    @property
    def layout(self):
        return ParamLayout(self.N, self.mask)

    def gamma(self, model):
        S = sigma_from_blocks(self.N, assemble_blocks(model))
        return 0.5 * np.einsum("ri,ij,rj->r", self.D, S, self.D) + model.nugget * self.distinct


def wls_criterion(model, problem: WlsProblem) -> float:
    """``sum w (gamma_hat - gamma_model)^2`` over the problem's records."""
    if model.N != problem.N:
        raise ValueError("model and problem truncation differ")
    e = problem.gamma_hat - problem.gamma(model)
    return float(np.sum(problem.weights * e * e))


def _linear_columns(problem: WlsProblem):
    """Design columns: one per real parameter of the Hermitian blocks.

    Returns the column matrix and a list of ``(m, n, n', part)`` labels with
    block-local indices; part 're' or 'im'. The nugget is the last column.
    """
    N = problem.N
    D = problem.D
    cols, labels = [], []
    for m, (start, d) in enumerate(basis_slices(N)):
        if m == 0:
            Dm = D[:, start : start + d]
            for a in range(d):
                for b in range(a, d):
                    if problem.freeze_y00 and a == 0:
                        continue
                    if a == b:
                        cols.append(0.5 * Dm[:, a] ** 2)
                    else:
                        cols.append(Dm[:, a] * Dm[:, b])
                    labels.append((0, a, b, "re"))
        else:
            Dc = D[:, start : start + d]
            Ds = D[:, start + d : start + 2 * d]
            for a in range(d):
                for b in range(a, d):
                    # Re c(a,b): R[a,b] = R[b,a] in both diagonal sub-blocks
                    if a == b:
                        cols.append(0.5 * (Dc[:, a] ** 2 + Ds[:, a] ** 2))
                    else:
                        cols.append(Dc[:, a] * Dc[:, b] + Ds[:, a] * Ds[:, b])
                    labels.append((m, a, b, "re"))
                    if a != b:
                        # Im c(a,b) = v: I[a,b] = v, I[b,a] = -v in [[R, I], [-I, R]]
                        cols.append(Dc[:, a] * Ds[:, b] - Dc[:, b] * Ds[:, a])
                        labels.append((m, a, b, "im"))
    cols.append(problem.distinct.astype(float))
    labels.append("nugget")
    return np.column_stack(cols), labels


@dataclass
class LinearWlsResult:
    blocks: BlockModel
    criterion: float
    min_eigenvalues: list
    rank: int
    n_params: int
    degenerate: bool
    condition: float = 1.0


def wls_fit_linear(problem: WlsProblem, rcond=None) -> LinearWlsResult:
    """Closed-form minimizer over unconstrained Hermitian blocks and nugget.

    Masked C_0 entries (row/column of Y00) stay zero. When the system is
    rank deficient the minimum-norm solution is returned and ``degenerate``
    is set; ``condition`` is that of the column-equilibrated design. ``min_eigenvalues[m]`` is the smallest eigenvalue of the
    estimated block (masked rows excluded for m = 0).
    """
    X, labels = _linear_columns(problem)
    sw = np.sqrt(problem.weights)
    Xw = X * sw[:, None]
    # equilibrate columns; degree-7 and nugget columns differ by orders of magnitude
    cn = np.linalg.norm(Xw, axis=0)
    cn[cn == 0] = 1.0
    coef, _, rank, sv = np.linalg.lstsq(Xw / cn, problem.gamma_hat * sw, rcond=rcond)
    coef = coef / cn
    N = problem.N
    C = [np.zeros((d, d), dtype=float if m == 0 else complex)
         for m, d in enumerate(block_dims(N))]
    nugget = 0.0
    for v, lab in zip(coef, labels):
        if lab == "nugget":
            nugget = float(v)
            continue
        m, a, b, part = lab
        if part == "re":
            C[m][a, b] += v
            if a != b:
                C[m][b, a] += v
        else:
            C[m][a, b] += 1j * v
            C[m][b, a] -= 1j * v
    blocks = BlockModel(N, tuple(C), nugget)
    mins = []
    for m, c in enumerate(C):
        sub = c[1:, 1:] if (m == 0 and problem.freeze_y00) else c
        mins.append(float(np.linalg.eigvalsh(sub)[0]) if sub.size else 0.0)
    e = problem.gamma_hat - X @ coef
    crit = float(np.sum(problem.weights * e * e))
    cond = float(sv[0] / sv[-1]) if sv.size and sv[-1] > 0 else np.inf
    return LinearWlsResult(blocks, crit, mins, int(rank), X.shape[1], int(rank) < X.shape[1], cond)


def wls_fit_psd(problem: WlsProblem, init: HarmonicCovariance | None = None,
                config: OptimizerConfig | None = None) -> FitResult:
    """Local minimizer of the criterion over Cholesky factors and nugget >= 0.

    Diagonal entries are unconstrained in sign. Without ``init`` the start is
    the linear solution projected onto PSD blocks. With ``freeze_y00`` the
    start is first rewritten with a zero first column in ``A_0`` (same
    variogram), and those entries never move.
    """
    cfg = config or OptimizerConfig()
    if init is None:
        lin = wls_fit_linear(problem)
        init = model_from_blocks(problem.N, lin.blocks.C, lin.blocks.nugget)
    if init.N != problem.N:
        raise ValueError("init truncation differs from the problem")
    if problem.freeze_y00:
        init = drop_y00(init)
    layout = problem.layout
    J = layout.embedding_jacobian()
    r = basis_size(problem.N)
    w = problem.weights
    g_scale = float(np.sum(w * problem.gamma_hat) / np.sum(w)) or 1.0
    a_scale = np.sqrt(g_scale)
    f_scale = float(np.sum(w)) * g_scale ** 2
    D = problem.D
    base = init

    def fun(x):
        theta = x[:-1] * a_scale
        nug = x[-1] * g_scale
        M = (J @ theta).reshape(r, r)
        DM = D @ M
        gam = 0.5 * np.sum(DM * DM, axis=1) + nug * problem.distinct
        e = problem.gamma_hat - gam
        f = np.sum(w * e * e)
        we = w * e
        GM = -2.0 * (D.T @ (we[:, None] * DM))
        gtheta = J.T @ GM.ravel()
        gnug = -2.0 * np.sum(we * problem.distinct)
        grad = np.r_[gtheta * a_scale, gnug * g_scale] / f_scale
        return f / f_scale, grad

    x0 = np.r_[layout.get(base) / a_scale, base.nugget / g_scale]
    bounds = [(None, None)] * (x0.size - 1) + [(0.0, None)]
    x, f, trace, ok, msg, nit = _run_lbfgs(fun, x0, bounds, cfg)
    model = layout.put(x[:-1] * a_scale, base, nugget=max(x[-1] * g_scale, 0.0))
    if not ok:
        warnings.warn(f"wls_fit_psd did not converge: {msg}", ConvergenceWarning, stacklevel=2)
    return FitResult(model, wls_criterion(model, problem), [t * f_scale for t in trace], ok, msg,
                     nit, layout.n_free, sorted(problem.mask))


# --- likelihoods ------------------------------------------------------------


class FactorizationError(np.linalg.LinAlgError):
    pass


def loglik_dense(cov, values) -> float:
    """Zero-mean Gaussian log-likelihood by direct Cholesky factorization."""
    cov = np.asarray(cov, dtype=float)
    z = np.asarray(values, dtype=float)
    try:
        c, low = scipy.linalg.cho_factor(cov, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"covariance is not positive definite: {exc}") from None
    alpha = scipy.linalg.cho_solve((c, low), z)
    logdet = 2.0 * np.sum(np.log(np.diag(c)))
    return float(-0.5 * (z.size * LOG2PI + logdet + z @ alpha))


def harmonic_cov_matrix(model: HarmonicCovariance, obs):
    """Dense ``[K(p_i, p_j)] + nugget * I`` (nugget on the diagonal only)."""
    obs = as_table(obs)
    B = real_basis(model.N, obs.lat, obs.lon)
    S = sigma_from_blocks(model.N, assemble_blocks(model))
    C = B @ S @ B.T
    C = 0.5 * (C + C.T)
    C[np.diag_indices_from(C)] += model.nugget
    return C


def exp_cov_matrix(model: ExpChordalModel, obs, obs2=None):
    """Dense exponential-in-chord covariance; nugget on the diagonal of C(obs, obs)."""
    obs = as_table(obs)
    if obs2 is None:
        d = chordal_matrix(obs.lat, obs.lon)
        C = model.theta1 * np.exp(-d / model.theta2)
        C[np.diag_indices_from(C)] += model.nugget
        return C
    obs2 = as_table(obs2)
    return model.theta1 * np.exp(-chordal_matrix(obs.lat, obs.lon, obs2.lat, obs2.lon) / model.theta2)


class LowRankGaussian:
    """Precomputed pieces for ``nugget * I + B Sigma B^T`` likelihoods.

    ``B^T B``, ``B^T z`` and ``z^T z`` are computed once (``O(s r^2)``), after
    which each evaluation costs one ``r x r`` Cholesky factorization.
    """

    def __init__(self, N, obs, table=None):
        obs = as_table(obs)
        self.N = N
        self.s = len(obs)
        self.z = np.asarray(obs.value, dtype=float)
        self.B = real_basis(N, obs.lat, obs.lon, table)
        self.S = self.B.T @ self.B
        self.b = self.B.T @ self.z
        self.zz = float(self.z @ self.z)

    def _factor(self, M, nugget):
        if not nugget > 0:
            raise ValueError("low-rank likelihood requires nugget > 0")
        G = M.T @ self.S @ M
        G = 0.5 * (G + G.T)
        H = G + nugget * np.eye(G.shape[0])
        cf = scipy.linalg.cho_factor(H, lower=True)
        return G, cf

    def loglik(self, M, nugget):
        G, cf = self._factor(M, nugget)
        c = M.T @ self.b
        u = scipy.linalg.cho_solve(cf, c)
        r = G.shape[0]
        logdet = (self.s - r) * np.log(nugget) + 2.0 * np.sum(np.log(np.diag(cf[0])))
        quad = (self.zz - c @ u) / nugget
        return float(-0.5 * (self.s * LOG2PI + logdet + quad))

    def loglik_grad(self, M, nugget):
        """Log-likelihood and its gradients with respect to ``M`` and the nugget."""
        G, cf = self._factor(M, nugget)
        r = G.shape[0]
        c = M.T @ self.b
        u = scipy.linalg.cho_solve(cf, c)
        logdet = (self.s - r) * np.log(nugget) + 2.0 * np.sum(np.log(np.diag(cf[0])))
        quad = (self.zz - c @ u) / nugget
        ll = -0.5 * (self.s * LOG2PI + logdet + quad)
        SM = self.S @ M
        w = (self.b - SM @ u) / nugget  # B^T V^-1 z
        HinvMtS = scipy.linalg.cho_solve(cf, SM.T)
        Q = (self.S - SM @ HinvMtS) / nugget  # B^T V^-1 B
        Dsig = 0.5 * (np.outer(w, w) - Q)
        gM = 2.0 * Dsig @ M
        vz2 = (self.zz - 2.0 * c @ u + u @ G @ u) / nugget ** 2
        trG = np.trace(scipy.linalg.cho_solve(cf, G))
        trVinv = (self.s - trG) / nugget
        gnug = 0.5 * (vz2 - trVinv)
        return float(ll), gM, float(gnug)


def loglik_lowrank(model: HarmonicCovariance, obs, table=None) -> float:
    """Exact Gaussian log-likelihood of residuals via the low-rank structure."""
    if not model.nugget > 0:
        raise ValueError("low-rank likelihood requires nugget > 0")
    return LowRankGaussian(model.N, obs, table).loglik(factor_embedding(model), model.nugget)


def loglik_exp(model: ExpChordalModel, obs) -> float:
    return loglik_dense(exp_cov_matrix(model, obs), as_table(obs).value)


def mle_white_noise(obs) -> float:
    """Uncentered mean square: the white-noise variance MLE under mean zero."""
    z = as_table(obs).value
    if z.size < 1:
        raise ValueError("need at least one observation")
    return float(np.mean(z * z))


def loglik_white_noise(obs, variance=None) -> float:
    z = as_table(obs).value
    v = mle_white_noise(obs) if variance is None else float(variance)
    return float(-0.5 * (z.size * np.log(2 * np.pi * v) + z @ z / v))


def mle_exp_nugget(obs, init: ExpChordalModel | None = None,
                   config: OptimizerConfig | None = None) -> FitResult:
    """Maximum likelihood for nugget + ``theta1 exp(-d/theta2)`` (dense).

    Optimizes on the log scale of all three parameters. Without ``init``,
    three range starts (0.05, 0.2 and 1 times the median pairwise chord) are
    tried. The white-noise model (``theta1 = 0``) is nested; if no start
    beats it, it is returned.
    """
    cfg = config or OptimizerConfig(max_iter=500)
    obs = as_table(obs)
    if len(obs) < 3:
        raise ValueError("need at least 3 observations")
    z = obs.value
    d = chordal_matrix(obs.lat, obs.lon)
    v = mle_white_noise(obs)
    eye = np.eye(z.size)

    def fun(x):
        t1, t2, nug = np.exp(x)
        E = np.exp(-d / t2)
        V = t1 * E + nug * eye
        try:
            c = scipy.linalg.cho_factor(V, lower=True)
        except np.linalg.LinAlgError:
            return np.inf, np.zeros(3)
        alpha = scipy.linalg.cho_solve(c, z)
        Vinv = scipy.linalg.cho_solve(c, eye)
        ll = -0.5 * (z.size * LOG2PI + 2 * np.sum(np.log(np.diag(c[0]))) + z @ alpha)
        W = np.outer(alpha, alpha) - Vinv
        dV1 = t1 * E
        dV2 = t1 * E * d / t2
        g = 0.5 * np.array([np.sum(W * dV1), np.sum(W * dV2), nug * np.trace(W)])
        return -ll / z.size, -g / z.size

    if init is None:
        med = float(np.median(d[np.triu_indices_from(d, 1)]))
        starts = [np.log([0.5 * v, f * med, 0.5 * v]) for f in (0.05, 0.2, 1.0)]
    else:
        starts = [np.log([max(init.theta1, 1e-12 * v), init.theta2, max(init.nugget, 1e-12 * v)])]
    best = None
    for x0 in starts:
        x, f, trace, ok, msg, nit = _run_lbfgs(fun, x0, [(None, None)] * 3, cfg)
        if best is None or f < best[1]:
            best = (x, f, trace, ok, msg, nit)
    x, f, trace, ok, msg, nit = best
    t1, t2, nug = np.exp(x)
    model = ExpChordalModel(float(t1), float(t2), float(nug))
    ll = loglik_exp(model, obs)
    ll_wn = loglik_white_noise(obs)
    if not ll >= ll_wn:
        model, ll = ExpChordalModel(0.0, float(t2), v), ll_wn
    if not ok:
        warnings.warn(f"mle_exp_nugget did not converge: {msg}", ConvergenceWarning, stacklevel=2)
    return FitResult(model, ll, [-t * z.size for t in trace], ok, msg, nit, 3,
                     extra={"loglik_white_noise": ll_wn})


def default_harmonic_init(N, obs) -> HarmonicCovariance:
    """Isotropic-looking start: half the mean square in the continuous part."""
    v = mle_white_noise(obs)
    c = np.sqrt(v) / (N + 1)
    A = [c * np.eye(d, dtype=float if m == 0 else complex) for m, d in enumerate(block_dims(N))]
    return HarmonicCovariance(N, A, 0.5 * v)


def mle_harmonic(obs, N: int, init: HarmonicCovariance | None = None, freeze_y00: bool = False,
                 table=None, config: OptimizerConfig | None = None) -> FitResult:
    """Maximum likelihood over the Cholesky factors and log-nugget.

    With ``freeze_y00`` the first column of ``A_0`` is held at its initial
    value (zero it first with :func:`axisym.covariance.zero_y00` to mirror
    setting those entries to 0). The all-zero model with the white-noise
    nugget is nested and returned if the optimum does not beat it.
    """
    cfg = config or OptimizerConfig(max_iter=1000)
    obs = as_table(obs)
    init = default_harmonic_init(N, obs) if init is None else init
    if init.N != N:
        raise ValueError("init truncation differs from N")
    if not init.nugget > 0:
        raise ValueError("init nugget must be > 0")
    lr = LowRankGaussian(N, obs, table)
    layout = ParamLayout(N, y00_keys(N) if freeze_y00 else frozenset())
    J = layout.embedding_jacobian()
    r = basis_size(N)
    v = mle_white_noise(obs)
    a_scale = np.sqrt(v)
    M_fixed = factor_embedding(layout.put(np.zeros(len(layout.free_keys)), init))
    s = lr.s

    def fun(x):
        theta = x[:-1] * a_scale
        nug = np.exp(x[-1])
        M = M_fixed + (J @ theta).reshape(r, r)
        try:
            ll, gM, gn = lr.loglik_grad(M, nug)
        except np.linalg.LinAlgError:
            return np.inf, np.zeros_like(x)
        g = np.r_[(J.T @ gM.ravel()) * a_scale, gn * nug]
        return -ll / s, -g / s

    x0 = np.r_[layout.get(init) / a_scale, np.log(init.nugget)]
    x, f, trace, ok, msg, nit = _run_lbfgs(fun, x0, [(None, None)] * x0.size, cfg)
    model = layout.put(x[:-1] * a_scale, init, nugget=float(np.exp(x[-1])))
    ll = lr.loglik(factor_embedding(model), model.nugget)
    ll_wn = loglik_white_noise(obs)
    if not ll >= ll_wn:
        model, ll = HarmonicCovariance.zeros(N, v), ll_wn
    if not ok:
        warnings.warn(f"mle_harmonic did not converge: {msg}", ConvergenceWarning, stacklevel=2)
    return FitResult(model, ll, [-t * s for t in trace], ok, msg, nit, layout.n_free,
                     sorted(layout.frozen), extra={"loglik_white_noise": ll_wn})


# --- model variogram on the record grid ------------------------------------

GAMMA_GRID_COLUMNS = ("L0", "j", "k", "dlat", "dlon", "gamma_model")


def gamma_grid(model, L0s, j_range=(-9, 9), k_range=(-20, 20)):
    """Model semivariance at bin centers, matched like a record.

    Rows ``(L0, j, k, dlat, dlon, gamma)`` with ``dlat = j + 1/2`` and
    ``dlon = k + 1/2``, first latitude ``L0 + 1/2``; contour-ready alongside
    the empirical table.
    """
    L0, j, k = np.meshgrid(np.asarray(L0s, float), np.arange(*j_range), np.arange(*k_range),
                           indexing="ij")
    L0, j, k = L0.ravel(), j.ravel(), k.ravel()
    L1 = L0 + 0.5
    L2 = np.clip(L1 - (j + 0.5), -90.0, 90.0)
    g = np.atleast_1d(gamma_model_of(model, L1, L2, k + 0.5))
    return [(float(a), int(b), int(c), float(b) + 0.5, float(c) + 0.5, float(v))
            for a, b, c, v in zip(L0, j, k, g)]


def gamma_model_of(model, L1, L2, dl):
    """:func:`gamma_model` for harmonic models; exponential models by chord length."""
    if isinstance(model, ExpChordalModel):
        d = chordal_distance_arr(L1, np.zeros_like(L1), L2, -np.asarray(dl, float))
        g = model.theta1 * (1.0 - np.exp(-d / model.theta2))
        return g + model.nugget * (d > 0)
    return gamma_model(model, L1, L2, dl)


def write_gamma_grid(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(GAMMA_GRID_COLUMNS)
        for r in rows:
            w.writerow([repr(r[0]), r[1], r[2], repr(r[3]), repr(r[4]), repr(r[5])])
