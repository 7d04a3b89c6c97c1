"""Infinite Gaussian mixture over segment descriptors.

Collapsed Gibbs sampling of a Dirichlet-process mixture of Gaussians
with a conjugate normal-inverse-Wishart base measure: mixture weights
and component parameters are integrated out, so the sampler state is
just the assignment vector plus per-cluster sufficient statistics, and
each observation is resampled from

    P(c_i = k | rest) propto N_{-i,k} * t_k(x_i)        existing cluster
    P(c_i = new | rest) propto alpha * t_0(x_i)          new cluster

where t_k is the Student-t posterior predictive of cluster k and t_0 the
prior predictive. The returned state is the best-scoring one seen after
burn-in (the initial state is kept as a fallback candidate, so the
result never scores below the start).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, multigammaln

from .errors import DataError, NumericalError


@dataclass(frozen=True)
class NiwPrior:
    """Conjugate prior over a Gaussian's mean and covariance.

    mu0: prior mean; kappa0: pseudo-observation count for the mean;
    nu0: degrees of freedom (>= dimension); lambda0: SPD scale matrix.
    """

    mu0: np.ndarray
    kappa0: float
    nu0: float
    lambda0: np.ndarray

    def __post_init__(self):
        mu0 = np.asarray(self.mu0, dtype=np.float64)
        lam = np.asarray(self.lambda0, dtype=np.float64)
        d = mu0.shape[0]
        if mu0.ndim != 1 or lam.shape != (d, d):
            raise DataError("prior shapes inconsistent: mu0 "
                            f"{mu0.shape}, lambda0 {lam.shape}")
        if self.kappa0 <= 0:
            raise DataError("kappa0 must be > 0")
        if self.nu0 < d:
            raise DataError(f"nu0 must be >= dimension ({d}), got {self.nu0}")
        if not np.allclose(lam, lam.T):
            raise DataError("lambda0 must be symmetric")
        try:
            np.linalg.cholesky(lam)
        except np.linalg.LinAlgError:
            raise DataError("lambda0 must be positive definite") from None
        mu0.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "lambda0", lam)

    @property
    def dim(self) -> int:
        return self.mu0.shape[0]


def default_prior(X: np.ndarray, kappa0: float = 1.0, nu0_extra: float = 2.0,
                  scale: float = 1.0, var_floor: float = 1e-6) -> NiwPrior:
    """Weakly informative data-driven prior: mean at the data mean,
    nu0 = d + nu0_extra, scale matrix from the per-dimension variances."""
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    var = X.var(axis=0, ddof=1) if X.shape[0] > 1 else np.ones(d)
    var = np.maximum(var, var_floor)
    return NiwPrior(mu0=X.mean(axis=0), kappa0=kappa0, nu0=d + nu0_extra,
                    lambda0=np.diag(scale * var))


@dataclass(frozen=True)
class AlphaConfig:
    """Concentration parameter handling: fixed by default, optionally
    resampled per sweep with a Gamma(shape, rate) prior via a lognormal
    Metropolis step."""

    value: float = 1.0
    resample: bool = False
    gamma_shape: float = 1.0
    gamma_rate: float = 1.0
    proposal_scale: float = 0.5

    def __post_init__(self):
        if self.value <= 0:
            raise DataError("alpha must be > 0")
        if self.gamma_shape <= 0 or self.gamma_rate <= 0:
            raise DataError("gamma prior parameters must be > 0")


# ---------------------------------------------------------------------------
# Student-t machinery

def _t_logpdf(x: np.ndarray, mean: np.ndarray, chol: np.ndarray,
              dof: float) -> float:
    """Multivariate Student-t log density from a Cholesky factor of the
    scale matrix; x may be a single vector or (N, d)."""
    d = mean.shape[0]
    dev = np.atleast_2d(x) - mean
    sol = np.linalg.solve(chol, dev.T)
    maha = (sol * sol).sum(axis=0)
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    norm = (gammaln(0.5 * (dof + d)) - gammaln(0.5 * dof)
            - 0.5 * d * math.log(dof * math.pi) - 0.5 * logdet)
    out = norm - 0.5 * (dof + d) * np.log1p(maha / dof)
    return float(out[0]) if np.ndim(x) == 1 else out


def _posterior_t_params(prior: NiwPrior, n: int, s: np.ndarray,
                        ss: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Predictive Student-t (mean, scale Cholesky, dof) for a cluster with
    sufficient statistics (count n, sum s, sum of outer products ss)."""
    d = prior.dim
    kappa_n = prior.kappa0 + n
    nu_n = prior.nu0 + n
    if n == 0:
        mu_n = prior.mu0
        lam_n = prior.lambda0
    else:
        xbar = s / n
        mu_n = (prior.kappa0 * prior.mu0 + s) / kappa_n
        dev = xbar - prior.mu0
        lam_n = (prior.lambda0 + ss - n * np.outer(xbar, xbar)
                 + (prior.kappa0 * n / kappa_n) * np.outer(dev, dev))
        lam_n = 0.5 * (lam_n + lam_n.T)
    dof = nu_n - d + 1
    scale = lam_n * (kappa_n + 1.0) / (kappa_n * dof)
    try:
        chol = np.linalg.cholesky(scale)
    except np.linalg.LinAlgError:
        eig = np.linalg.eigvalsh(scale)
        raise NumericalError(
            "posterior scale matrix not positive definite "
            f"(n={n}, eigenvalue range [{eig.min():.3e}, {eig.max():.3e}])"
        ) from None
    return mu_n, chol, dof


def _cluster_marginal_loglik(prior: NiwPrior, n: int, s: np.ndarray,
                             ss: np.ndarray) -> float:
    """Log marginal likelihood of one cluster's data under the prior."""
    if n == 0:
        return 0.0
    d = prior.dim
    kappa_n = prior.kappa0 + n
    nu_n = prior.nu0 + n
    xbar = s / n
    dev = xbar - prior.mu0
    lam_n = (prior.lambda0 + ss - n * np.outer(xbar, xbar)
             + (prior.kappa0 * n / kappa_n) * np.outer(dev, dev))
    lam_n = 0.5 * (lam_n + lam_n.T)
    sign0, logdet0 = np.linalg.slogdet(prior.lambda0)
    sign_n, logdet_n = np.linalg.slogdet(lam_n)
    if sign0 <= 0 or sign_n <= 0:
        raise NumericalError("scale matrix lost positive definiteness")
    return (-0.5 * n * d * math.log(math.pi)
            + multigammaln(0.5 * nu_n, d) - multigammaln(0.5 * prior.nu0, d)
            + 0.5 * prior.nu0 * logdet0 - 0.5 * nu_n * logdet_n
            + 0.5 * d * (math.log(prior.kappa0) - math.log(kappa_n)))


def crp_log_prob(counts: np.ndarray, alpha: float) -> float:
    """Log probability of a partition under the Chinese restaurant process."""
    counts = np.asarray(counts)
    n = counts.sum()
    return float(len(counts) * math.log(alpha) + gammaln(counts).sum()
                 + gammaln(alpha) - gammaln(alpha + n))


def crp_new_cluster_probability(i: int, alpha: float) -> float:
    """Probability that the i-th observation (1-indexed) opens a new cluster."""
    return alpha / (i - 1 + alpha)


def sample_crp_partition(n: int, alpha: float,
                         rng: np.random.Generator) -> np.ndarray:
    """Sequential draw from the CRP prior; returns cluster assignments."""
    assign = np.zeros(n, dtype=np.int64)
    counts: list[int] = []
    for i in range(n):
        if not counts:
            counts.append(1)
            assign[i] = 0
            continue
        weights = np.array(counts + [alpha], dtype=np.float64)
        probs = weights / weights.sum()
        k = int(rng.choice(len(probs), p=probs))
        if k == len(counts):
            counts.append(1)
        else:
            counts[k] += 1
        assign[i] = k
    return assign


# ---------------------------------------------------------------------------
# State

@dataclass
class IgmmState:
    """Fitted mixture state: hard assignments plus per-cluster sufficient
    statistics, enough to evaluate predictives and label new points."""

    assignments: np.ndarray        # (W,)
    counts: np.ndarray             # (K,)
    sums: np.ndarray               # (K, d)
    sumsqs: np.ndarray             # (K, d, d)
    alpha: float
    prior: NiwPrior
    seed: int
    iteration: int
    joint_log_score: float

    @property
    def cluster_count(self) -> int:
        return len(self.counts)

    @property
    def observation_count(self) -> int:
        return len(self.assignments)

    def check_consistency(self, X: np.ndarray, rtol: float = 1e-8) -> None:
        """Verify sufficient statistics against brute-force recomputation."""
        if self.counts.sum() != len(self.assignments):
            raise NumericalError("cluster counts do not sum to W")
        if np.any(self.counts < 1):
            raise NumericalError("empty cluster present")
        for k in range(self.cluster_count):
            members = X[self.assignments == k]
            if len(members) != self.counts[k]:
                raise NumericalError(f"cluster {k} count mismatch")
            s = members.sum(axis=0)
            ss = members.T @ members
            if not np.allclose(s, self.sums[k], rtol=rtol, atol=1e-12):
                raise NumericalError(f"cluster {k} sum drift")
            if not np.allclose(ss, self.sumsqs[k], rtol=rtol, atol=1e-12):
                raise NumericalError(f"cluster {k} sum-of-squares drift")


def state_joint_log_score(counts: np.ndarray, sums: np.ndarray,
                          sumsqs: np.ndarray, prior: NiwPrior, alpha: float,
                          alpha_cfg: AlphaConfig | None = None) -> float:
    """Joint log score of a state: CRP partition prior + per-cluster
    marginal likelihoods (+ alpha prior when it is being resampled)."""
    score = crp_log_prob(counts, alpha)
    for k in range(len(counts)):
        score += _cluster_marginal_loglik(prior, int(counts[k]), sums[k],
                                          sumsqs[k])
    if alpha_cfg is not None and alpha_cfg.resample:
        a, b = alpha_cfg.gamma_shape, alpha_cfg.gamma_rate
        score += (a * math.log(b) - gammaln(a) + (a - 1) * math.log(alpha)
                  - b * alpha)
    return float(score)


# ---------------------------------------------------------------------------
# Sampler internals

def _t_cache(prior: NiwPrior, n: int, s: np.ndarray, ss: np.ndarray):
    """Fast-path predictive parameterization: (mean, inverse Cholesky of
    the scale, dof, log normalization constant)."""
    mu, chol, dof = _posterior_t_params(prior, n, s, ss)
    d = prior.dim
    inv_chol = np.linalg.inv(chol)
    log_norm = (gammaln(0.5 * (dof + d)) - gammaln(0.5 * dof)
                - 0.5 * d * math.log(dof * math.pi)
                + np.log(np.diag(inv_chol)).sum())
    return mu, inv_chol, dof, log_norm


class _Cluster:
    """Sufficient statistics of one cluster with a lazily cached
    posterior-predictive parameterization."""

    __slots__ = ("n", "s", "ss", "_post")

    def __init__(self, d: int):
        self.n = 0
        self.s = np.zeros(d)
        self.ss = np.zeros((d, d))
        self._post = None

    def add(self, x: np.ndarray, xx: np.ndarray) -> None:
        self.n += 1
        self.s += x
        self.ss += xx
        self._post = None

    def remove(self, x: np.ndarray, xx: np.ndarray) -> None:
        self.n -= 1
        self.s -= x
        self.ss -= xx
        self._post = None

    def log_predictive(self, prior: NiwPrior, x: np.ndarray) -> float:
        if self._post is None:
            self._post = _t_cache(prior, self.n, self.s, self.ss)
        mu, inv_chol, dof, log_norm = self._post
        dev = x - mu
        sol = inv_chol @ dev
        return log_norm - 0.5 * (dof + prior.dim) * math.log1p((sol @ sol) / dof)


def igmm_fit(Xr: np.ndarray, prior: NiwPrior,
             alpha_cfg: AlphaConfig | None = None,
             iters: int = 200, burn_in: int = 100, seed: int = 0) -> IgmmState:
    """Collapsed Gibbs sampling; returns the best-scoring state seen after
    burn-in (initialization: all points in one cluster)."""
    X = np.asarray(Xr, dtype=np.float64)
    if X.ndim != 2:
        raise DataError("observations must form a 2D matrix")
    w, d = X.shape
    if w < 2:
        raise DataError("need at least 2 observations")
    if prior.dim != d:
        raise DataError(f"prior dimension {prior.dim} != data dimension {d}")
    if alpha_cfg is None:
        alpha_cfg = AlphaConfig()
    if not iters > burn_in >= 0:
        raise DataError("need iters > burn_in >= 0")

    rng = np.random.default_rng(seed)
    alpha = alpha_cfg.value
    outer = X[:, :, None] * X[:, None, :]

    assignments = np.zeros(w, dtype=np.int64)
    first = _Cluster(d)
    first.n = w
    first.s = X.sum(axis=0)
    first.ss = outer.sum(axis=0)
    clusters = [first]
    empty = _Cluster(d)  # prior predictive, never mutated

    def score() -> float:
        counts = np.array([c.n for c in clusters])
        sums = np.stack([c.s for c in clusters])
        sqs = np.stack([c.ss for c in clusters])
        return state_joint_log_score(counts, sums, sqs, prior, alpha, alpha_cfg)

    best_score = score()
    best_assign = assignments.copy()
    best_alpha = alpha
    best_iteration = 0

    log_alpha = math.log(alpha)
    for sweep in range(1, iters + 1):
        for i in range(w):
            x = X[i]
            xx = outer[i]
            k_old = assignments[i]
            cl = clusters[k_old]
            cl.remove(x, xx)
            if cl.n == 0:
                clusters.pop(k_old)
                assignments[assignments > k_old] -= 1

            k_active = len(clusters)
            logw = np.empty(k_active + 1)
            for k, c in enumerate(clusters):
                logw[k] = math.log(c.n) + c.log_predictive(prior, x)
            logw[k_active] = log_alpha + empty.log_predictive(prior, x)

            logw -= logw.max()
            probs = np.exp(logw)
            probs /= probs.sum()
            k_new = int(np.searchsorted(np.cumsum(probs), rng.random()))
            k_new = min(k_new, k_active)
            if k_new == k_active:
                clusters.append(_Cluster(d))
            clusters[k_new].add(x, xx)
            assignments[i] = k_new

        if alpha_cfg.resample:
            alpha = _alpha_metropolis(alpha, len(clusters), w, alpha_cfg, rng)
            log_alpha = math.log(alpha)

        if sweep > burn_in:
            s = score()
            if s > best_score:
                best_score = s
                best_assign = assignments.copy()
                best_alpha = alpha
                best_iteration = sweep

    return _state_from_assignments(X, best_assign, best_alpha, prior, seed,
                                   best_iteration, best_score)


def _alpha_metropolis(alpha: float, k: int, w: int, cfg: AlphaConfig,
                      rng: np.random.Generator) -> float:
    """One lognormal-proposal Metropolis step on the concentration."""
    prop = alpha * math.exp(cfg.proposal_scale * rng.standard_normal())

    def log_target(a: float) -> float:
        return (k * math.log(a) + gammaln(a) - gammaln(a + w)
                + (cfg.gamma_shape - 1) * math.log(a) - cfg.gamma_rate * a)

    log_ratio = log_target(prop) - log_target(alpha) + math.log(prop / alpha)
    if math.log(rng.random()) < log_ratio:
        return prop
    return alpha


def _state_from_assignments(X: np.ndarray, assignments: np.ndarray,
                            alpha: float, prior: NiwPrior, seed: int,
                            iteration: int, joint_score: float) -> IgmmState:
    """Rebuild stacked statistics, relabelling clusters by first appearance
    so symbols are contiguous and deterministic."""
    order: dict[int, int] = {}
    for a in assignments:
        if int(a) not in order:
            order[int(a)] = len(order)
    relabeled = np.array([order[int(a)] for a in assignments], dtype=np.int64)
    k = len(order)
    d = X.shape[1]
    counts = np.zeros(k, dtype=np.int64)
    sums = np.zeros((k, d))
    sumsqs = np.zeros((k, d, d))
    for j in range(k):
        members = X[relabeled == j]
        counts[j] = len(members)
        sums[j] = members.sum(axis=0)
        sumsqs[j] = members.T @ members
    return IgmmState(assignments=relabeled, counts=counts, sums=sums,
                     sumsqs=sumsqs, alpha=alpha, prior=prior, seed=seed,
                     iteration=iteration, joint_log_score=joint_score)


def posterior_predictive(state: IgmmState | None, prior: NiwPrior,
                         x: np.ndarray, cluster: int | str) -> float:
    """Log density of x under the Student-t predictive of ``cluster``
    (an active cluster index, or "new" for the prior predictive)."""
    x = np.asarray(x, dtype=np.float64)
    if cluster == "new":
        mu, chol, dof = _posterior_t_params(prior, 0, prior.mu0,
                                            prior.lambda0)
        return _t_logpdf(x, mu, chol, dof)
    if state is None:
        raise DataError("a fitted state is required for an existing cluster")
    k = int(cluster)
    if not 0 <= k < state.cluster_count:
        raise DataError(f"cluster {k} not active (K={state.cluster_count})")
    mu, chol, dof = _posterior_t_params(prior, int(state.counts[k]),
                                        state.sums[k], state.sumsqs[k])
    return _t_logpdf(x, mu, chol, dof)


def hard_assign(state: IgmmState, x: np.ndarray) -> int:
    """Deterministic symbol for x: argmax over active clusters of
    count * posterior predictive (no new-cluster option); ties break
    toward the lower symbol."""
    x = np.asarray(x, dtype=np.float64)
    scores = np.empty(state.cluster_count)
    for k in range(state.cluster_count):
        mu, chol, dof = _posterior_t_params(state.prior, int(state.counts[k]),
                                            state.sums[k], state.sumsqs[k])
        scores[k] = math.log(state.counts[k]) + _t_logpdf(x, mu, chol, dof)
    return int(np.argmax(scores))


def hard_assign_many(state: IgmmState, X: np.ndarray) -> np.ndarray:
    """Vectorized ``hard_assign`` over the rows of X."""
    X = np.asarray(X, dtype=np.float64)
    scores = np.empty((X.shape[0], state.cluster_count))
    for k in range(state.cluster_count):
        mu, chol, dof = _posterior_t_params(state.prior, int(state.counts[k]),
                                            state.sums[k], state.sumsqs[k])
        scores[:, k] = math.log(state.counts[k]) + _t_logpdf(X, mu, chol, dof)
    return scores.argmax(axis=1)


# ---------------------------------------------------------------------------
# Dimensionality reduction (plain PCA)

@dataclass(frozen=True)
class PcaModel:
    """Linear projection onto the leading principal directions."""

    mean: np.ndarray         # (n,)
    components: np.ndarray   # (d, n)
    explained: np.ndarray    # (d,) variance along each kept direction

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return (X - self.mean) @ self.components.T

    @property
    def target_dim(self) -> int:
        return self.components.shape[0]


def reduce_dim(X: np.ndarray, target_dim: int) -> tuple[np.ndarray, PcaModel]:
    """Project the rows of X onto their top principal directions.

    The sign of each direction is fixed so its largest-magnitude entry is
    positive, making the projection deterministic.
    """
    X = np.asarray(X, dtype=np.float64)
    w, n = X.shape
    if not 1 <= target_dim <= min(w, n):
        raise DataError(f"target_dim must be in [1, min(W, n)] = "
                        f"[1, {min(w, n)}], got {target_dim}")
    mean = X.mean(axis=0)
    xc = X - mean
    u, s, vt = np.linalg.svd(xc, full_matrices=False)
    tol = s[0] * max(w, n) * np.finfo(np.float64).eps if s.size else 0.0
    rank = int((s > tol).sum())
    if target_dim > rank:
        raise DataError(f"target_dim {target_dim} exceeds data rank {rank}")
    comps = vt[:target_dim].copy()
    flip = comps[np.arange(target_dim), np.abs(comps).argmax(axis=1)] < 0
    comps[flip] *= -1.0
    explained = (s[:target_dim] ** 2) / max(w - 1, 1)
    model = PcaModel(mean=mean, components=comps, explained=explained)
    return xc @ comps.T, model
