"""Second-order Gaussian (and Gaussian-mixture) knockoffs.

Each time step is treated as one draw of an N-dimensional vector. For a
Gaussian model ``N(mu, Sigma)`` and a diagonal ``S`` with ``0 <= S <= 2 Sigma``,
a knockoff of ``z`` is drawn from::

    N(mu + (I - S Sigma^-1)(z - mu), 2S - S Sigma^-1 S)

so that the stacked vector ``(z, z~)`` has covariance
``[[Sigma, Sigma - S], [Sigma - S, Sigma]]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionMismatch, NotPositiveDefinite, TooFewSamples
from .timeseries import MultivariateSeries

PSD_TOL = 1e-8
MAX_CONDITION = 1e6


@dataclass(frozen=True)
class GaussianModel:
    mu: np.ndarray
    sigma: np.ndarray

    @property
    def n_vars(self) -> int:
        return self.mu.shape[0]


def _shrink_to_condition(sigma: np.ndarray, max_condition: float = MAX_CONDITION) -> np.ndarray:
    """Shrink ``sigma`` toward its diagonal until its condition number is bounded."""
    diag = np.diag(np.diag(sigma))
    for lam in np.concatenate([[0.0], np.geomspace(1e-6, 1.0, 61)]):
        shrunk = (1.0 - lam) * sigma + lam * diag
        eig = np.linalg.eigvalsh(shrunk)
        if eig[0] > 0 and eig[-1] / eig[0] <= max_condition:
            return shrunk
    return diag


def fit_gaussian(samples) -> GaussianModel:
    """Column means and population covariance, shrunk if ill-conditioned."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    r, n = samples.shape
    if r < n + 1:
        raise TooFewSamples(f"need at least {n + 1} rows to fit {n} variables, got {r}")
    mu = samples.mean(axis=0)
    centred = samples - mu
    sigma = centred.T @ centred / r
    if np.any(np.diag(sigma) < 1e-12):
        raise TooFewSamples("a column has zero variance; the Gaussian fit is degenerate")
    sigma = 0.5 * (sigma + sigma.T)
    return GaussianModel(mu, _shrink_to_condition(sigma))


def equicorrelated_s(sigma) -> np.ndarray:
    """Equicorrelated diagonal: ``min(2 * lambda_min, 1)`` on the correlation scale."""
    sigma = np.asarray(sigma, dtype=float)
    var = np.diag(sigma)
    if np.any(var <= 0):
        raise NotPositiveDefinite("covariance has a non-positive variance")
    sd = np.sqrt(var)
    corr = sigma / np.outer(sd, sd)
    lam_min = np.linalg.eigvalsh(corr)[0]
    if lam_min <= 0:
        raise NotPositiveDefinite(f"smallest eigenvalue {lam_min:.3g} is not positive")
    return min(2.0 * lam_min, 1.0) * var


def _psd_factor(mat: np.ndarray) -> np.ndarray:
    """``L`` with ``L @ L.T == mat`` for a symmetric PSD matrix (clips tiny negatives)."""
    mat = 0.5 * (mat + mat.T)
    eig, vec = np.linalg.eigh(mat)
    return vec * np.sqrt(np.clip(eig, 0.0, None))


@dataclass(frozen=True)
class KnockoffSampler:
    """Gaussian knockoff sampler with its precomputed conditional law."""

    model: GaussianModel
    s_diag: np.ndarray
    cond_mean_matrix: np.ndarray = field(repr=False)
    cond_cov_factor: np.ndarray = field(repr=False)

    @classmethod
    def from_model(cls, model: GaussianModel, s_diag=None) -> "KnockoffSampler":
        sigma = model.sigma
        s = equicorrelated_s(sigma) if s_diag is None else np.asarray(s_diag, dtype=float)
        if s.shape != (model.n_vars,):
            raise DimensionMismatch("s_diag length does not match the model")
        if np.any(s < 0):
            raise NotPositiveDefinite("S must be nonnegative")
        S = np.diag(s)
        if np.linalg.eigvalsh(2 * sigma - S)[0] < -PSD_TOL:
            raise NotPositiveDefinite("2*Sigma - S is not positive semidefinite")
        sigma_inv_s = np.linalg.solve(sigma, S)
        cond_cov = 2 * S - S @ sigma_inv_s
        cond_cov = 0.5 * (cond_cov + cond_cov.T)
        if np.linalg.eigvalsh(cond_cov)[0] < -PSD_TOL:
            raise NotPositiveDefinite("2S - S Sigma^-1 S is not positive semidefinite")
        cond_mean = np.eye(model.n_vars) - sigma_inv_s.T
        return cls(model, s, cond_mean, _psd_factor(cond_cov))

    @classmethod
    def fit(cls, samples, s_diag=None) -> "KnockoffSampler":
        return cls.from_model(fit_gaussian(samples), s_diag)

    @property
    def n_vars(self) -> int:
        return self.model.n_vars

    def conditional_mean(self, z: np.ndarray) -> np.ndarray:
        mu = self.model.mu
        return mu + (z - mu) @ self.cond_mean_matrix.T

    def draw(self, z: np.ndarray, noise: np.ndarray) -> np.ndarray:
        """Knockoffs for rows ``z`` given standard-normal ``noise`` of the same shape."""
        return self.conditional_mean(z) + noise @ self.cond_cov_factor.T


@dataclass(frozen=True)
class MixtureKnockoffSampler:
    """Mixture of Gaussian knockoff samplers.

    The component for each row is drawn from its posterior given the row,
    then the knockoff comes from that component's Gaussian conditional law.
    """

    weights: np.ndarray
    components: tuple[KnockoffSampler, ...]

    @property
    def n_vars(self) -> int:
        return self.components[0].n_vars

    def log_responsibilities(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(z)
        logp = np.stack(
            [np.log(w) + _gaussian_logpdf(z, c.model.mu, c.model.sigma)
             for w, c in zip(self.weights, self.components)],
            axis=1,
        )
        return logp - logsumexp(logp, axis=1, keepdims=True)

    def draw(self, z: np.ndarray, noise: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(z)
        post = np.exp(self.log_responsibilities(z))
        assignment = (np.cumsum(post, axis=1) < uniforms[:, None]).sum(axis=1)
        assignment = np.minimum(assignment, len(self.components) - 1)
        out = np.empty_like(z)
        for k, comp in enumerate(self.components):
            rows = assignment == k
            if np.any(rows):
                out[rows] = comp.draw(z[rows], noise[rows])
        return out


def _gaussian_logpdf(z: np.ndarray, mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    chol = np.linalg.cholesky(sigma)
    sol = np.linalg.solve(chol, (z - mu).T)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (np.sum(sol**2, axis=0) + logdet + mu.shape[0] * np.log(2 * np.pi))


def fit_mixture(samples, n_components: int = 1, seed: int = 0, n_iter: int = 200,
                tol: float = 1e-8, reg: float = 1e-6) -> MixtureKnockoffSampler:
    """Fit a Gaussian mixture by expectation-maximization and wrap it as a sampler.

    With ``n_components=1`` this is the plain Gaussian sampler with unit weight.
    """
    samples = np.asarray(samples, dtype=float)
    r, n = samples.shape
    if n_components < 1:
        raise ValueError("n_components must be positive")
    if n_components == 1:
        return MixtureKnockoffSampler(np.ones(1), (KnockoffSampler.fit(samples),))
    if r < n_components * (n + 1):
        raise TooFewSamples(f"{r} rows are too few for {n_components} components")

    rng = np.random.default_rng(seed)
    means = samples[rng.choice(r, n_components, replace=False)]
    base_cov = np.cov(samples.T, bias=True).reshape(n, n)
    covs = np.array([base_cov.copy() for _ in range(n_components)])
    weights = np.full(n_components, 1.0 / n_components)
    prev = -np.inf
    for _ in range(n_iter):
        logp = np.stack(
            [np.log(weights[k]) + _gaussian_logpdf(samples, means[k], covs[k])
             for k in range(n_components)], axis=1)
        total = logsumexp(logp, axis=1, keepdims=True)
        resp = np.exp(logp - total)
        loglik = float(total.sum())
        nk = resp.sum(axis=0) + 1e-12
        weights = nk / r
        means = (resp.T @ samples) / nk[:, None]
        for k in range(n_components):
            d = samples - means[k]
            covs[k] = (resp[:, k, None] * d).T @ d / nk[k] + reg * np.eye(n)
        if loglik - prev < tol * abs(loglik):
            break
        prev = loglik

    comps = tuple(
        KnockoffSampler.from_model(GaussianModel(means[k], _shrink_to_condition(covs[k])))
        for k in range(n_components)
    )
    return MixtureKnockoffSampler(weights, comps)


def _row_rng(seed: int, row: int) -> np.random.Generator:
    return np.random.default_rng([seed, row])


def sample_knockoffs(sampler, z_row, rng_seed: int) -> np.ndarray:
    """One knockoff draw for a single length-N observation."""
    z_row = np.asarray(z_row, dtype=float)
    if z_row.shape != (sampler.n_vars,):
        raise DimensionMismatch(f"expected a length-{sampler.n_vars} row")
    return _draw_rows(sampler, z_row[None, :], rng_seed, np.array([0]))[0]


def _draw_rows(sampler, rows: np.ndarray, seed: int, row_ids) -> np.ndarray:
    n = rows.shape[1]
    noise = np.empty_like(rows)
    uniforms = np.empty(rows.shape[0])
    for k, t in enumerate(row_ids):
        rng = _row_rng(seed, int(t))
        noise[k] = rng.standard_normal(n)
        uniforms[k] = rng.random()
    if isinstance(sampler, MixtureKnockoffSampler):
        return sampler.draw(rows, noise, uniforms)
    return sampler.draw(rows, noise)


@dataclass(frozen=True)
class KnockoffSet:
    originals: MultivariateSeries
    knockoffs: MultivariateSeries


def knockoff_series(realization: MultivariateSeries, sampler, rng_seed: int) -> KnockoffSet:
    """Knockoff copies of every column, row by row.

    Row ``t`` uses its own generator seeded from ``(rng_seed, t)``, so the
    result equals ``sample_knockoffs`` applied to each row with that seed and
    does not depend on how rows are batched.
    """
    if realization.n_vars != sampler.n_vars:
        raise DimensionMismatch(
            f"sampler has {sampler.n_vars} variables, realization has {realization.n_vars}"
        )
    values = _draw_rows(sampler, realization.values, rng_seed, range(realization.r))
    names = [f"{name}_knockoff" for name in realization.names]
    return KnockoffSet(realization, MultivariateSeries(values, names))


def target_joint_covariance(sigma, s_diag) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    off = sigma - np.diag(s_diag)
    return np.block([[sigma, off], [off, sigma]])


def exchangeability_diagnostic(ks: KnockoffSet, sampler: KnockoffSampler | None = None) -> dict:
    """Compare the empirical covariance of ``(Z, Z~)`` with its target block matrix.

    The target uses ``sampler``'s model and ``S`` when given, otherwise a
    Gaussian refitted on the originals with the equicorrelated ``S``.
    """
    z = ks.originals.values
    zk = ks.knockoffs.values
    joint = np.hstack([z, zk])
    emp = np.cov(joint.T, bias=True)
    if sampler is None:
        sampler = KnockoffSampler.fit(z)
    target = target_joint_covariance(sampler.model.sigma, sampler.s_diag)
    n = z.shape[1]
    corr = np.array([_safe_corr(z[:, j], zk[:, j]) for j in range(n)])
    return {
        "max_block_deviation": float(np.max(np.abs(emp - target))),
        "per_variable_correlation": corr,
    }


def _safe_corr(a: np.ndarray, b: np.ndarray) -> float:
    if np.array_equal(a, b):
        return 1.0
    sa, sb = a.std(), b.std()
    if sa == 0 or sb == 0:
        return 0.0
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def swap(joint: np.ndarray, subset, n_vars: int) -> np.ndarray:
    """Swap columns ``j`` and ``j + n_vars`` of a stacked ``(Z, Z~)`` matrix for ``j`` in subset."""
    out = joint.copy()
    for j in subset:
        out[:, [j, j + n_vars]] = joint[:, [j + n_vars, j]]
    return out
