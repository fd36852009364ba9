"""Dummy-coded design matrices and the maximum-likelihood logistic fit.

The fit is Newton-Raphson / IRLS from ``beta = 0`` with step halving. Each
step solves the weighted least-squares problem through a column-pivoted QR
of ``sqrt(W) X``; the information matrix ``X' W X = R' R`` is declared
singular when a pivot ``R_ii**2`` falls below ``1e-10`` times the largest.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import qr, solve_triangular

from .data_model import AuditConfig, DemographicSchema, canonical_variable, load_schema
from .errors import (
    ConvergenceError,
    DataError,
    EmptyDesignError,
    RankDeficiencyError,
    SeparationError,
    SingleLevelError,
    UnknownIdError,
)
from .ingestion import DatasetManifest
from .metrics import UtteranceScore
from .specfun import normal_quantile, normal_sf

PIVOT_RATIO = 1e-10
PROB_CLAMP = 1e-12
_LOG_LO = math.log(PROB_CLAMP)
_LOG_HI = math.log1p(-PROB_CLAMP)


@dataclass(frozen=True)
class ModelSpec:
    covariates: tuple[str, ...]
    reference_levels: Mapping[str, str]
    response: str = "em"

    def __post_init__(self):
        covs = tuple(canonical_variable(c) for c in self.covariates)
        if not covs:
            raise ValueError("a model needs at least one covariate")
        if len(set(covs)) != len(covs):
            raise ValueError(f"duplicate covariates: {covs}")
        object.__setattr__(self, "covariates", covs)
        object.__setattr__(
            self,
            "reference_levels",
            {canonical_variable(k): v for k, v in self.reference_levels.items()},
        )

    @classmethod
    def from_config(
        cls, covariates: Sequence[str], config: AuditConfig, schema: DemographicSchema
    ) -> "ModelSpec":
        refs = {}
        for c in covariates:
            refs[canonical_variable(c)] = config.reference_for(c, schema)
        spec = cls(tuple(covariates), refs)
        for var, ref in spec.reference_levels.items():
            if ref not in schema.levels(var):
                raise ValueError(f"reference level {ref!r} is not a level of {var}")
        return spec


@dataclass(frozen=True)
class DesignMatrix:
    values: np.ndarray
    response: np.ndarray
    column_labels: tuple[str, ...]
    row_ids: tuple[str, ...]
    # variable -> (reference level, non-reference levels in column order)
    blocks: Mapping[str, tuple[str, tuple[str, ...]]] = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    def columns_for(self, variable: str) -> list[int]:
        prefix = canonical_variable(variable) + "="
        return [i for i, lab in enumerate(self.column_labels) if lab.startswith(prefix)]

    def intercept_only(self) -> "DesignMatrix":
        return DesignMatrix(
            self.values[:, :1], self.response, self.column_labels[:1], self.row_ids, {}
        )


def response_by_id(
    manifest: DatasetManifest, scores: Sequence[UtteranceScore]
) -> dict[str, int]:
    em = {s.utterance_id: s.em for s in scores}
    known = {r.utterance_id for r in manifest.records}
    orphans = set(em) - known
    if orphans:
        raise UnknownIdError(orphans)
    uncovered = [r.utterance_id for r in manifest.records if r.utterance_id not in em]
    if uncovered:
        raise DataError(f"{len(uncovered)} record(s) without a score, e.g. {uncovered[0]!r}")
    return em


def build_design(
    manifest: DatasetManifest,
    scores: Sequence[UtteranceScore],
    spec: ModelSpec,
    schema: DemographicSchema | None = None,
    require_tags: Sequence[str] = (),
) -> DesignMatrix:
    """Intercept plus one indicator per non-reference level of each covariate.

    Rows missing any covariate tag (or any tag in ``require_tags``) are
    dropped. Columns follow covariate order, then schema level order; levels
    with no rows left are omitted.
    """
    if schema is None:
        schema = load_schema()
    em = response_by_id(manifest, scores)
    needed = list(spec.covariates) + [canonical_variable(v) for v in require_tags]
    rows = [r for r in manifest.records if all(r.tags.get(v) is not None for v in needed)]
    if not rows:
        raise EmptyDesignError(f"no rows carry all of {needed}")

    labels = ["intercept"]
    blocks = {}
    columns = [np.ones(len(rows))]
    for var in spec.covariates:
        observed = {r.tags.get(var) for r in rows}
        if len(observed) < 2:
            raise SingleLevelError(f"{var} has fewer than two observed levels")
        ref = spec.reference_levels[var]
        if ref not in observed:
            raise SingleLevelError(f"reference level {ref!r} of {var} has no observations")
        levels = tuple(lv for lv in schema.levels(var) if lv in observed and lv != ref)
        blocks[var] = (ref, levels)
        for lv in levels:
            labels.append(f"{var}={lv}")
            columns.append(np.array([r.tags.get(var) == lv for r in rows], dtype=float))

    return DesignMatrix(
        values=np.column_stack(columns),
        response=np.array([em[r.utterance_id] for r in rows], dtype=float),
        column_labels=tuple(labels),
        row_ids=tuple(r.utterance_id for r in rows),
        blocks=blocks,
    )


# -- likelihood -------------------------------------------------------------


def expit(eta):
    return np.exp(-np.logaddexp(0.0, -eta))


def log_likelihood(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Bernoulli log-likelihood under the logit link, probabilities clamped."""
    eta = X @ beta
    log_pi = np.clip(-np.logaddexp(0.0, -eta), _LOG_LO, _LOG_HI)
    log_1mpi = np.clip(-np.logaddexp(0.0, eta), _LOG_LO, _LOG_HI)
    return float(np.sum(y * log_pi + (1.0 - y) * log_1mpi))


def score_vector(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    return X.T @ (y - expit(X @ beta))


@dataclass(frozen=True)
class FittedLogit:
    coefficients: np.ndarray
    covariance: np.ndarray
    log_likelihood: float
    n_obs: int
    converged: bool
    iterations: int
    column_labels: tuple[str, ...] = ()

    @property
    def n_params(self) -> int:
        return len(self.coefficients)

    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    def to_dict(self) -> dict:
        return {
            "column_labels": list(self.column_labels),
            "coefficients": self.coefficients.tolist(),
            "covariance": self.covariance.tolist(),
            "log_likelihood": self.log_likelihood,
            "n_obs": self.n_obs,
            "converged": self.converged,
            "iterations": self.iterations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _weighted_qr(X, w):
    sw = np.sqrt(w)
    R, piv = qr(sw[:, None] * X, mode="r", pivoting=True)
    R = R[: X.shape[1]]
    pivots = np.abs(np.diag(R)) ** 2
    if pivots.size == 0 or pivots.min() < PIVOT_RATIO * pivots.max():
        raise RankDeficiencyError(
            "information matrix is singular (collinear or empty indicator columns)"
        )
    return R, piv


def _newton_step(beta, X, y):
    pi = np.clip(expit(X @ beta), PROB_CLAMP, 1.0 - PROB_CLAMP)
    w = pi * (1.0 - pi)
    R, piv = _weighted_qr(X, w)
    grad = X.T @ (y - pi)
    # info = P R'R P'  =>  solve R'R z = P' grad, delta = P z
    z = solve_triangular(R, solve_triangular(R, grad[piv], trans="T"))
    delta = np.empty_like(z)
    delta[piv] = z
    return delta


def _covariance(beta, X):
    pi = np.clip(expit(X @ beta), PROB_CLAMP, 1.0 - PROB_CLAMP)
    R, piv = _weighted_qr(X, pi * (1.0 - pi))
    Rinv = solve_triangular(R, np.eye(R.shape[0]))
    cov = np.empty((R.shape[0], R.shape[0]))
    cov[np.ix_(piv, piv)] = Rinv @ Rinv.T
    return 0.5 * (cov + cov.T)


def fit(design: DesignMatrix | np.ndarray, config: AuditConfig | None = None, y=None) -> FittedLogit:
    """Maximum-likelihood logistic regression.

    Accepts a :class:`DesignMatrix`, or a raw ``(X, config, y)`` triple.
    Raises ``SeparationError`` once any coefficient magnitude exceeds
    ``config.divergence_bound`` and ``RankDeficiencyError`` for a singular
    information matrix.
    """
    config = config or AuditConfig()
    if isinstance(design, DesignMatrix):
        X, y, labels = design.values, design.response, design.column_labels
    else:
        X, labels = np.asarray(design, dtype=float), ()
        y = np.asarray(y, dtype=float)
    n, k = X.shape

    beta = np.zeros(k)
    ll = log_likelihood(beta, X, y)
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        delta = _newton_step(beta, X, y)
        step = 1.0
        new_beta = beta + delta
        new_ll = log_likelihood(new_beta, X, y)
        for _ in range(40):
            if new_ll >= ll:
                break
            step *= 0.5
            new_beta = beta + step * delta
            new_ll = log_likelihood(new_beta, X, y)
        if np.max(np.abs(new_beta)) > config.divergence_bound:
            worst = int(np.argmax(np.abs(new_beta)))
            name = labels[worst] if labels else f"beta[{worst}]"
            raise SeparationError(
                f"{name} exceeded divergence bound {config.divergence_bound} "
                "(complete or quasi-complete separation)"
            )
        change = new_ll - ll
        beta, ll = new_beta, new_ll
        if abs(change) < config.loglik_tolerance:
            converged = True
            break

    return FittedLogit(
        coefficients=beta,
        covariance=_covariance(beta, X),
        log_likelihood=ll,
        n_obs=n,
        converged=converged,
        iterations=iterations,
        column_labels=tuple(labels),
    )


def predict(model: FittedLogit, row) -> float:
    row = np.asarray(row, dtype=float)
    if row.shape != model.coefficients.shape:
        raise ValueError(
            f"row has {row.shape[0] if row.ndim else 0} entries, model has {model.n_params}"
        )
    return float(expit(row @ model.coefficients))


@dataclass(frozen=True)
class OddsRatio:
    or_value: float
    ci_low: float
    ci_high: float
    wald_z: float
    wald_p: float
    std_error: float


def odds_ratio(model: FittedLogit, k: int, config: AuditConfig | None = None) -> OddsRatio:
    config = config or AuditConfig()
    if not model.converged:
        raise ConvergenceError("odds ratios need a converged model")
    if not 1 <= k < model.n_params:
        raise IndexError(f"coefficient index {k} is not a non-intercept column")
    b = float(model.coefficients[k])
    se = math.sqrt(float(model.covariance[k, k]))
    zcrit = normal_quantile(1.0 - config.alpha / 2.0)
    z = b / se
    return OddsRatio(
        or_value=math.exp(b),
        ci_low=math.exp(b - zcrit * se),
        ci_high=math.exp(b + zcrit * se),
        wald_z=z,
        wald_p=min(1.0, 2.0 * normal_sf(abs(z))),
        std_error=se,
    )
