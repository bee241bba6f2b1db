"""Demand systems feeding the actual-loss calculations.

* Linear and log-linear least squares, whose price coefficients read as
  slopes (linear) or elasticities (log-linear).
* Binary logit share model with arc quantity slopes for own and cross
  price changes.
* AIDS budget shares and quantities from supplied coefficients.

The logit share is the standard inverse of the log-odds,
``S = 1 / (1 + exp(-(alpha + beta p + gamma c)))``.  Writing the exponent
with a positive sign would make the share fall as the log-odds rise.

The own/cross "elasticities" here are arc slopes dQ/dP in quantity per
unit price, not dimensionless elasticities.  Use
:func:`slope_to_elasticity` before handing them to
:func:`marketdef.cla.actual_loss_elasticities`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit, softmax

from marketdef.errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    SchemaError,
    SingularDesignError,
)


@dataclass(frozen=True)
class LinearDemandFit:
    intercept: np.ndarray
    price_coefs: np.ndarray
    shifter_coefs: np.ndarray
    log_space: bool
    normal_eq_residual: float = 0.0
    price_range: tuple[np.ndarray, np.ndarray] | None = None

    def predict(self, prices, shifters=None) -> np.ndarray:
        """Quantities (one per product) at the given prices and shifters."""
        p = np.asarray(prices, dtype=float)
        if p.shape[-1] != self.price_coefs.shape[1]:
            raise DimensionError("wrong number of prices")
        if self.log_space:
            if np.any(p <= 0):
                raise DomainError("log-linear demand needs positive prices")
            p = np.log(p)
        out = self.intercept + p @ self.price_coefs.T
        if self.shifter_coefs.shape[1]:
            out = out + np.asarray(shifters, dtype=float) @ self.shifter_coefs.T
        return np.exp(out) if self.log_space else out

    def outside_range(self, prices) -> bool:
        """True when any price lies outside the range seen in the fit."""
        if self.price_range is None:
            return False
        lo, hi = self.price_range
        p = np.asarray(prices, dtype=float)
        return bool(np.any(p < lo) or np.any(p > hi))


def ols_fit(responses, design, log_space: bool = False, n_prices: int | None = None) -> LinearDemandFit:
    """Least-squares demand fit with an intercept.

    Args:
        responses: quantities, shape ``(obs,)`` or ``(obs, products)``.
        design: regressors, shape ``(obs, r)``; the first ``n_prices``
            columns are prices (all of them by default), the rest shifters.
        log_space: fit ``log Q`` on ``log P`` and raw shifters, so price
            coefficients are elasticities.

    Raises:
        SingularDesignError: the design (with intercept) is rank deficient.
        DomainError: non-positive quantity or price under ``log_space``.
    """
    y = np.asarray(responses, dtype=float)
    y = y.reshape(len(y), -1)
    x = np.asarray(design, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if len(x) != len(y):
        raise DimensionError("responses and design have different numbers of observations")
    n_prices = x.shape[1] if n_prices is None else int(n_prices)
    prices = x[:, :n_prices]
    if log_space:
        if np.any(y <= 0) or np.any(prices <= 0):
            raise DomainError("log-linear fit needs strictly positive quantities and prices")
        y = np.log(y)
        x = np.column_stack([np.log(prices), x[:, n_prices:]])
    a = np.column_stack([np.ones(len(x)), x])
    if len(a) < a.shape[1]:
        raise SingularDesignError("fewer observations than regressors")
    if np.linalg.matrix_rank(a) < a.shape[1]:
        raise SingularDesignError("design matrix is rank deficient")
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    ne = float(np.abs(a.T @ resid).max())
    coef = coef.T  # products x (1 + r)
    return LinearDemandFit(
        intercept=coef[:, 0],
        price_coefs=coef[:, 1 : 1 + n_prices],
        shifter_coefs=coef[:, 1 + n_prices :],
        log_space=log_space,
        normal_eq_residual=ne,
        price_range=(prices.min(axis=0), prices.max(axis=0)),
    )


@dataclass(frozen=True)
class LogitDemandModel:
    alpha: float
    beta: float
    gamma: tuple[float, ...] = ()
    total_q: float = 1.0

    def __post_init__(self):
        g = self.gamma
        g = (float(g),) if np.isscalar(g) else tuple(float(v) for v in g)
        object.__setattr__(self, "gamma", g)

    def predictor(self, p, c=()) -> float:
        c = np.atleast_1d(np.asarray(c, dtype=float)) if len(self.gamma) else np.zeros(0)
        if c.shape != (len(self.gamma),):
            raise DimensionError(f"expected {len(self.gamma)} characteristic values")
        return float(self.alpha + self.beta * p + np.dot(self.gamma, c))


def logit_share(model: LogitDemandModel, p: float, c=()) -> float:
    """Share (choice probability) at price ``p`` and characteristics ``c``."""
    return float(expit(model.predictor(p, c)))


def multinomial_shares(utilities) -> np.ndarray:
    """Choice probabilities exp(V_i) / sum_k exp(V_k)."""
    return softmax(np.asarray(utilities, dtype=float))


def logit_own_elasticity(model: LogitDemandModel, p0: float, p1: float, c=()) -> float:
    """Arc slope [Q S(p0) - Q S(p1)] / (p1 - p0).

    Positive when quantity falls as price rises.
    """
    if p1 == p0:
        raise DomainError("price step is zero")
    if not model.total_q > 0:
        raise DomainError("market quantity must be positive")
    q = model.total_q
    return (q * logit_share(model, p0, c) - q * logit_share(model, p1, c)) / (p1 - p0)


def logit_cross_elasticity(model_j: LogitDemandModel, p_i0: float, p_i1: float,
                           p_j: float, c_j=(), shifter_index: int = 0) -> float:
    """Arc slope of product j's quantity with respect to product i's price.

    ``model_j`` carries product i's price among its characteristics, at
    position ``shifter_index`` of ``c_j``; that entry is overwritten with
    ``p_i0`` and ``p_i1``.  The value is negative when j gains sales as i's
    price rises (substitutes).
    """
    if p_i1 == p_i0:
        raise DomainError("price step is zero")
    if not model_j.total_q > 0:
        raise DomainError("market quantity must be positive")
    c = np.array(c_j, dtype=float, ndmin=1)
    if not 0 <= shifter_index < len(c):
        raise DimensionError("shifter_index outside the characteristic vector")
    before, after = c.copy(), c.copy()
    before[shifter_index] = p_i0
    after[shifter_index] = p_i1
    q = model_j.total_q
    s0 = logit_share(model_j, p_j, before)
    s1 = logit_share(model_j, p_j, after)
    return (q * s0 - q * s1) / (p_i1 - p_i0)


def slope_to_elasticity(slope: float, p0: float, q0: float) -> float:
    """Magnitude of the point elasticity implied by an arc slope."""
    if not (p0 > 0 and q0 > 0):
        raise DomainError("price and quantity must be positive")
    return abs(slope) * p0 / q0


def fit_logit(outcomes, prices, characteristics=None, total_q: float = 1.0,
              max_iter: int = 50, tol: float = 1e-8) -> LogitDemandModel:
    """Newton-Raphson maximum likelihood for ``log(S / (1 - S)) = a + b p + g c``.

    ``outcomes`` are 0/1 choices (or observed shares in [0, 1]).  Converges
    when the largest absolute score component drops below ``tol``.

    Raises:
        ConvergenceError: no convergence in ``max_iter`` steps, which for
            0/1 data usually means the classes are separable.
    """
    y = np.asarray(outcomes, dtype=float)
    if np.any((y < 0) | (y > 1)):
        raise DomainError("outcomes must lie in [0, 1]")
    cols = [np.ones(len(y)), np.asarray(prices, dtype=float)]
    if characteristics is not None:
        c = np.asarray(characteristics, dtype=float)
        cols.extend(c.T if c.ndim == 2 else [c])
    x = np.column_stack(cols)
    if np.linalg.matrix_rank(x) < x.shape[1]:
        raise SingularDesignError("logit design is rank deficient")
    theta = np.zeros(x.shape[1])
    for _ in range(max_iter):
        s = expit(x @ theta)
        score = x.T @ (y - s)
        w = s * (1 - s)
        hess = x.T @ (x * w[:, None])
        try:
            step = np.linalg.solve(hess, score)
        except np.linalg.LinAlgError:
            raise ConvergenceError("logit Hessian became singular (separable data?)") from None
        # on separable data the score vanishes while the coefficients run
        # off to infinity, so a small score alone is not convergence
        if np.abs(score).max() < tol and np.abs(step).max() <= 1e-6 * (1 + np.abs(theta).max()):
            return LogitDemandModel(theta[0], theta[1], tuple(theta[2:]), total_q)
        theta = theta + step
        if not np.all(np.isfinite(theta)):
            break
    raise ConvergenceError(f"logit fit did not converge in {max_iter} iterations (separable data?)")


@dataclass(frozen=True)
class AidsModel:
    a0: float
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        gamma = np.asarray(self.gamma, dtype=float)
        n = len(alpha)
        if beta.shape != (n,) or gamma.shape != (n, n):
            raise DimensionError("AIDS coefficient shapes disagree")
        for name, v in (("alpha", alpha), ("beta", beta), ("gamma", gamma)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def n_goods(self) -> int:
        return len(self.alpha)

    def adding_up(self, tol: float = 1e-10) -> dict:
        """Report (not enforce) the adding-up restrictions."""
        return {
            "alpha_sums_to_one": bool(abs(self.alpha.sum() - 1) <= tol),
            "beta_sums_to_zero": bool(abs(self.beta.sum()) <= tol),
            "gamma_columns_sum_to_zero": bool(np.all(np.abs(self.gamma.sum(axis=0)) <= tol)),
        }


def _logp(model: AidsModel, log_prices) -> np.ndarray:
    lp = np.asarray(log_prices, dtype=float)
    if lp.shape != (model.n_goods,):
        raise DimensionError(f"expected {model.n_goods} log prices, got shape {lp.shape}")
    return lp


def aids_price_index(model: AidsModel, log_prices) -> float:
    """log P = a0 + sum_k alpha_k log p_k + 1/2 sum_jk gamma_jk log p_k log p_j."""
    lp = _logp(model, log_prices)
    return float(model.a0 + model.alpha @ lp + 0.5 * lp @ model.gamma @ lp)


def aids_budget_share(model: AidsModel, log_prices, x: float) -> np.ndarray:
    """w_i = alpha_i + sum_j gamma_ij log p_j + beta_i log(x / P)."""
    if not x > 0:
        raise DomainError("total expenditure must be positive")
    lp = _logp(model, log_prices)
    real_x = np.log(x) - aids_price_index(model, lp)
    return model.alpha + model.gamma @ lp + model.beta * real_x


def aids_quantity(w: float, x: float, p: float) -> float:
    """Physical quantity from a budget share: w x / p."""
    if not p > 0:
        raise DomainError("price must be positive")
    return w * x / p


def model_from_dict(d: dict):
    """Build a demand model from a JSON-style mapping with a ``kind`` key.

    Kinds: ``logit`` (alpha, beta, gamma, total_q), ``aids`` (a0, alpha,
    beta, gamma), ``linear`` / ``loglinear`` (intercept, price_coefs,
    shifter_coefs).
    """
    kind = d.get("kind")
    try:
        if kind == "logit":
            return LogitDemandModel(d["alpha"], d["beta"], d.get("gamma", ()), d.get("total_q", 1.0))
        if kind == "aids":
            return AidsModel(d["a0"], d["alpha"], d["beta"], d["gamma"])
        if kind in ("linear", "loglinear"):
            beta = np.atleast_2d(np.asarray(d["price_coefs"], dtype=float))
            shift = np.asarray(d.get("shifter_coefs", np.zeros((len(beta), 0))), dtype=float)
            return LinearDemandFit(np.atleast_1d(np.asarray(d["intercept"], dtype=float)), beta,
                                   shift.reshape(len(beta), -1), kind == "loglinear")
    except KeyError as exc:
        raise SchemaError(f"{kind} model is missing coefficient {exc.args[0]!r}") from None
    raise SchemaError(f"unknown demand model kind {kind!r}")


def load_coefficients(path) -> dict:
    """Load ``{name: model}`` from a JSON document of coefficient sets."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if "kind" in doc:
        return {"model": model_from_dict(doc)}
    return {name: model_from_dict(spec) for name, spec in doc.items()}
