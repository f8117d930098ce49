"""Logit regression of a binary response on categorical regressors.

Models are written in Wilkinson notation, e.g. ``L : V*C*R + A*E`` or
``L : (V+C+R)^2``; a formula expands to a hierarchically closed term list
plus an always-present intercept.  Fitting is grouped-binomial maximum
likelihood over the cells of the regressor classification, by iteratively
reweighted least squares with step halving.

Coding is dummy 0/1 with level 1 active: the intercept is the log odds of
the response at the all-zero regressor cell, and each term's column is the
product of its variables' levels.  The reported fit statistic is the
likelihood-ratio deviance against the saturated logit, whose df is the
number of regressor cells minus the number of model terms (intercept
included).
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .special import chi2_sf
from .tables import CellAddress, ContingencyTable, DataError
from .measures import TwoByTwo

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100


class FormulaError(ValueError):
    """Malformed formula text; the message carries the offending position."""


_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<int>\d+)|(?P<sym>[:~+*()^]))")


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise FormulaError(f"unexpected character {text[pos]!r} at position {pos}")
            break
        if m.group("name"):
            out.append(("name", m.group("name"), m.start("name")))
        elif m.group("int"):
            out.append(("int", m.group("int"), m.start("int")))
        else:
            out.append(("sym", m.group("sym"), m.start("sym")))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


@dataclass(frozen=True)
class LogitFormula:
    """Response name plus the hierarchically closed model terms.

    ``terms`` excludes the intercept, which is always present.  Each term is
    a tuple of variable names; the list is deduplicated and ordered by term
    size, then by first appearance of the variables in the formula.
    """

    response: str
    terms: tuple[tuple[str, ...], ...]

    @property
    def n_parameters(self) -> int:
        return len(self.terms) + 1

    def term_names(self) -> list[str]:
        return [term_name(t) for t in self.terms]

    def __str__(self):
        maximal = [t for t in self.terms
                   if not any(set(t) < set(o) for o in self.terms)]
        rhs = " + ".join("*".join(t) for t in maximal)
        return f"{self.response} : {rhs}" if rhs else f"{self.response} :"


def term_name(term: tuple[str, ...]) -> str:
    return ":".join(term)


def parse_formula(text: str) -> LogitFormula:
    """Parse ``RESP : term (+ term)*`` with ``term := var (* var)*`` or a
    parenthesized sum raised to a power, ``(a+b+c)^2``, expanding to all
    interactions up to that order.  ``~`` is accepted for ``:``; whitespace
    is insignificant.  ``RESP :`` alone is the intercept-only model."""
    tokens = _tokenize(text)
    i = 0

    def peek():
        return tokens[i]

    def take(kind, value=None):
        nonlocal i
        tk, tv, tp = tokens[i]
        if tk != kind or (value is not None and tv != value):
            want = value or kind
            raise FormulaError(f"expected {want!r} at position {tp}, found {tv or 'end of input'!r}")
        i += 1
        return tv

    response = take("name")
    tk, tv, tp = peek()
    if not (tk == "sym" and tv in (":", "~")):
        raise FormulaError(f"expected ':' or '~' at position {tp}")
    take("sym")

    appearance: dict[str, int] = {response: 0}

    def note(var):
        appearance.setdefault(var, len(appearance))
        return var

    products: list[tuple[str, ...]] = []

    def parse_group():
        take("sym", "(")
        names = [note(take("name"))]
        while peek()[:2] == ("sym", "+"):
            take("sym")
            names.append(note(take("name")))
        take("sym", ")")
        take("sym", "^")
        power_pos = peek()[2]
        power = int(take("int"))
        if power < 1:
            raise FormulaError(f"power must be >= 1 at position {power_pos}")
        for r in range(1, min(power, len(names)) + 1):
            products.extend(itertools.combinations(names, r))

    def parse_product():
        names = [note(take("name"))]
        while peek()[:2] == ("sym", "*"):
            take("sym")
            names.append(note(take("name")))
        products.append(tuple(names))

    while peek()[0] != "end":
        if peek()[:2] == ("sym", "("):
            parse_group()
        else:
            parse_product()
        if peek()[:2] == ("sym", "+"):
            take("sym")
            if peek()[0] == "end":
                raise FormulaError(f"dangling '+' at position {peek()[2]}")
            continue
        if peek()[0] != "end":
            tk, tv, tp = peek()
            raise FormulaError(f"unexpected {tv!r} at position {tp}")

    closed: set[tuple[str, ...]] = set()
    for prod in products:
        if response in prod:
            raise FormulaError(f"response {response!r} cannot appear as a regressor")
        if len(set(prod)) != len(prod):
            raise FormulaError(f"repeated variable in term {'*'.join(prod)}")
        ordered = tuple(sorted(prod, key=appearance.__getitem__))
        for r in range(1, len(ordered) + 1):
            closed.update(itertools.combinations(ordered, r))
    terms = sorted(closed, key=lambda t: (len(t), tuple(appearance[v] for v in t)))
    return LogitFormula(response=response, terms=tuple(terms))


@dataclass(frozen=True)
class LogitFit:
    """Maximum-likelihood fit of a logit model over regressor cells.

    Coefficient maps are keyed by term name (colon-joined variables, with
    ``(const)`` for the intercept).  ``fitted_probabilities`` is keyed by
    the regressor-cell level tuple, in ``regressors`` order.
    """

    formula: LogitFormula
    regressors: tuple[str, ...]
    coefficients: dict
    se: dict
    z_obs: dict
    deviance_vs_saturated: float
    df: int
    fitted_probabilities: dict
    converged: bool
    iterations: int
    message: str = field(default="", compare=False)

    @property
    def p_value(self) -> float:
        if self.df == 0:
            return 1.0
        return chi2_sf(self.deviance_vs_saturated, self.df)


def _design(formula: LogitFormula, regressors, cells) -> np.ndarray:
    idx = {v: i for i, v in enumerate(regressors)}
    for term in formula.terms:
        for v in term:
            if v not in idx:
                raise DataError(f"unknown variable {v!r} in formula")
    X = np.ones((len(cells), formula.n_parameters))
    for j, term in enumerate(formula.terms, start=1):
        cols = [idx[v] for v in term]
        for i, cell in enumerate(cells):
            X[i, j] = float(all(cell[c] == 1 for c in cols))
    return X


def _binomial_loglik(y, n, eta):
    # log-likelihood up to the constant binomial coefficients
    return float(np.sum(y * eta - n * np.logaddexp(0.0, eta)))


def fit_logit(observed: ContingencyTable, f: LogitFormula,
              tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> LogitFit:
    """Fit a binomial logit for ``f.response`` over the cells of all other
    variables of ``observed``.

    IRLS from a zero start with step halving on likelihood decrease.
    Convergence requires the largest score component below ``tol`` and a
    relative deviance change below 1e-10.  Divergence or an exhausted
    iteration budget returns ``converged=False`` with a diagnostic message.
    Regressor cells with no observations are dropped from the likelihood
    and from the saturated-model cell count.
    """
    observed.schema.axis(f.response)
    regressors = tuple(v for v in observed.variables if v != f.response)
    if not regressors:
        raise DataError("no regressor variables in the table")

    all_cells = list(itertools.product((0, 1), repeat=len(regressors)))
    y_all, n_all = [], []
    for cell in all_cells:
        at = dict(zip(regressors, cell))
        y_all.append(observed.cell({**at, f.response: 1}))
        n_all.append(observed.cell({**at, f.response: 0}) + y_all[-1])
    occupied = [i for i, n in enumerate(n_all) if n > 0]
    cells = [all_cells[i] for i in occupied]
    y = np.array([y_all[i] for i in occupied])
    n = np.array([n_all[i] for i in occupied])

    X = _design(f, regressors, cells)
    if X.shape[0] < X.shape[1]:
        raise DataError("more model terms than occupied regressor cells")

    beta = np.zeros(X.shape[1])
    loglik = _binomial_loglik(y, n, X @ beta)
    converged = False
    message = ""
    iterations = 0
    info = None
    for iterations in range(1, max_iter + 1):
        eta = X @ beta
        p = 1.0 / (1.0 + np.exp(-eta))
        score = X.T @ (y - n * p)
        w = n * p * (1.0 - p)
        info = X.T @ (X * w[:, None])
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            message = "singular information matrix (separation or collinear terms)"
            break
        # step halving: never accept a likelihood decrease
        scale = 1.0
        for _ in range(30):
            candidate = beta + scale * step
            cand_ll = _binomial_loglik(y, n, X @ candidate)
            if cand_ll >= loglik - 1e-12:
                break
            scale *= 0.5
        delta_ll = cand_ll - loglik
        beta, loglik = candidate, cand_ll
        if not np.all(np.isfinite(beta)):
            message = "diverging coefficients (separation)"
            break
        if np.max(np.abs(score)) < tol and abs(delta_ll) <= 1e-10 * (abs(loglik) + 1.0):
            converged = True
            break
    if not converged and not message:
        message = f"no convergence within {max_iter} iterations"

    eta = X @ beta
    if converged and np.max(np.abs(eta)) > 23.0:
        # fitted probabilities within 1e-10 of 0 or 1: the score vanishes
        # numerically while the MLE sits at infinity
        converged = False
        message = "fitted probabilities numerically 0 or 1 (separation)"
    p = 1.0 / (1.0 + np.exp(-eta))
    mu = n * p

    def xlogy(a, b):
        out = np.zeros_like(a, dtype=float)
        mask = a > 0
        out[mask] = a[mask] * np.log(a[mask] / b[mask])
        return out

    dev = float(2.0 * np.sum(xlogy(y, mu) + xlogy(n - y, n - mu)))

    w = n * p * (1.0 - p)
    info = X.T @ (X * w[:, None])
    try:
        cov = np.linalg.inv(info)
        se_vec = np.sqrt(np.diag(cov))
    except np.linalg.LinAlgError:
        se_vec = np.full(X.shape[1], np.nan)

    names = ["(const)"] + f.term_names()
    coefficients = dict(zip(names, beta.tolist()))
    se = dict(zip(names, se_vec.tolist()))
    z = {name: (coefficients[name] / se[name] if se[name] and math.isfinite(se[name]) else math.nan)
         for name in names}
    return LogitFit(
        formula=f,
        regressors=regressors,
        coefficients=coefficients,
        se=se,
        z_obs=z,
        deviance_vs_saturated=dev,
        df=len(cells) - X.shape[1],
        fitted_probabilities={cell: float(pi) for cell, pi in zip(cells, p)},
        converged=converged,
        iterations=iterations,
        message=message,
    )


def score_residuals(observed: ContingencyTable, fit: LogitFit) -> np.ndarray:
    """Score vector at the fitted coefficients, one entry per model term.

    Zero (to within convergence tolerance) at the maximum; exposed for the
    score-equation checks in the test suite."""
    regressors = fit.regressors
    cells = sorted(fit.fitted_probabilities)
    y = np.array([observed.cell({**dict(zip(regressors, c)), fit.formula.response: 1})
                  for c in cells])
    n = np.array([observed.cell({**dict(zip(regressors, c)), fit.formula.response: 0})
                  for c in cells]) + y
    X = _design(fit.formula, regressors, cells)
    p = np.array([fit.fitted_probabilities[c] for c in cells])
    return X.T @ (y - n * p)


def loglik_and_gradient(observed: ContingencyTable, f: LogitFormula,
                        beta: np.ndarray) -> tuple[float, np.ndarray]:
    """Grouped-binomial log-likelihood (up to constants) and its gradient at
    an arbitrary coefficient vector, for derivative checks."""
    observed.schema.axis(f.response)
    regressors = tuple(v for v in observed.variables if v != f.response)
    cells = [c for c in itertools.product((0, 1), repeat=len(regressors))]
    y = np.array([observed.cell({**dict(zip(regressors, c)), f.response: 1}) for c in cells])
    n = np.array([observed.cell({**dict(zip(regressors, c)), f.response: 0}) for c in cells]) + y
    X = _design(f, regressors, cells)
    beta = np.asarray(beta, dtype=float)
    eta = X @ beta
    p = 1.0 / (1.0 + np.exp(-eta))
    return _binomial_loglik(y, n, eta), X.T @ (y - n * p)


@dataclass(frozen=True)
class InteractionEstimate:
    estimate: float
    se: float | None
    z: float | None


def interaction_from_odds_ratios(strata) -> InteractionEstimate:
    """Log odds-ratio difference of differences across two binary modifiers.

    ``strata`` maps (m1, m2) level pairs to the four 2x2 tables.  The
    estimate is log or(1,1) - log or(1,0) - log or(0,1) + log or(0,0); its
    standard error is the square root of the summed reciprocals of all
    sixteen cells, undefined if any cell is empty.
    """
    needed = {(0, 0), (0, 1), (1, 0), (1, 1)}
    if set(strata) != needed:
        raise DataError("need exactly the four modifier-level strata")

    def log_or(t: TwoByTwo) -> float:
        if min(t.n11, t.n10, t.n01, t.n00) <= 0:
            raise DataError("interaction estimate needs all sixteen cells positive")
        return math.log((t.n11 * t.n00) / (t.n10 * t.n01))

    est = (log_or(strata[(1, 1)]) - log_or(strata[(1, 0)])
           - log_or(strata[(0, 1)]) + log_or(strata[(0, 0)]))
    cells = [c for t in strata.values() for c in (t.n11, t.n10, t.n01, t.n00)]
    if any(c == 0 for c in cells):
        return InteractionEstimate(est, None, None)
    se = math.sqrt(sum(1.0 / c for c in cells))
    return InteractionEstimate(est, se, est / se)


def fitted_odds_ratios(fit: LogitFit, pair: tuple[str, str], given,
                       rel_tol: float = 1e-6) -> dict:
    """Odds-ratios of (response, factor) from the fitted probabilities, one
    entry per level combination of ``given``.

    ``given`` may omit regressors; the ratio must then be constant over the
    omitted ones (as it is when they enter without interacting with the
    factor), otherwise this raises.  Keys are level tuples in the order of
    ``given`` as listed.
    """
    response, factor = pair
    if response != fit.formula.response:
        raise DataError(f"fit is for response {fit.formula.response!r}")
    if factor not in fit.regressors:
        raise DataError(f"factor {factor!r} not among the regressors")
    given = tuple(given)
    for v in given:
        if v not in fit.regressors or v == factor:
            raise DataError(f"bad conditioning variable {v!r}")

    fi = fit.regressors.index(factor)
    gi = [fit.regressors.index(v) for v in given]
    out: dict[tuple[int, ...], float] = {}
    for cell, p1 in fit.fitted_probabilities.items():
        if cell[fi] != 1:
            continue
        base = tuple(0 if i == fi else lv for i, lv in enumerate(cell))
        if base not in fit.fitted_probabilities:
            continue
        p0 = fit.fitted_probabilities[base]
        ratio = (p1 / (1 - p1)) / (p0 / (1 - p0))
        key = tuple(cell[i] for i in gi)
        if key in out and not math.isclose(out[key], ratio, rel_tol=rel_tol):
            raise DataError(
                f"odds-ratio varies within conditioning stratum {key}; condition on more variables")
        out[key] = ratio
    return out
