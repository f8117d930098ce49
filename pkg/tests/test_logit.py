import itertools
import math

import numpy as np
import pytest

from casecontrol import (
    DataError,
    LoglinearSpec,
    TwoByTwo,
    fit_ipf,
    fit_logit,
    fitted_odds_ratios,
    from_cells,
    interaction_from_odds_ratios,
    parse_formula,
    two_by_two,
)
from casecontrol.logit import FormulaError, loglik_and_gradient, score_residuals


# -- formula parsing -------------------------------------------------------------

def term_set(formula):
    return {":".join(t) for t in formula.terms}


def test_parse_three_way_plus_interaction():
    f = parse_formula("L : V*C*R + A*E")
    assert f.response == "L"
    assert term_set(f) == {"V", "C", "R", "A", "E",
                           "V:C", "V:R", "C:R", "A:E", "V:C:R"}
    assert f.n_parameters == 11


def test_parse_squared_group():
    f = parse_formula("L : (V+C+R)^2")
    assert term_set(f) == {"V", "C", "R", "V:C", "V:R", "C:R"}
    assert "V:C:R" not in term_set(f)


def test_parse_intercept_only():
    f = parse_formula("L :")
    assert f.terms == ()
    assert f.n_parameters == 1


def test_parse_tilde_and_whitespace():
    assert parse_formula("L~V*C").terms == parse_formula("  L :  V * C ").terms


def test_parse_closure_is_deduplicated():
    f = parse_formula("L : V*C + C*V + V + C")
    assert term_set(f) == {"V", "C", "V:C"}


def test_parse_term_order_is_deterministic():
    f = parse_formula("L : V*C*R + C*A + A*E + E*R")
    assert f.term_names() == ["V", "C", "R", "A", "E", "V:C", "V:R", "C:R",
                              "C:A", "R:E", "A:E", "V:C:R"]


def test_parse_errors_carry_positions():
    with pytest.raises(FormulaError, match="position"):
        parse_formula("L V")
    with pytest.raises(FormulaError, match="position"):
        parse_formula("L : V +")
    with pytest.raises(FormulaError, match="position"):
        parse_formula("L : (V+C")
    with pytest.raises(FormulaError, match="response"):
        parse_formula("L : L*V")
    with pytest.raises(FormulaError, match="repeated"):
        parse_formula("L : V*V")


def test_unknown_variable_at_bind_time(study):
    f = parse_formula("L : V*S")
    with pytest.raises(DataError, match="unknown variable"):
        fit_logit(study, f)


# -- reference fits ----------------------------------------------------------------

ADDITIVE_BLOCKS = {
    # term: (coefficient, se)
    "(const)": (-3.37, 0.42), "V": (1.32, 0.71), "C": (0.29, 0.50),
    "R": (0.34, 0.32), "V:C": (2.08, None), "V:R": (1.30, 0.83),
    "C:R": (0.50, 0.58), "V:C:R": (-3.39, 1.32), "A": (2.36, 0.43),
    "E": (1.96, 0.38), "A:E": (-1.87, 0.49),
}


def test_fit_additive_blocks_model(study):
    fit = fit_logit(study, parse_formula("L : V*C*R + A*E"))
    assert fit.converged
    assert fit.deviance_vs_saturated == pytest.approx(21.4, abs=0.1)
    assert fit.df == 21
    for term, (coef, se) in ADDITIVE_BLOCKS.items():
        assert fit.coefficients[term] == pytest.approx(coef, abs=0.02), term
        if se is not None:
            assert fit.se[term] == pytest.approx(se, abs=0.02), term
    assert fit.z_obs["V:C:R"] == pytest.approx(-2.56, abs=0.05)
    assert fit.z_obs["A:E"] == pytest.approx(-3.79, abs=0.05)


def test_fit_clique_terms_model(study):
    fit = fit_logit(study, parse_formula("L : V*C*R + C*A + A*E + E*R"))
    assert fit.deviance_vs_saturated == pytest.approx(19.8, abs=0.1)
    assert fit.df == 19
    assert fit.coefficients["V:C:R"] == pytest.approx(-3.34, abs=0.02)
    assert fit.se["V:C:R"] == pytest.approx(1.32, abs=0.02)
    assert fit.z_obs["V:C:R"] == pytest.approx(-2.53, abs=0.05)
    assert fit.coefficients["C:A"] == pytest.approx(-0.59, abs=0.02)
    assert fit.coefficients["R:E"] == pytest.approx(0.04, abs=0.02)


def test_goodness_of_fit_models(study):
    no_triple = fit_logit(study.marginalize({"L", "V", "C", "R"}),
                          parse_formula("L : (V+C+R)^2"))
    assert no_triple.deviance_vs_saturated == pytest.approx(9.2, abs=0.1)
    assert no_triple.df == 1

    plus_age = fit_logit(study.marginalize({"L", "V", "C", "R", "A"}),
                         parse_formula("L : V*C*R + A"))
    assert plus_age.deviance_vs_saturated == pytest.approx(4.1, abs=0.1)
    assert plus_age.df == 7

    plus_edu = fit_logit(study.marginalize({"L", "V", "C", "R", "E"}),
                         parse_formula("L : V*C*R + E"))
    assert plus_edu.deviance_vs_saturated == pytest.approx(10.1, abs=0.1)
    assert plus_edu.df == 7


def test_saturated_logit_reproduces_counts(study):
    lvcr = study.marginalize({"L", "V", "C", "R"})
    fit = fit_logit(lvcr, parse_formula("L : V*C*R"))
    assert fit.df == 0
    assert fit.deviance_vs_saturated == pytest.approx(0.0, abs=1e-8)
    # the three-factor term equals the log odds-ratio difference of differences
    assert fit.coefficients["V:C:R"] == pytest.approx(-3.52, abs=0.01)


def test_intercept_only_fit(study):
    fit = fit_logit(study.marginalize({"L", "V"}), parse_formula("L :"))
    p = study.marginalize({"L"}).cell({"L": 1}) / study.total
    for prob in fit.fitted_probabilities.values():
        assert prob == pytest.approx(p, rel=1e-8)


def test_logit_equals_equivalent_loglinear(study):
    # terms {V*C*R, A*E} for L correspond to the log-linear model with
    # generators {L,V,C,R}, {L,A,E} and the saturated regressor margin
    logit_fit = fit_logit(study, parse_formula("L : V*C*R + A*E"))
    spec = LoglinearSpec(study.schema,
                         (("L", "V", "C", "R"), ("L", "A", "E"), ("V", "C", "R", "A", "E")))
    ll_fit = fit_ipf(study, spec, tol=1e-12, max_iter=100_000)
    assert logit_fit.deviance_vs_saturated == pytest.approx(ll_fit.deviance, abs=1e-6)
    assert logit_fit.df == ll_fit.df


def test_score_equations_hold_at_optimum(study):
    fit = fit_logit(study, parse_formula("L : V*C*R + A*E"))
    score = score_residuals(study, fit)
    assert np.max(np.abs(score)) < 1e-6


def test_gradient_matches_finite_differences(study):
    f = parse_formula("L : V*C + A")
    fit = fit_logit(study, f)
    names = ["(const)"] + f.term_names()
    beta_hat = np.array([fit.coefficients[n] for n in names])
    rng = np.random.default_rng(11)
    points = [beta_hat] + [rng.normal(scale=0.8, size=beta_hat.size) for _ in range(5)]
    h = 1e-6
    for beta in points:
        _, grad = loglik_and_gradient(study, f, beta)
        for j in range(beta.size):
            e = np.zeros_like(beta)
            e[j] = h
            up, _ = loglik_and_gradient(study, f, beta + e)
            dn, _ = loglik_and_gradient(study, f, beta - e)
            fd = (up - dn) / (2 * h)
            scale = max(1.0, abs(fd))
            assert abs(grad[j] - fd) / scale < 1e-5


def test_separation_is_flagged():
    t = from_cells(("L", "X"), {(1, 1): 30.0, (0, 0): 30.0, (1, 0): 0.0, (0, 1): 0.0})
    fit = fit_logit(t, parse_formula("L : X"))
    assert not fit.converged
    assert "separation" in fit.message


def test_iteration_budget_exhaustion(study):
    fit = fit_logit(study, parse_formula("L : V*C*R + A*E"), max_iter=2)
    assert not fit.converged
    assert "convergence" in fit.message


# -- interaction estimate ------------------------------------------------------------

def vodka_strata(study):
    return {(c, r): two_by_two(study, "L", "V", given={"C": c, "R": r})
            for c in (0, 1) for r in (0, 1)}


def test_interaction_from_stratified_tables(study):
    est = interaction_from_odds_ratios(vodka_strata(study))
    assert est.estimate == pytest.approx(-3.52, abs=0.01)
    assert est.se == pytest.approx(1.22, abs=0.01)
    assert est.z == pytest.approx(-2.9, abs=0.05)


def test_interaction_consistency_with_deviance(study):
    est = interaction_from_odds_ratios(vodka_strata(study))
    fit = fit_logit(study.marginalize({"L", "V", "C", "R"}), parse_formula("L : (V+C+R)^2"))
    assert abs(est.z) == pytest.approx(math.sqrt(fit.deviance_vs_saturated), abs=0.2)


def test_interaction_identical_strata_is_zero():
    t = TwoByTwo(12, 7, 9, 30)
    est = interaction_from_odds_ratios({k: t for k in [(0, 0), (0, 1), (1, 0), (1, 1)]})
    assert est.estimate == pytest.approx(0.0, abs=1e-12)
    assert est.z == pytest.approx(0.0, abs=1e-12)


def test_interaction_needs_positive_cells():
    good = TwoByTwo(2, 3, 4, 5)
    bad = TwoByTwo(0, 3, 4, 5)
    strata = {(0, 0): good, (0, 1): good, (1, 0): good, (1, 1): bad}
    with pytest.raises(DataError, match="positive"):
        interaction_from_odds_ratios(strata)
    with pytest.raises(DataError, match="strata"):
        interaction_from_odds_ratios({(0, 0): good})


# -- fitted odds-ratio tables -----------------------------------------------------------

def test_fitted_ors_additive_age_model(study):
    fit = fit_logit(study.marginalize({"L", "V", "C", "R", "A"}),
                    parse_formula("L : V*C*R + A"))
    ors = fitted_odds_ratios(fit, ("L", "V"), ("C", "R", "A"))
    expected = {(0, 0): 3.1, (1, 0): 27.3, (0, 1): 14.4, (1, 1): 3.8}
    for (c, r), value in expected.items():
        assert ors[(c, r, 0)] == pytest.approx(value, abs=0.1)
        assert ors[(c, r, 1)] == pytest.approx(value, abs=0.1)
    # additive A: constant across its levels, so conditioning may omit it
    collapsed = fitted_odds_ratios(fit, ("L", "V"), ("C", "R"))
    for (c, r), value in expected.items():
        assert collapsed[(c, r)] == pytest.approx(ors[(c, r, 0)], rel=1e-9)


def test_fitted_ors_blocks_model(study):
    fit = fit_logit(study, parse_formula("L : V*C*R + A*E"))
    ors = fitted_odds_ratios(fit, ("L", "V"), ("C", "R", "A", "E"))
    expected = {(0, 0): 3.8, (1, 0): 30.1, (0, 1): 13.7, (1, 1): 3.7}
    for (c, r), value in expected.items():
        for a in (0, 1):
            for e in (0, 1):
                assert ors[(c, r, a, e)] == pytest.approx(value, abs=0.1)


def test_fitted_ors_saturated_match_observed(study):
    lvcr = study.marginalize({"L", "V", "C", "R"})
    fit = fit_logit(lvcr, parse_formula("L : V*C*R"))
    ors = fitted_odds_ratios(fit, ("L", "V"), ("C", "R"))
    from casecontrol import odds_ratio
    for (c, r), value in ors.items():
        observed = odds_ratio(two_by_two(lvcr, "L", "V", given={"C": c, "R": r}))
        assert value == pytest.approx(observed, rel=1e-8)


def test_fitted_ors_reject_varying_stratum(study):
    fit = fit_logit(study.marginalize({"L", "V", "C"}), parse_formula("L : V*C"))
    with pytest.raises(DataError, match="varies"):
        fitted_odds_ratios(fit, ("L", "V"), ())
    with pytest.raises(DataError, match="factor"):
        fitted_odds_ratios(fit, ("L", "S"), ())
