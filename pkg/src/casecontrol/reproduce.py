"""Regression checks for the bundled study analysis.

Every number the analysis of the bundled dataset pins down is recomputed
and compared against its reference value: marginal and stratified measures,
the interaction estimate, log-linear and logit fits with their fitted
counts and odds-ratio tables, the smoothed case-control estimates, forward
selection and the deviance decomposition.  ``casecontrol reproduce`` prints
one pass/fail line per value and exits nonzero on any failure.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import loglinear, logit, measures, smoothing
from .data import bundled_table
from .graphs import IndependenceStatement
from .tables import ContingencyTable

# Reference values for the canonical analysis of the bundled dataset.
# Display rounding: odds-ratios and chi-squares to one decimal,
# correlations to two, fitted counts to two.

MARGINAL_MEASURES = {
    # factor: (odds_ratio, lr_chi2, pearson_chi2, pearson_r)
    "V": (9.8, 104.5, 107.6, 0.43),
    "C": (2.0, 13.4, 13.7, 0.15),
    "A": (3.8, 54.5, 53.2, 0.30),
    "E": (3.7, 46.2, 43.9, 0.28),
    "R": (1.3, 1.8, 1.8, 0.06),
}

STRATIFIED_ORS = [
    # (given, expected odr(L,V | given)) in rural then urban strata
    ({"C": 0, "R": 0}, 2.9),
    ({"C": 1, "R": 0}, 27.6),
    ({"C": 0, "R": 1}, 15.8),
    ({"C": 1, "R": 1}, 4.4),
]

CASES_VC_ORS = [
    # odr(V, C | R) within the case slice
    ({"R": 0}, 7.7),
    ({"R": 1}, 1.1),
]

INTERACTION = {"estimate": -3.52, "se": 1.22, "z": -2.9}

LOGLINEAR_FITS = {
    # label: (generators on the named margin, deviance, df)
    "age separated from V,R given C,L": (
        ("L", "V", "C", "R", "A"),
        (("L", "V", "C", "R"), ("A", "C", "L")), 4.7, 12),
    "V separated from R given A,C,L": (
        ("L", "V", "C", "R", "A"),
        (("V", "C", "L", "A"), ("R", "C", "L", "A")), 11.0, 8),
    "V separated from R given C,L (margin)": (
        ("L", "V", "C", "R"),
        (("V", "C", "L"), ("R", "C", "L")), 10.7, 4),
    "cases {V,C,R}{C,A}{E}": (None, (("V", "C", "R"), ("C", "A"), ("E",)), 16.2, 21),
    "controls {V,C}{A,E}{E,R}": (None, (("V", "C"), ("A", "E"), ("E", "R")), 17.9, 23),
}

# Fitted counts under the age-separation model, keyed (V, A, C, R):
# (control estimate, case estimate).
AGE_MODEL_ESTIMATES = {
    (0, 0, 0, 0): (43.24, 4.14), (1, 0, 0, 0): (4.15, 1.15),
    (0, 1, 0, 0): (29.76, 13.86), (1, 1, 0, 0): (2.85, 3.85),
    (0, 0, 1, 0): (16.94, 3.08), (1, 0, 1, 0): (1.30, 6.54),
    (0, 1, 1, 0): (9.06, 4.92), (1, 1, 1, 0): (0.70, 10.46),
    (0, 0, 0, 1): (117.28, 13.81), (1, 0, 0, 1): (5.33, 9.90),
    (0, 1, 0, 1): (80.72, 46.19), (1, 1, 0, 1): (3.67, 33.10),
    (0, 0, 1, 1): (33.89, 11.54), (1, 0, 1, 1): (5.87, 8.85),
    (0, 1, 1, 1): (18.11, 18.46), (1, 1, 1, 1): (3.13, 14.15),
}

# Closed-form control estimates on the (V, C, R) classification.
CONTROL_CLOSED_FORM = {
    (0, 0, 0): 77.8, (1, 0, 0): 4.6, (0, 1, 0): 22.4, (1, 1, 0): 3.2,
    (0, 0, 1): 193.2, (1, 0, 1): 11.4, (0, 1, 1): 55.6, (1, 1, 1): 7.8,
}

# Smoothed odds-ratios of (L, V) given (C, R) from the separate-slice fits.
SMOOTHED_ORS = {(0, 0): 4.7, (1, 0): 15.1, (0, 1): 12.1, (1, 1): 5.4}

# Fitted counts of the separate five-regressor models, keyed (V, C, R, A, E):
# (control estimate, case estimate).
JOINT_MODEL_ESTIMATES = {
    (0, 0, 0, 0, 0): (23.79, 0.85), (0, 0, 0, 0, 1): (19.55, 3.29),
    (1, 0, 0, 0, 0): (1.40, 0.24), (1, 0, 0, 0, 1): (1.15, 0.91),
    (0, 1, 0, 0, 0): (6.85, 0.63), (0, 1, 0, 0, 1): (5.63, 2.44),
    (1, 1, 0, 0, 0): (0.97, 1.35), (1, 1, 0, 0, 1): (0.79, 5.19),
    (0, 0, 1, 0, 0): (85.04, 2.84), (0, 0, 1, 0, 1): (35.94, 10.97),
    (1, 0, 1, 0, 0): (5.02, 2.04), (1, 0, 1, 0, 1): (2.12, 7.86),
    (0, 1, 1, 0, 0): (24.48, 2.38), (0, 1, 1, 0, 1): (10.35, 9.16),
    (1, 1, 1, 0, 0): (3.45, 1.82), (1, 1, 1, 0, 1): (1.46, 7.02),
    (0, 0, 0, 1, 0): (5.04, 2.85), (0, 0, 0, 1, 1): (29.46, 11.00),
    (1, 0, 0, 1, 0): (0.30, 0.79), (1, 0, 0, 1, 1): (1.74, 3.06),
    (0, 1, 0, 1, 0): (1.45, 1.01), (0, 1, 0, 1, 1): (8.48, 3.91),
    (1, 1, 0, 1, 0): (0.20, 2.15), (1, 1, 0, 1, 1): (1.20, 8.31),
    (0, 0, 1, 1, 0): (18.02, 9.51), (0, 0, 1, 1, 1): (54.15, 36.68),
    (1, 0, 1, 1, 0): (1.06, 6.82), (1, 0, 1, 1, 1): (3.20, 26.29),
    (0, 1, 1, 1, 0): (5.19, 3.80), (0, 1, 1, 1, 1): (15.59, 14.66),
    (1, 1, 1, 1, 0): (0.73, 2.91), (1, 1, 1, 1, 1): (2.20, 11.24),
}

# Logit fits: term -> (coefficient, se, z or None); se None means the
# reference value is a suspected misprint and is skipped.
LOGIT_ADDITIVE_BLOCKS = {
    "formula": "L : V*C*R + A*E",
    "deviance": 21.4, "df": 21,
    "terms": {
        "(const)": (-3.37, 0.42, None),
        "V": (1.32, 0.71, None),
        "C": (0.29, 0.50, None),
        "R": (0.34, 0.32, None),
        "V:C": (2.08, None, None),   # reference se 0.16 inconsistent with both fits
        "V:R": (1.30, 0.83, None),
        "C:R": (0.50, 0.58, None),
        "V:C:R": (-3.39, 1.32, -2.56),
        "A": (2.36, 0.43, None),
        "E": (1.96, 0.38, None),
        "A:E": (-1.87, 0.49, -3.79),
    },
}

LOGIT_CLIQUE_TERMS = {
    "formula": "L : V*C*R + C*A + A*E + E*R",
    "deviance": 19.8, "df": 19,
    "terms": {
        "(const)": (-3.49, 0.63, None),
        "V": (1.33, 0.72, None),
        "C": (0.64, 0.57, None),
        "R": (0.30, 0.64, None),
        "V:C": (2.04, 1.14, None),
        "V:R": (1.31, 0.84, None),
        "C:R": (0.50, 0.58, None),
        "V:C:R": (-3.34, 1.32, -2.53),
        "A": (2.56, 0.46, None),
        "C:A": (-0.59, 0.46, -1.26),
        "E": (1.95, 0.64, None),
        "A:E": (-1.88, 0.50, -3.77),
        "R:E": (0.04, 0.65, 0.06),
    },
}

LOGIT_GOF = [
    ("L : (V+C+R)^2", ("L", "V", "C", "R"), 9.2, 1),
    ("L : V*C*R + A", ("L", "V", "C", "R", "A"), 4.1, 7),
    ("L : V*C*R + E", ("L", "V", "C", "R", "E"), 10.1, 7),
]

# Fitted odds-ratios of (L, V): model formula, margin, conditioning order,
# stratum -> value (strata omitted here repeat unchanged).
FITTED_OR_TABLES = [
    ("L : V*C*R + A", ("L", "V", "C", "R", "A"), ("C", "R", "A"),
     {(0, 0, 0): 3.1, (1, 0, 0): 27.3, (0, 1, 0): 14.4, (1, 1, 0): 3.8,
      (0, 0, 1): 3.1, (1, 0, 1): 27.3, (0, 1, 1): 14.4, (1, 1, 1): 3.8}),
    ("L : V*C*R + E", ("L", "V", "C", "R", "E"), ("C", "R", "E"),
     {(0, 0, 0): 3.6, (1, 0, 0): 30.9, (0, 1, 0): 14.3, (1, 1, 0): 4.5,
      (0, 0, 1): 3.6, (1, 0, 1): 30.9, (0, 1, 1): 14.3, (1, 1, 1): 4.5}),
    ("L : V*C*R + A*E", None, ("C", "R"),
     {(0, 0): 3.8, (1, 0): 30.1, (0, 1): 13.7, (1, 1): 3.7}),
]

# Odds-ratios of (L, V) given (C, R, A) under the two separation models.
SEPARATION_MODEL_ORS = {
    "age separated from V,R given C,L": (
        (("L", "V", "C", "R"), ("A", "C", "L")),
        {(0, 0, 0): 2.9, (1, 0, 0): 27.6, (0, 1, 0): 15.8, (1, 1, 0): 4.4,
         (0, 0, 1): 2.9, (1, 0, 1): 27.6, (0, 1, 1): 15.8, (1, 1, 1): 4.4}),
    "V separated from R given A,C,L": (
        (("V", "C", "L", "A"), ("R", "C", "L", "A")),
        {(0, 0, 0): 6.5, (1, 0, 0): 6.6, (0, 1, 0): 6.5, (1, 1, 0): 6.6,
         (0, 0, 1): 15.1, (1, 0, 1): 6.7, (0, 1, 1): 15.1, (1, 1, 1): 6.7}),
}

SELECTED_EDGES = {
    "cases": ("A-C", "C-R", "C-V", "R-V"),
    "controls": ("A-E", "C-V", "E-R"),
}

# Deviance split of (E independent of V,C,R,A) for cases, peeling A, R, V, C.
DECOMPOSITION_PEEL = ("A", "R", "V", "C")
DECOMPOSITION_EXPECTED = [(5.3, 8), (3.7, 4), (2.9, 2), (1.2, 1)]

CONTROL_DIAGNOSTICS = {
    "odr(E,A | R=0)": 7.2,
    "odr(E,A | R=1)": 7.5,
    "odr(E,A)": 7.1,
    "odr(E,R)": 0.5,
}

CASES_SMOKING_BY_AGE_CHI2 = 5.5


@dataclass(frozen=True)
class CheckResult:
    name: str
    expected: object
    actual: object
    tol: float | None
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "expected": self.expected,
                "actual": self.actual, "tol": self.tol, "passed": self.passed}


class _Collector:
    def __init__(self):
        self.results: list[CheckResult] = []

    def value(self, name, expected, actual, tol):
        if actual is None:
            passed = False
        else:
            passed = abs(actual - expected) <= tol + 1e-12
        self.results.append(CheckResult(name, expected, _round(actual), tol, passed))

    def exact(self, name, expected, actual):
        self.results.append(CheckResult(name, expected, actual, None, expected == actual))


def _round(x):
    return None if x is None else round(float(x), 4)


def _or_given(table, response, factor, given_names, levels):
    given = dict(zip(given_names, levels))
    return measures.odds_ratio(measures.two_by_two(table, response, factor, given=given))


def run_checks(table: ContingencyTable | None = None) -> list[CheckResult]:
    """Recompute every pinned value on ``table`` (default: bundled dataset)."""
    t = table if table is not None else bundled_table()
    out = _Collector()

    # marginal measures
    for factor, (odr, lr, pearson, r) in MARGINAL_MEASURES.items():
        rep = measures.pairwise_report(t, "L", factor)
        out.value(f"marginal odds-ratio (L,{factor})", odr, rep.odds_ratio, 0.05)
        out.value(f"marginal LR chi2 (L,{factor})", lr, rep.lr_chi2, 0.05)
        out.value(f"marginal Pearson chi2 (L,{factor})", pearson, rep.pearson_chi2, 0.05)
        out.value(f"marginal correlation (L,{factor})", r, rep.pearson_r, 0.05)

    # stratified odds-ratios
    for given, expected in STRATIFIED_ORS:
        label = ",".join(f"{k}={v}" for k, v in sorted(given.items()))
        actual = measures.odds_ratio(measures.two_by_two(t, "L", "V", given=given))
        out.value(f"odds-ratio (L,V | {label})", expected, actual, 0.05)
    cases6 = t.slice_l("L", 1)
    for given, expected in CASES_VC_ORS:
        label = ",".join(f"{k}={v}" for k, v in sorted(given.items()))
        actual = measures.odds_ratio(measures.two_by_two(cases6, "V", "C", given=given))
        out.value(f"cases odds-ratio (V,C | {label})", expected, actual, 0.05)

    # three-factor interaction from the stratified tables
    strata = {
        (c, r): measures.two_by_two(t, "L", "V", given={"C": c, "R": r})
        for c in (0, 1) for r in (0, 1)
    }
    inter = logit.interaction_from_odds_ratios(strata)
    out.value("interaction estimate", INTERACTION["estimate"], inter.estimate, 0.01)
    out.value("interaction se", INTERACTION["se"], inter.se, 0.01)
    out.value("interaction z", INTERACTION["z"], inter.z, 0.05)

    # log-linear fits
    cases = cases6.marginalize({"V", "C", "R", "A", "E"})
    controls = t.slice_l("L", 0).marginalize({"V", "C", "R", "A", "E"})
    fits = {}
    for label, (margin, gens, dev, df) in LOGLINEAR_FITS.items():
        if label.startswith("cases"):
            obs = cases
        elif label.startswith("controls"):
            obs = controls
        else:
            obs = t.marginalize(set(margin))
        spec = loglinear.LoglinearSpec(obs.schema, gens)
        fit = loglinear.fit_ipf(obs, spec)
        fits[label] = fit
        out.value(f"loglinear deviance [{label}]", dev, fit.deviance, 0.1)
        out.exact(f"loglinear df [{label}]", df, fit.df)
    inter_z = inter.z

    # fitted counts under the age-separation model
    age_fit = fits["age separated from V,R given C,L"].fitted
    for (v, a, c, r), (ctrl_e, case_e) in AGE_MODEL_ESTIMATES.items():
        at = {"V": v, "A": a, "C": c, "R": r}
        out.value(f"age-model control estimate V{v}A{a}C{c}R{r}", ctrl_e,
                  age_fit.cell({**at, "L": 0}), 0.01)
        out.value(f"age-model case estimate V{v}A{a}C{c}R{r}", case_e,
                  age_fit.cell({**at, "L": 1}), 0.01)

    # odds-ratio tables under the two separation models
    for label, (gens, expected) in SEPARATION_MODEL_ORS.items():
        obs = t.marginalize({"L", "V", "C", "R", "A"})
        fit = loglinear.fit_ipf(obs, loglinear.LoglinearSpec(obs.schema, gens))
        for (c, r, a), exp_or in expected.items():
            actual = _or_given(fit.fitted, "L", "V", ("C", "R", "A"), (c, r, a))
            out.value(f"odds-ratio [{label}] C{c}R{r}A{a}", exp_or, actual, 0.1)

    # logit fits
    for model in (LOGIT_ADDITIVE_BLOCKS, LOGIT_CLIQUE_TERMS):
        formula = logit.parse_formula(model["formula"])
        fit = logit.fit_logit(t, formula)
        out.value(f"logit deviance [{model['formula']}]", model["deviance"],
                  fit.deviance_vs_saturated, 0.1)
        out.exact(f"logit df [{model['formula']}]", model["df"], fit.df)
        for term, (coef, se, z) in model["terms"].items():
            out.value(f"logit coef {term} [{model['formula']}]", coef,
                      fit.coefficients.get(term), 0.02)
            if se is not None:
                out.value(f"logit se {term} [{model['formula']}]", se,
                          fit.se.get(term), 0.02)
            if z is not None:
                out.value(f"logit z {term} [{model['formula']}]", z,
                          fit.z_obs.get(term), 0.05)

    for text, margin, dev, df in LOGIT_GOF:
        obs = t.marginalize(set(margin))
        fit = logit.fit_logit(obs, logit.parse_formula(text))
        out.value(f"logit deviance [{text}]", dev, fit.deviance_vs_saturated, 0.1)
        out.exact(f"logit df [{text}]", df, fit.df)
        if text.startswith("L : (V+C+R)^2"):
            out.value("sqrt(deviance) vs |interaction z|",
                      abs(inter_z), fit.deviance_vs_saturated ** 0.5, 0.2)

    # fitted odds-ratio tables
    for text, margin, given, expected in FITTED_OR_TABLES:
        obs = t.marginalize(set(margin)) if margin else t
        fit = logit.fit_logit(obs, logit.parse_formula(text))
        ors = logit.fitted_odds_ratios(fit, ("L", "V"), given)
        for levels, exp_or in expected.items():
            label = "".join(f"{v}{l}" for v, l in zip(given, levels))
            out.value(f"fitted odds-ratio [{text}] {label}", exp_or, ors[levels], 0.1)

    # closed-form control estimates and smoothed odds-ratios
    closed = loglinear.fit_closed_form_casecontrol(t.marginalize({"L", "V", "C", "R"}))
    for (v, c, r), expected in CONTROL_CLOSED_FORM.items():
        out.value(f"control closed-form estimate V{v}C{c}R{r}", expected,
                  closed.controls.cell({"V": v, "C": c, "R": r}), 0.05)
    model4 = smoothing.CaseControlModel.from_generators(
        t.marginalize({"L", "V", "C", "R"}),
        case_generators=[("V", "C", "R")],
        control_generators=[("V", "C"), ("R",)])
    smoothed4 = smoothing.smooth(t.marginalize({"L", "V", "C", "R"}), model4)
    ors4 = smoothed4.odds_ratios("V", ("C", "R"))
    for (c, r), expected in SMOOTHED_ORS.items():
        out.value(f"smoothed odds-ratio (L,V) C{c}R{r}", expected, ors4[(c, r)], 0.05)

    # separate five-regressor models: fitted counts and smoothed odds-ratios
    model6 = smoothing.CaseControlModel.from_generators(
        t, case_generators=[("V", "C", "R"), ("C", "A"), ("E",)],
        control_generators=[("V", "C"), ("A", "E"), ("E", "R")])
    smoothed6 = smoothing.smooth(t, model6)
    for (v, c, r, a, e), (ctrl_e, case_e) in JOINT_MODEL_ESTIMATES.items():
        at = {"V": v, "C": c, "R": r, "A": a, "E": e}
        out.value(f"joint-model control estimate V{v}C{c}R{r}A{a}E{e}", ctrl_e,
                  smoothed6.fitted_joint.cell({**at, "L": 0}), 0.05)
        out.value(f"joint-model case estimate V{v}C{c}R{r}A{a}E{e}", case_e,
                  smoothed6.fitted_joint.cell({**at, "L": 1}), 0.05)
    ors6 = smoothed6.odds_ratios("V", ("C", "R", "A", "E"))
    for (c, r), expected in SMOOTHED_ORS.items():
        for a in (0, 1):
            for e in (0, 1):
                out.value(f"smoothed odds-ratio (L,V) C{c}R{r}A{a}E{e}", expected,
                          ors6[(c, r, a, e)], 0.05)

    # forward selection
    for label, obs in (("cases", cases), ("controls", controls)):
        selected = loglinear.forward_select(obs, alpha=0.2)
        edges = tuple(sorted(f"{a}-{b}" for a, b, _ in selected.edges))
        out.exact(f"forward selection edges [{label}]", SELECTED_EDGES[label], edges)

    # deviance decomposition for cases
    seq = loglinear.peel_sequence("E", DECOMPOSITION_PEEL)
    steps = loglinear.deviance_decomposition(cases, seq)
    for (stmt, _), (dev, df), (exp_dev, exp_df) in zip(seq, steps, DECOMPOSITION_EXPECTED):
        out.value(f"decomposition step {stmt}", exp_dev, dev, 0.1)
        out.exact(f"decomposition df {stmt}", exp_df, df)

    # control-sample diagnostics and the cases smoking-by-age test
    ctrl6 = t.slice_l("L", 0)
    out.value("odr(E,A | R=0)", CONTROL_DIAGNOSTICS["odr(E,A | R=0)"],
              measures.odds_ratio(measures.two_by_two(ctrl6, "E", "A", given={"R": 0})), 0.05)
    out.value("odr(E,A | R=1)", CONTROL_DIAGNOSTICS["odr(E,A | R=1)"],
              measures.odds_ratio(measures.two_by_two(ctrl6, "E", "A", given={"R": 1})), 0.05)
    out.value("odr(E,A)", CONTROL_DIAGNOSTICS["odr(E,A)"],
              measures.odds_ratio(measures.two_by_two(ctrl6, "E", "A")), 0.05)
    out.value("odr(E,R)", CONTROL_DIAGNOSTICS["odr(E,R)"],
              measures.odds_ratio(measures.two_by_two(ctrl6, "E", "R")), 0.05)
    rep = measures.pairwise_report(cases6, "C", "A")
    out.value("cases smoking-by-age LR chi2", CASES_SMOKING_BY_AGE_CHI2, rep.lr_chi2, 0.1)

    return out.results
