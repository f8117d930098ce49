"""Full analysis walkthrough on the bundled study data.

Runs the whole pipeline in order: marginal dependences, stratified
odds-ratios, the three-factor interaction, added-regressor logit models,
separate structure selection for cases and controls, smoothed odds-ratios
from the recombined fits, and the collapsibility diagnostics of the
control structure.  Output goes to stdout; every printed number is also
covered by `casecontrol reproduce`.

Usage: python scripts/run_analysis.py
"""

import itertools

from casecontrol import (
    CaseControlModel,
    check_or_collapsibility,
    fit_logit,
    forward_select,
    interaction_from_odds_ratios,
    measures,
    mixing_artifact_demo,
    parse_formula,
    smooth,
    two_by_two,
)
from casecontrol import loglinear
from casecontrol.data import bundled_table


def hrule(title):
    print()
    print(f"== {title} ==")


def fmt(value, nd=1):
    return "-" if value is None else f"{value:.{nd}f}"


def main():
    t = bundled_table()
    cases = t.slice_l("L", 1)
    controls = t.slice_l("L", 0)
    print(f"study table: n = {t.total:.0f} "
          f"({cases.total:.0f} cases, {controls.total:.0f} controls)")

    hrule("marginal dependences on case status")
    print(f"{'pair':<8} {'odds-ratio':>10} {'LR chi2':>9} {'Pearson':>9} {'corr':>6}")
    for factor in "VCAER":
        rep = measures.pairwise_report(t, "L", factor)
        print(f"(L,{factor})   {fmt(rep.odds_ratio):>10} {fmt(rep.lr_chi2):>9}"
              f" {fmt(rep.pearson_chi2):>9} {rep.pearson_r:>6.2f}")

    hrule("odds-ratios of (L,V) by smoking level and region")
    for r in (0, 1):
        row = [fmt(measures.odds_ratio(two_by_two(t, "L", "V", given={"C": c, "R": r})))
               for c in (0, 1)]
        print(f"region R={r}: regular {row[0]:>6}   heavy {row[1]:>6}")

    strata = {(c, r): two_by_two(t, "L", "V", given={"C": c, "R": r})
              for c in (0, 1) for r in (0, 1)}
    inter = interaction_from_odds_ratios(strata)
    print(f"three-factor interaction: {inter.estimate:.2f} "
          f"(se {inter.se:.2f}, z {inter.z:.1f})")

    hrule("logit models for L")
    for text in ("L : (V+C+R)^2", "L : V*C*R + A", "L : V*C*R + E",
                 "L : V*C*R + C*A + A*E + E*R", "L : V*C*R + A*E"):
        margin = {"L"} | {v for term in parse_formula(text).terms for v in term}
        fit = fit_logit(t.marginalize(margin) if len(margin) < 6 else t,
                        parse_formula(text))
        print(f"{text:<30} deviance {fit.deviance_vs_saturated:5.1f} "
              f"on {fit.df:2d} df  (p = {fit.p_value:.2f})")
    final = fit_logit(t, parse_formula("L : V*C*R + A*E"))
    print("selected model terms (coeff, se, z for highest-order terms):")
    for name, coeff in final.coefficients.items():
        z = final.z_obs[name]
        mark = f" z = {z:6.2f}" if name in ("V:C:R", "A:E") else ""
        print(f"  {name.replace(':', ''):<8} {coeff:6.2f} ({final.se[name]:.2f}){mark}")

    hrule("separate structures for cases and controls (alpha = 0.2)")
    for label, slice_ in (("cases", cases), ("controls", controls)):
        g = forward_select(slice_, alpha=0.2)
        fit = loglinear.fit_ipf(slice_, loglinear.clique_spec(slice_.schema, g))
        edges = ", ".join(sorted(f"{a}-{b}" for a, b, _ in g.edges))
        print(f"{label:<9} edges: {edges:<24} fit {fit.deviance:.1f} on {fit.df} df")

    hrule("smoothed odds-ratios from the recombined separate fits")
    model = CaseControlModel.from_generators(
        t, case_generators=[("V", "C", "R"), ("C", "A"), ("E",)],
        control_generators=[("V", "C"), ("A", "E"), ("E", "R")])
    est = smooth(t, model)
    ors = est.odds_ratios("V", ("C", "R", "A", "E"))
    ses = est.odds_ratio_ses("V", ("C", "R", "A", "E"))
    print("odr(L,V | C,R): constant over A and E")
    for c, r in itertools.product((0, 1), repeat=2):
        key = (c, r, 0, 0)
        saturated = measures.log_or_se(two_by_two(t, "L", "V", given={"C": c, "R": r}))
        print(f"  C={c} R={r}: {ors[key]:5.1f}   log-se {ses[key]:.3f}"
              f" (saturated {saturated:.3f})")

    hrule("diagnostics of the control structure")
    rep = check_or_collapsibility(controls, "E", "A", "R", alpha=0.05)
    print(f"odr(E,A | R): {fmt(rep.conditional[0])}, {fmt(rep.conditional[1])}"
          f" -> collapses near {fmt(rep.marginal)} ({rep.which_condition})")
    mix = mixing_artifact_demo(t, ("V", "A"), ("C", "R"))
    print("mixing artifact for (V,A) given C,R (control / case / mixed):")
    for (c, r), vals in sorted(mix.strata.items()):
        print(f"  C={c} R={r}: {fmt(vals['control'])} / {fmt(vals['case'])}"
              f" / {fmt(vals['mixed'])}")


if __name__ == "__main__":
    main()
