"""Contingency-table analysis for case-control data.

Core pieces: dense binary contingency tables (``tables``), dependence
measures (``measures``), mixed graphs and separation (``graphs``),
log-linear fitting by IPF (``loglinear``), logit regression with a formula
parser (``logit``) and case-control smoothing plus collapsibility checks
(``smoothing``).  ``casecontrol reproduce`` on the command line re-derives
every number the bundled study analysis pins down.
"""

from .tables import CellAddress, ContingencyTable, DataError, Schema, emit, from_cells, ingest
from .measures import (
    MeasureReport,
    TwoByTwo,
    dependence_sign,
    log_or_se,
    odds_ratio,
    pairwise_report,
    relative_risk,
    risk_difference,
    rr_mixture_weights,
    two_by_two,
)
from .graphs import (
    IndependenceStatement,
    MixedGraph,
    cliques,
    concentration_skeleton,
    find_collision_vs,
    full_line_graph,
    implied_independencies,
    is_markov_equivalent_to_concentration,
    marginalize_graph,
    separates,
)
from .loglinear import (
    CaseControlClosedForm,
    LoglinearFit,
    LoglinearSpec,
    deviance_decomposition,
    fit_closed_form_casecontrol,
    fit_ipf,
    forward_select,
    peel_sequence,
    independence_test,
)
from .logit import (
    InteractionEstimate,
    LogitFit,
    LogitFormula,
    fit_logit,
    fitted_odds_ratios,
    interaction_from_odds_ratios,
    parse_formula,
)
from .smoothing import (
    CaseControlModel,
    CollapsibilityReport,
    MixingReport,
    SmoothedEstimates,
    check_or_collapsibility,
    check_rr_collapsibility,
    mixing_artifact_demo,
    smooth,
)
from .special import chi2_sf

__version__ = "0.1.0"
