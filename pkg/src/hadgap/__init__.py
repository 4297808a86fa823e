"""Lacunary series, witness families and composition-operator tests on the unit ball of C^n."""

from .weights import NormalWeight, verify_normality, weight_ratio_bracket
from .sphere import SeparatedSet, maximal_separated_set, decompose_separated, pseudo_distance
from .polyseries import GapSeries, ZonalPolynomial, eval_series, membership_profile, sup_norm
from .witness import WitnessParams, build_witness_family, certified_lower_bound, verify_growth
from .compose import MixedNormParams, SymbolPair, boundedness_integral, operator_verdict

__all__ = [
    "NormalWeight", "verify_normality", "weight_ratio_bracket",
    "SeparatedSet", "maximal_separated_set", "decompose_separated", "pseudo_distance",
    "GapSeries", "ZonalPolynomial", "eval_series", "membership_profile", "sup_norm",
    "WitnessParams", "build_witness_family", "certified_lower_bound", "verify_growth",
    "MixedNormParams", "SymbolPair", "boundedness_integral", "operator_verdict",
]
