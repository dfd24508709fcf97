"""Exact and ball arithmetic used by every other module."""

from latmesh.precision.ball import ESCALATIONS, PrecisionContext, RealBall, ball, ball_sum
from latmesh.precision.exact import DecimalReal, QuadraticSurd, parse_exact, to_ball
from latmesh.precision.introot import integer_kth_root, is_perfect_power
from latmesh.precision.pair import ExponentPair, PairKind
from latmesh.precision.zeta import zeta_real

__all__ = [
    "ESCALATIONS",
    "DecimalReal",
    "ExponentPair",
    "PairKind",
    "PrecisionContext",
    "QuadraticSurd",
    "RealBall",
    "ball",
    "ball_sum",
    "integer_kth_root",
    "is_perfect_power",
    "parse_exact",
    "to_ball",
    "zeta_real",
]
