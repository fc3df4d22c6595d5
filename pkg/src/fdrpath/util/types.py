from __future__ import annotations

from enum import Enum
from typing import Type, TypeVar

_E = TypeVar("_E", bound=Enum)


def _for_name(enum: Type[_E], name: str, what: str) -> _E:
    for member in enum:
        if name.lower() == str(member.value).lower():
            return member

    raise ValueError(f"Unknown {what}: '{name}'")


class Family(Enum):
    """
    Enumeration of the supported distribution families.

    """

    NORMAL = "normal"
    CHI_SQUARE_1 = "chi-square-1"
    GAMMA = "gamma"

    @staticmethod
    def for_name(name: str) -> Family:
        """The family for a case-insensitive name."""

        return _for_name(Family, name, "distribution family")


class EvalKind(Enum):
    """
    Enumeration of the quantities a distribution can evaluate.

    """

    PDF = "pdf"
    CDF = "cdf"
    SF = "sf"
    QUANTILE = "quantile"

    @staticmethod
    def for_name(name: str) -> EvalKind:
        return _for_name(EvalKind, name, "evaluation kind")


class Pi0Source(Enum):
    """
    Enumeration of the ways in which a null proportion can be obtained.

    """

    QUANTILE_OF_P = "quantile-of-p"
    QUANTILE_OF_ZSQ = "quantile-of-zsq"
    FIXED_ONE = "fixed-one"
    EM_FIT = "em-fit"
    ORACLE = "oracle"


class Method(Enum):
    """
    Enumeration of the FDR procedures a scenario can run.

    The enum values are the method names used in configuration files and on the
    command line.

    """

    BH = "bh"
    QVALUE = "qvalue"
    PEB = "peb"
    ORACLE_BAYES = "oracle-bayes"
    GROUPED_WLR = "grouped-wlr"
    GROUPED_BAYES = "grouped-bayes"
    WEIGHTED_P = "weighted-p"

    @staticmethod
    def for_name(name: str) -> Method:
        """The method for a case-insensitive name.

        Parameters
        ----------
        name : str
            Method name.

        Returns
        -------
        Method :
            Method.

        """

        return _for_name(Method, name, "method")

    def is_grouped(self) -> bool:
        """Whether the method requires a grouped model."""

        return self in (Method.GROUPED_WLR, Method.GROUPED_BAYES, Method.WEIGHTED_P)


class Direction(Enum):
    """
    Enumeration of the directions of a quantile mismatch.

    FITTED_OVER means that the fitted quantile exceeds the sample quantile
    significantly, FITTED_UNDER that it falls short of it significantly.

    """

    FITTED_OVER = "fitted-over"
    FITTED_UNDER = "fitted-under"
    NONE = "none"


class CdfMethod(Enum):
    """
    Enumeration of the ways of obtaining the null cdf of a weighted likelihood ratio.

    """

    ANALYTIC = "analytic"
    MONTE_CARLO = "monte-carlo"

    @staticmethod
    def for_name(name: str) -> CdfMethod:
        return _for_name(CdfMethod, name, "cdf method")


class EffectKind(Enum):
    """
    Enumeration of the effect distributions of a z-scale alternative.

    """

    NORMAL = "normal"
    LAPLACE = "laplace"
    STUDENT_T = "student-t"

    @staticmethod
    def for_name(name: str) -> EffectKind:
        return _for_name(EffectKind, name, "effect distribution")
