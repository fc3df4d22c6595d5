"""
Scenario configuration.

A scenario is described by a JSON document, for example

    {
      "scenario_id": "path-convergence",
      "model": {
        "type": "two-groups",
        "pi0": 0.5,
        "m": 2000,
        "alternative": {"family": "wakefield", "k": 10}
      },
      "sweep": {"parameter": "m", "values": [200, 2000, 20000]},
      "methods": ["oracle-bayes"],
      "replicates": 10,
      "seed": 1
    }

Unknown keys are rejected. All other keys are optional.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from fdrpath.diagnose import DEFAULT_LEVELS, DEFAULT_P_THRESHOLD
from fdrpath.exceptions import ConfigurationError, DomainError
from fdrpath.freq import DEFAULT_ETA
from fdrpath.grouped import DEFAULT_N_MC, GroupSpec
from fdrpath.statdist import DistFamily
from fdrpath.twogroups import Alternative, EffectAlternative, TwoGroupsSpec
from fdrpath.util.types import CdfMethod, EffectKind, Method

TWO_GROUPS = "two-groups"
GROUPED = "grouped"

SWEEP_PARAMETERS = {
    TWO_GROUPS: ("m", "pi0", "shape", "scale", "k"),
    GROUPED: ("m",),
}

# Labels of the rejection paths each method produces.
PATH_LABELS: Dict[Method, Tuple[str, ...]] = {
    Method.BH: ("bh",),
    Method.QVALUE: ("qvalue",),
    Method.PEB: ("peb", "expected"),
    Method.ORACLE_BAYES: ("oracle-bayes", "oracle-freq"),
    Method.GROUPED_WLR: ("grouped-wlr",),
    Method.GROUPED_BAYES: ("grouped-bayes",),
    Method.WEIGHTED_P: ("weighted-p",),
}

DEFAULT_COMPARISONS = (
    ("oracle-bayes", "oracle-freq"),
    ("peb", "expected"),
    ("grouped-bayes", "grouped-wlr"),
)

_CONFIG_KEYS = (
    "scenario_id",
    "model",
    "sweep",
    "methods",
    "replicates",
    "seed",
    "eta",
    "alpha",
    "diagnosis_levels",
    "flag_threshold",
    "null_penalty",
    "comparisons",
    "diagnose",
    "rank_correlation",
    "cdf_method",
    "n_mc",
    "weights",
    "output_dir",
)


def _check_keys(d: Dict[str, Any], allowed: Sequence[str], where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigurationError(f"The {where} must be a JSON object.")
    for key in d:
        if key not in allowed:
            raise ConfigurationError(f"Unknown key '{key}' in the {where}.")


def _require(d: Dict[str, Any], key: str, where: str) -> Any:
    if key not in d:
        raise ConfigurationError(f"The {where} has no '{key}'.")
    return d[key]


def parse_alternative(d: Dict[str, Any]) -> Alternative:
    """
    Parse an alternative distribution of z².

    Supported forms are {"family": "gamma", "shape": ..., "scale": ...},
    {"family": "wakefield", "k": ...} for N(0, 1 + k) on the z scale,
    {"family": "chi-square-1"} and {"effect": "normal" | "laplace" | "student-t",
    "scale": ..., "df": ...} for an effect distribution on the z scale.

    """

    try:
        if isinstance(d, dict) and "effect" in d:
            _check_keys(d, ("effect", "scale", "df"), "alternative")
            return EffectAlternative(
                kind=EffectKind.for_name(str(d["effect"])),
                scale=float(_require(d, "scale", "alternative")),
                df=float(d.get("df", 10.0)),
            )
        family = str(_require(d, "family", "alternative"))
        if family == "gamma":
            _check_keys(d, ("family", "shape", "scale"), "alternative")
            return DistFamily.gamma(
                float(_require(d, "shape", "alternative")),
                float(_require(d, "scale", "alternative")),
            )
        if family == "wakefield":
            _check_keys(d, ("family", "k"), "alternative")
            k = float(_require(d, "k", "alternative"))
            if not k > 0:
                raise ConfigurationError("The variance ratio k must be positive.")
            return DistFamily.gamma(0.5, 2 * (1 + k))
        if family == "chi-square-1":
            _check_keys(d, ("family",), "alternative")
            return DistFamily.chi_square_1()
    except (DomainError, TypeError) as e:
        raise ConfigurationError(f"Invalid alternative: {e}") from e
    except ValueError as e:
        if isinstance(e, ConfigurationError):
            raise
        raise ConfigurationError(f"Invalid alternative: {e}") from e
    raise ConfigurationError(f"Unsupported alternative family: '{family}'")


@dataclass(frozen=True)
class Setting:
    """
    One generative model of a scenario.

    Exactly one of two_groups and grouped is set.

    Parameters
    ----------
    name : str
        Name, which is used as the directory name of the setting's output.
    two_groups : TwoGroupsSpec, optional
        Two-groups model.
    grouped : GroupSpec, optional
        Group models.
    m : int
        Number of tests.
    group_sizes : tuple of int, optional
        Number of tests per group.
    group_probs : tuple of float, optional
        Probability of each group.

    """

    name: str
    m: int
    two_groups: Optional[TwoGroupsSpec] = None
    grouped: Optional[GroupSpec] = None
    group_sizes: Optional[Tuple[int, ...]] = None
    group_probs: Optional[Tuple[float, ...]] = None

    @property
    def is_grouped(self) -> bool:
        return self.grouped is not None

    @property
    def true_pi0(self) -> float:
        """The (expected) proportion of null tests."""

        if self.two_groups is not None:
            return self.two_groups.pi0
        assert self.grouped is not None
        if self.group_sizes is not None:
            shares = [size / self.m for size in self.group_sizes]
        else:
            assert self.group_probs is not None
            shares = list(self.group_probs)
        return float(sum(share * pi0 for share, pi0 in zip(shares, self.grouped.pi0s)))


def _parse_setting(name: str, model: Dict[str, Any]) -> Setting:
    model_type = _require(model, "type", "model")
    try:
        if model_type == TWO_GROUPS:
            _check_keys(model, ("type", "pi0", "m", "alternative"), "model")
            m = int(_require(model, "m", "model"))
            spec = TwoGroupsSpec(
                pi0=float(_require(model, "pi0", "model")),
                alt=parse_alternative(_require(model, "alternative", "model")),
                m=m,
            )
            return Setting(name=name, m=m, two_groups=spec)
        if model_type == GROUPED:
            _check_keys(
                model, ("type", "groups", "m", "group_sizes", "group_probs"), "model"
            )
            groups = _require(model, "groups", "model")
            if not isinstance(groups, list) or not groups:
                raise ConfigurationError("The model needs a non-empty list of groups.")
            for group in groups:
                _check_keys(group, ("pi0", "alternative"), "group")
            alts = tuple(
                parse_alternative(_require(group, "alternative", "group"))
                for group in groups
            )
            if not all(isinstance(alt, DistFamily) for alt in alts):
                raise ConfigurationError("Group alternatives must be distributions of z².")
            spec = GroupSpec(
                pi0s=tuple(float(_require(group, "pi0", "group")) for group in groups),
                alts=alts,  # type: ignore
            )
            sizes = model.get("group_sizes")
            probs = model.get("group_probs")
            if (sizes is None) == (probs is None):
                raise ConfigurationError(
                    "A grouped model needs either group_sizes or group_probs."
                )
            if sizes is not None:
                if "m" in model:
                    raise ConfigurationError("group_sizes determine m; remove 'm'.")
                group_sizes = tuple(int(size) for size in sizes)
                if len(group_sizes) != spec.k or any(size < 0 for size in group_sizes):
                    raise ConfigurationError("Need a non-negative size for every group.")
                return Setting(
                    name=name,
                    m=sum(group_sizes),
                    grouped=spec,
                    group_sizes=group_sizes,
                )
            group_probs = tuple(float(p) for p in probs)
            if len(group_probs) != spec.k:
                raise ConfigurationError("Need a probability for every group.")
            return Setting(
                name=name,
                m=int(_require(model, "m", "model")),
                grouped=spec,
                group_probs=group_probs,
            )
    except DomainError as e:
        raise ConfigurationError(f"Invalid model: {e}") from e
    raise ConfigurationError(f"Unsupported model type: '{model_type}'")


def _swept_model(model: Dict[str, Any], parameter: str, value: Any) -> Dict[str, Any]:
    model = copy.deepcopy(model)
    if parameter in ("m", "pi0"):
        model[parameter] = value
        return model
    alternative = model.get("alternative", {})
    if parameter == "k" and alternative.get("family") != "wakefield":
        raise ConfigurationError("Sweeping k requires a wakefield alternative.")
    if parameter == "shape" and alternative.get("family") != "gamma":
        raise ConfigurationError("Sweeping shape requires a gamma alternative.")
    alternative[parameter] = value
    return model


@dataclass(frozen=True)
class ScenarioConfig:
    """
    The configuration of a simulation study.

    Parameters
    ----------
    scenario_id : str
        Scenario name.
    model : dict
        Generative model, as in the JSON document.
    methods : tuple of Method
        Procedures to run.
    replicates : int
        Number of replicates per setting.
    seed : int
        Base seed. Replicate r uses the seed seed + r.
    sweep : dict, optional
        A model parameter and the values it takes, one setting per value.
    eta : float
        Tuning quantile of the null proportion estimate.
    alpha : float
        FDR level for the rejection counts and realized error rates.
    diagnosis_levels : tuple of float
        Quantile levels of the model diagnosis.
    flag_threshold : float
        p-value threshold of the model diagnosis.
    null_penalty : float
        Null pseudo-count of the EM fit.
    comparisons : tuple of (str, str), optional
        Pairs of path labels to compare. By default all available pairs of an
        oracle or fitted Bayesian path and its frequentist counterpart.
    diagnose : bool, optional
        Whether to diagnose the EM fit (by default whenever peb is run).
    rank_correlation : bool
        Whether to compute the Spearman correlation of p-values and oracle local
        fdrs.
    cdf_method : CdfMethod
        How to obtain the null wlr distributions of grouped models.
    n_mc : int
        Monte Carlo sample size for the null wlr distributions.
    weights : tuple of float, optional
        Group weights of the weighted p-values. By default (1 - pi0) / pi0.
    output_dir : str, optional
        Output directory.

    """

    scenario_id: str
    model: Dict[str, Any]
    methods: Tuple[Method, ...]
    replicates: int = 1
    seed: int = 0
    sweep: Optional[Dict[str, Any]] = None
    eta: float = DEFAULT_ETA
    alpha: float = 0.1
    diagnosis_levels: Tuple[float, ...] = DEFAULT_LEVELS
    flag_threshold: float = DEFAULT_P_THRESHOLD
    null_penalty: float = 0.0
    comparisons: Optional[Tuple[Tuple[str, str], ...]] = None
    diagnose: Optional[bool] = None
    rank_correlation: bool = False
    cdf_method: CdfMethod = CdfMethod.ANALYTIC
    n_mc: int = DEFAULT_N_MC
    weights: Optional[Tuple[float, ...]] = None
    output_dir: Optional[str] = None
    _settings: Tuple[Setting, ...] = field(default=(), init=False, repr=False)

    def __post_init__(self):
        if not self.scenario_id:
            raise ConfigurationError("The scenario_id must not be empty.")
        if self.replicates < 1:
            raise ConfigurationError("The number of replicates must be at least 1.")
        if not self.methods:
            raise ConfigurationError("At least one method must be given.")
        if self.seed < 0:
            raise ConfigurationError("The seed must be non-negative.")
        if not 0 < self.eta < 1:
            raise ConfigurationError("eta must lie in (0, 1).")
        if not 0 < self.alpha <= 1:
            raise ConfigurationError("alpha must lie in (0, 1].")
        if not 0 < self.flag_threshold < 1:
            raise ConfigurationError("flag_threshold must lie in (0, 1).")
        if any(not 0 < level < 1 for level in self.diagnosis_levels):
            raise ConfigurationError("Diagnosis levels must lie in (0, 1).")
        if self.null_penalty < 0:
            raise ConfigurationError("null_penalty must be non-negative.")
        if self.n_mc < 1:
            raise ConfigurationError("n_mc must be at least 1.")

        settings = self._build_settings()
        object.__setattr__(self, "_settings", settings)
        self._check_methods(settings)

    def _build_settings(self) -> Tuple[Setting, ...]:
        if self.sweep is None:
            return (_parse_setting("default", self.model),)
        _check_keys(self.sweep, ("parameter", "values"), "sweep")
        parameter = _require(self.sweep, "parameter", "sweep")
        values = _require(self.sweep, "values", "sweep")
        model_type = self.model.get("type") if isinstance(self.model, dict) else None
        if parameter not in SWEEP_PARAMETERS.get(str(model_type), ()):
            raise ConfigurationError(
                f"The parameter '{parameter}' cannot be swept for a {model_type} model."
            )
        if not isinstance(values, list) or not values:
            raise ConfigurationError("The sweep needs a non-empty list of values.")
        if model_type == GROUPED and "group_probs" not in self.model:
            raise ConfigurationError("Sweeping m requires group_probs.")
        names = [f"{parameter}-{value:g}" for value in values]
        if len(set(names)) != len(names):
            raise ConfigurationError("The sweep values must be distinct.")
        return tuple(
            _parse_setting(name, _swept_model(self.model, parameter, value))
            for name, value in zip(names, values)
        )

    def _check_methods(self, settings: Tuple[Setting, ...]) -> None:
        for method in self.methods:
            for setting in settings:
                if method.is_grouped() and not setting.is_grouped:
                    raise ConfigurationError(
                        f"The method {method.value} requires a grouped model."
                    )
                if method == Method.ORACLE_BAYES:
                    if setting.two_groups is None or isinstance(
                        setting.two_groups.alt, EffectAlternative
                    ):
                        raise ConfigurationError(
                            "The method oracle-bayes requires a two-groups model with "
                            "a distribution of z² as alternative."
                        )
        if self.diagnose and Method.PEB not in self.methods:
            raise ConfigurationError("The diagnosis requires the peb method.")
        if self.rank_correlation and Method.ORACLE_BAYES not in self.methods:
            raise ConfigurationError("rank_correlation requires the oracle-bayes method.")
        if self.weights is not None:
            for setting in settings:
                if setting.grouped is not None and len(self.weights) != setting.grouped.k:
                    raise ConfigurationError("Need one weight per group.")
            if any(not w > 0 for w in self.weights):
                raise ConfigurationError("Weights must be positive.")
        labels = self.path_labels()
        for a, b in self.comparisons or ():
            if a not in labels or b not in labels:
                raise ConfigurationError(
                    f"Cannot compare {a} with {b}; available paths: {', '.join(labels)}"
                )

    @property
    def settings(self) -> Tuple[Setting, ...]:
        return self._settings

    @property
    def run_diagnosis(self) -> bool:
        if self.diagnose is None:
            return Method.PEB in self.methods
        return self.diagnose

    def path_labels(self) -> List[str]:
        return [label for method in self.methods for label in PATH_LABELS[method]]

    def comparison_pairs(self) -> Tuple[Tuple[str, str], ...]:
        if self.comparisons is not None:
            return self.comparisons
        labels = self.path_labels()
        return tuple(
            (a, b) for a, b in DEFAULT_COMPARISONS if a in labels and b in labels
        )

    @staticmethod
    def from_dict(d: Dict[str, Any]) -> ScenarioConfig:
        """
        Create a configuration from a parsed JSON document.

        Raises
        ------
        ConfigurationError
            If the document has unknown keys or invalid values.

        """

        _check_keys(d, _CONFIG_KEYS, "configuration")
        try:
            methods = tuple(Method.for_name(str(name)) for name in d.get("methods", ()))
            comparisons = d.get("comparisons")
            weights = d.get("weights")
            diagnosis_levels = d.get("diagnosis_levels", DEFAULT_LEVELS)
            return ScenarioConfig(
                scenario_id=str(_require(d, "scenario_id", "configuration")),
                model=_require(d, "model", "configuration"),
                methods=methods,
                replicates=int(d.get("replicates", 1)),
                seed=int(d.get("seed", 0)),
                sweep=d.get("sweep"),
                eta=float(d.get("eta", DEFAULT_ETA)),
                alpha=float(d.get("alpha", 0.1)),
                diagnosis_levels=tuple(float(level) for level in diagnosis_levels),
                flag_threshold=float(d.get("flag_threshold", DEFAULT_P_THRESHOLD)),
                null_penalty=float(d.get("null_penalty", 0.0)),
                comparisons=(
                    tuple((str(a), str(b)) for a, b in comparisons)
                    if comparisons is not None
                    else None
                ),
                diagnose=d.get("diagnose"),
                rank_correlation=bool(d.get("rank_correlation", False)),
                cdf_method=CdfMethod.for_name(str(d.get("cdf_method", "analytic"))),
                n_mc=int(d.get("n_mc", DEFAULT_N_MC)),
                weights=(
                    tuple(float(w) for w in weights) if weights is not None else None
                ),
                output_dir=d.get("output_dir"),
            )
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid configuration: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        """The configuration as a JSON document."""

        d: Dict[str, Any] = {
            "scenario_id": self.scenario_id,
            "model": copy.deepcopy(self.model),
            "methods": [method.value for method in self.methods],
            "replicates": self.replicates,
            "seed": self.seed,
            "eta": self.eta,
            "alpha": self.alpha,
            "diagnosis_levels": list(self.diagnosis_levels),
            "flag_threshold": self.flag_threshold,
            "null_penalty": self.null_penalty,
            "rank_correlation": self.rank_correlation,
            "cdf_method": self.cdf_method.value,
            "n_mc": self.n_mc,
        }
        if self.sweep is not None:
            d["sweep"] = copy.deepcopy(self.sweep)
        if self.comparisons is not None:
            d["comparisons"] = [list(pair) for pair in self.comparisons]
        if self.diagnose is not None:
            d["diagnose"] = self.diagnose
        if self.weights is not None:
            d["weights"] = list(self.weights)
        if self.output_dir is not None:
            d["output_dir"] = self.output_dir
        return d

    def with_seed(self, seed: int) -> ScenarioConfig:
        d = self.to_dict()
        d["seed"] = seed
        return ScenarioConfig.from_dict(d)


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    """
    Load a scenario configuration from a JSON file.

    Raises
    ------
    ConfigurationError
        If the file is no valid JSON or the configuration is invalid.

    """

    try:
        with open(path, "r") as f:
            d = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path} is no valid JSON: {e}") from e
    return ScenarioConfig.from_dict(d)


_GAMMA_SHAPES = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]

PRESETS: Dict[str, Dict[str, Any]] = {
    "path-convergence": {
        "scenario_id": "path-convergence",
        "model": {
            "type": TWO_GROUPS,
            "pi0": 0.5,
            "m": 20000,
            "alternative": {"family": "wakefield", "k": 10},
        },
        "sweep": {"parameter": "m", "values": [200, 2000, 20000]},
        "methods": ["oracle-bayes", "bh"],
        "replicates": 10,
        "seed": 1,
        "alpha": 0.1,
    },
    "pi0-study": {
        "scenario_id": "pi0-study",
        "model": {
            "type": TWO_GROUPS,
            "pi0": 0.6,
            "m": 10000,
            "alternative": {"family": "gamma", "shape": 0.5, "scale": 22.0},
        },
        "sweep": {"parameter": "shape", "values": _GAMMA_SHAPES},
        "methods": ["qvalue", "peb"],
        "replicates": 100,
        "seed": 1,
        "diagnose": False,
    },
    "rank-correlation": {
        "scenario_id": "rank-correlation",
        "model": {
            "type": TWO_GROUPS,
            "pi0": 0.5,
            "m": 20000,
            "alternative": {"family": "gamma", "shape": 1.0, "scale": 22.0},
        },
        "sweep": {"parameter": "shape", "values": [1.0, 0.3]},
        "methods": ["bh", "oracle-bayes"],
        "replicates": 10,
        "seed": 1,
        "rank_correlation": True,
    },
    "diagnosis-flags": {
        "scenario_id": "diagnosis-flags",
        "model": {
            "type": TWO_GROUPS,
            "pi0": 0.6,
            "m": 10000,
            "alternative": {"family": "gamma", "shape": 0.5, "scale": 22.0},
        },
        "sweep": {"parameter": "shape", "values": _GAMMA_SHAPES},
        "methods": ["peb"],
        "replicates": 20,
        "seed": 1,
        "diagnose": True,
    },
    "t-alternative": {
        "scenario_id": "t-alternative",
        "model": {
            "type": TWO_GROUPS,
            "pi0": 0.6,
            "m": 10000,
            "alternative": {"effect": "student-t", "scale": 3.0, "df": 10.0},
        },
        "methods": ["qvalue", "peb"],
        "replicates": 1,
        "seed": 1,
        "diagnose": True,
    },
    "laplace-alternative": {
        "scenario_id": "laplace-alternative",
        "model": {
            "type": TWO_GROUPS,
            "pi0": 0.6,
            "m": 10000,
            "alternative": {"effect": "laplace", "scale": 3.0},
        },
        "methods": ["qvalue", "peb"],
        "replicates": 1,
        "seed": 1,
        "diagnose": True,
    },
    "bimodal-alternative": {
        "scenario_id": "bimodal-alternative",
        "model": {
            "type": TWO_GROUPS,
            "pi0": 0.6,
            "m": 10000,
            "alternative": {"family": "gamma", "shape": 0.7, "scale": 22.0},
        },
        "methods": ["qvalue", "peb", "oracle-bayes"],
        "replicates": 1,
        "seed": 1,
        "diagnose": True,
    },
    "grouped-convergence": {
        "scenario_id": "grouped-convergence",
        "model": {
            "type": GROUPED,
            "groups": [
                {"pi0": 0.9, "alternative": {"family": "wakefield", "k": 4}},
                {"pi0": 0.5, "alternative": {"family": "wakefield", "k": 10}},
            ],
            "m": 20000,
            "group_probs": [0.5, 0.5],
        },
        "methods": ["grouped-wlr", "grouped-bayes", "weighted-p"],
        "replicates": 10,
        "seed": 1,
    },
}


def preset(name: str) -> ScenarioConfig:
    """
    A named preset scenario.

    Raises
    ------
    ConfigurationError
        If there is no preset of that name.

    """

    if name not in PRESETS:
        raise ConfigurationError(
            f"Unknown preset '{name}'; available presets: {', '.join(sorted(PRESETS))}"
        )
    return ScenarioConfig.from_dict(copy.deepcopy(PRESETS[name]))
