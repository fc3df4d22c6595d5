import copy
import json

import pytest

from fdrpath.exceptions import ConfigurationError
from fdrpath.harness.config import (
    PRESETS,
    ScenarioConfig,
    load_config,
    parse_alternative,
    preset,
)
from fdrpath.statdist import DistFamily
from fdrpath.twogroups import EffectAlternative
from fdrpath.util.types import CdfMethod, EffectKind, Method


def _config_dict(**kwargs):
    d = {
        "scenario_id": "test",
        "model": {
            "type": "two-groups",
            "pi0": 0.5,
            "m": 200,
            "alternative": {"family": "wakefield", "k": 10},
        },
        "methods": ["bh"],
    }
    d.update(kwargs)
    return d


GROUPED_MODEL = {
    "type": "grouped",
    "groups": [
        {"pi0": 0.9, "alternative": {"family": "wakefield", "k": 4}},
        {"pi0": 0.5, "alternative": {"family": "wakefield", "k": 10}},
    ],
    "m": 500,
    "group_probs": [0.5, 0.5],
}


# parse_alternative


def test_parse_gamma_alternative():
    assert parse_alternative({"family": "gamma", "shape": 0.3, "scale": 22}) == (
        DistFamily.gamma(0.3, 22)
    )


def test_parse_wakefield_alternative():
    assert parse_alternative({"family": "wakefield", "k": 10}) == DistFamily.gamma(0.5, 22)


def test_parse_effect_alternative():
    alt = parse_alternative({"effect": "laplace", "scale": 2})

    assert isinstance(alt, EffectAlternative)
    assert alt.kind == EffectKind.LAPLACE
    assert alt.scale == 2


@pytest.mark.parametrize(
    "d",
    [
        {"family": "beta"},
        {"family": "gamma", "shape": 0.5},
        {"family": "gamma", "shape": -1, "scale": 2},
        {"family": "wakefield", "k": 0},
        {"family": "wakefield", "k": 10, "shape": 1},
        {"effect": "cauchy", "scale": 1},
        {"shape": 1, "scale": 2},
    ],
)
def test_parse_invalid_alternative(d):
    with pytest.raises(ConfigurationError):
        parse_alternative(d)


# ScenarioConfig


def test_minimal_configuration():
    config = ScenarioConfig.from_dict(_config_dict())

    assert config.methods == (Method.BH,)
    assert config.replicates == 1
    assert config.seed == 0
    assert config.null_penalty == 0
    assert [setting.name for setting in config.settings] == ["default"]
    assert config.settings[0].m == 200
    assert config.settings[0].true_pi0 == 0.5


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigurationError) as excinfo:
        ScenarioConfig.from_dict(_config_dict(repetitions=3))

    assert "Unknown key 'repetitions'" in str(excinfo.value)


def test_unknown_model_keys_are_rejected():
    d = _config_dict()
    d["model"]["variance"] = 2

    with pytest.raises(ConfigurationError):
        ScenarioConfig.from_dict(d)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"replicates": 0},
        {"methods": []},
        {"methods": ["fdr-magic"]},
        {"seed": -1},
        {"eta": 1},
        {"alpha": 0},
        {"flag_threshold": 1.5},
        {"diagnosis_levels": [0.5, 1.0]},
        {"null_penalty": -1},
        {"n_mc": 0},
        {"cdf_method": "exact"},
    ],
)
def test_invalid_settings_are_rejected(kwargs):
    with pytest.raises(ConfigurationError):
        ScenarioConfig.from_dict(_config_dict(**kwargs))


def test_sweep_creates_a_setting_per_value():
    config = ScenarioConfig.from_dict(
        _config_dict(sweep={"parameter": "m", "values": [200, 2000]})
    )

    assert [setting.name for setting in config.settings] == ["m-200", "m-2000"]
    assert [setting.m for setting in config.settings] == [200, 2000]


def test_sweep_of_the_gamma_shape():
    d = _config_dict(sweep={"parameter": "shape", "values": [0.3, 0.9]})
    d["model"]["alternative"] = {"family": "gamma", "shape": 0.5, "scale": 22}
    config = ScenarioConfig.from_dict(d)

    assert [setting.name for setting in config.settings] == ["shape-0.3", "shape-0.9"]
    spec = config.settings[1].two_groups
    assert spec is not None and spec.alt == DistFamily.gamma(0.9, 22)


@pytest.mark.parametrize(
    "sweep",
    [
        {"parameter": "shape", "values": [0.3]},
        {"parameter": "alpha", "values": [0.1]},
        {"parameter": "m", "values": []},
        {"parameter": "m", "values": [200, 200]},
        {"parameter": "m"},
    ],
)
def test_invalid_sweeps_are_rejected(sweep):
    with pytest.raises(ConfigurationError):
        ScenarioConfig.from_dict(_config_dict(sweep=sweep))


def test_grouped_methods_require_a_grouped_model():
    with pytest.raises(ConfigurationError):
        ScenarioConfig.from_dict(_config_dict(methods=["grouped-wlr"]))


def test_oracle_bayes_requires_a_distribution_of_zsq():
    d = _config_dict(methods=["oracle-bayes"])
    d["model"]["alternative"] = {"effect": "normal", "scale": 3}

    with pytest.raises(ConfigurationError):
        ScenarioConfig.from_dict(d)


def test_diagnosis_requires_peb():
    with pytest.raises(ConfigurationError):
        ScenarioConfig.from_dict(_config_dict(diagnose=True))


def test_diagnosis_runs_with_peb_by_default():
    assert ScenarioConfig.from_dict(_config_dict(methods=["peb"])).run_diagnosis
    assert not ScenarioConfig.from_dict(
        _config_dict(methods=["peb"], diagnose=False)
    ).run_diagnosis


def test_grouped_configuration():
    config = ScenarioConfig.from_dict(
        _config_dict(
            model=GROUPED_MODEL,
            methods=["grouped-wlr", "grouped-bayes", "weighted-p"],
            cdf_method="monte-carlo",
        )
    )
    setting = config.settings[0]

    assert setting.is_grouped
    assert setting.grouped is not None and setting.grouped.k == 2
    assert setting.true_pi0 == pytest.approx(0.7)
    assert config.cdf_method == CdfMethod.MONTE_CARLO


def test_grouped_model_with_group_sizes():
    model = copy.deepcopy(GROUPED_MODEL)
    del model["m"]
    del model["group_probs"]
    model["group_sizes"] = [100, 300]
    config = ScenarioConfig.from_dict(_config_dict(model=model, methods=["grouped-bayes"]))

    assert config.settings[0].m == 400
    assert config.settings[0].true_pi0 == pytest.approx(0.25 * 0.9 + 0.75 * 0.5)


def test_grouped_model_needs_sizes_or_probabilities():
    model = copy.deepcopy(GROUPED_MODEL)
    model["group_sizes"] = [100, 300]

    with pytest.raises(ConfigurationError):
        ScenarioConfig.from_dict(_config_dict(model=model, methods=["grouped-bayes"]))


def test_weights_need_one_value_per_group():
    with pytest.raises(ConfigurationError):
        ScenarioConfig.from_dict(
            _config_dict(model=GROUPED_MODEL, methods=["weighted-p"], weights=[1.0])
        )


def test_default_comparisons():
    config = ScenarioConfig.from_dict(_config_dict(methods=["oracle-bayes", "peb", "bh"]))

    assert config.path_labels() == ["oracle-bayes", "oracle-freq", "peb", "expected", "bh"]
    assert config.comparison_pairs() == (
        ("oracle-bayes", "oracle-freq"),
        ("peb", "expected"),
    )


def test_explicit_comparisons():
    config = ScenarioConfig.from_dict(
        _config_dict(methods=["bh", "qvalue"], comparisons=[["qvalue", "bh"]])
    )

    assert config.comparison_pairs() == (("qvalue", "bh"),)


def test_comparisons_need_available_paths():
    with pytest.raises(ConfigurationError):
        ScenarioConfig.from_dict(_config_dict(comparisons=[["peb", "bh"]]))


def test_to_dict_round_trip():
    config = ScenarioConfig.from_dict(
        _config_dict(
            sweep={"parameter": "m", "values": [200, 400]},
            methods=["bh", "peb"],
            null_penalty=9,
            replicates=3,
        )
    )

    assert ScenarioConfig.from_dict(config.to_dict()) == config
    assert json.loads(json.dumps(config.to_dict())) == config.to_dict()


def test_with_seed():
    config = ScenarioConfig.from_dict(_config_dict(seed=1))

    assert config.with_seed(7).seed == 7
    assert config.seed == 1


# load_config


def test_load_config(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(_config_dict(replicates=4)))

    assert load_config(path).replicates == 4


def test_load_config_of_invalid_json(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text("{'scenario_id': 'test'")

    with pytest.raises(ConfigurationError):
        load_config(path)


# presets


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_are_valid(name):
    config = preset(name)

    assert config.scenario_id == name
    assert len(config.settings) >= 1


def test_study_presets_use_the_unpenalized_fit():
    assert preset("pi0-study").null_penalty == 0
    assert preset("diagnosis-flags").null_penalty == 0
    assert preset("diagnosis-flags").run_diagnosis


@pytest.mark.parametrize(
    "name, kind",
    [("t-alternative", EffectKind.STUDENT_T), ("laplace-alternative", EffectKind.LAPLACE)],
)
def test_effect_alternative_presets(name, kind):
    config = preset(name)
    spec = config.settings[0].two_groups

    assert spec is not None
    assert isinstance(spec.alt, EffectAlternative) and spec.alt.kind == kind
    assert config.run_diagnosis
    assert Method.ORACLE_BAYES not in config.methods


def test_unknown_preset():
    with pytest.raises(ConfigurationError) as excinfo:
        preset("no-such-preset")

    assert "path-convergence" in str(excinfo.value)
