"""Tests for the built-in halt-condition plugins."""

import pytest

from ef21sim.core.sim.plugin_registry import (
    create_halt_condition_plugin,
    registered_halt_conditions,
    validate_halt_condition_definition,
)
from ef21sim.core.validation import ConfigurationError
from ef21sim.plugins.stopping import EpochBudgetHalt, GradNormToleranceHalt, ThresholdHaltPlugin


def _record(**metrics):
    return {"metrics": metrics}


def test_defaults_are_registered():
    """Importing the registry registers every built-in halt condition."""
    assert {"threshold", "grad_norm_tolerance", "epoch_budget"} <= set(registered_halt_conditions())


def test_threshold_triggers_on_crossing():
    """The plugin fires once the metric crosses the threshold."""
    plugin = ThresholdHaltPlugin(metric="f", threshold=0.5, comparison="lt")

    assert plugin.check(_record(f=0.7)) is None
    reason = plugin.check(_record(f=0.4), metadata={"round_index": 12})

    assert reason["value"] == pytest.approx(0.4)
    assert reason["round_index"] == 12
    assert reason["rounds_observed"] == 2


def test_threshold_respects_min_rounds():
    """No halt before min_rounds observations."""
    plugin = ThresholdHaltPlugin(metric="f", threshold=1.0, comparison="lte", min_rounds=3)

    assert plugin.check(_record(f=0.0)) is None
    assert plugin.check(_record(f=0.0)) is None
    assert plugin.check(_record(f=0.0)) is not None


def test_threshold_ignores_missing_metric():
    """Rows without the metric are skipped and not counted."""
    plugin = ThresholdHaltPlugin(metric="lyapunov", threshold=0.0, comparison="gte")

    assert plugin.check(_record(f=1.0)) is None
    assert plugin.check(_record(lyapunov=None)) is None


def test_threshold_reset_clears_trigger():
    """Reset forgets a previous trigger."""
    plugin = ThresholdHaltPlugin(metric="f", threshold=1.0)
    assert plugin.check(_record(f=2.0)) is not None

    plugin.reset()
    assert plugin.check(_record(f=0.0)) is None


def test_threshold_rejects_bad_comparison():
    """Unknown comparisons are rejected at construction."""
    with pytest.raises(ValueError, match="comparison"):
        ThresholdHaltPlugin(metric="f", threshold=1.0, comparison="between")


def test_grad_norm_tolerance_is_inclusive():
    """Reaching the tolerance exactly counts as converged."""
    plugin = GradNormToleranceHalt(tolerance=1e-7)

    assert plugin.check(_record(grad_norm_sq=2e-7)) is None
    reason = plugin.check(_record(grad_norm_sq=1e-7))
    assert reason["label"] == "converged"


def test_epoch_budget_triggers_at_budget():
    """Epoch budget fires once epochs_cum reaches the limit."""
    plugin = EpochBudgetHalt(max_epochs=2.0)

    assert plugin.check(_record(epochs_cum=1.5)) is None
    assert plugin.check(_record(epochs_cum=2.0))["label"] == "epoch_budget"


def test_create_from_definition():
    """Definitions build configured plugins through the registry."""
    plugin = create_halt_condition_plugin({"name": "epoch_budget", "options": {"max_epochs": 3}})
    assert isinstance(plugin, EpochBudgetHalt)


def test_unknown_definition_rejected():
    """Unknown plugin names raise."""
    with pytest.raises(ValueError, match="Unknown halt condition"):
        create_halt_condition_plugin({"name": "never"})


def test_definition_schema_enforced():
    """Options are checked against the plugin schema."""
    with pytest.raises(ConfigurationError):
        validate_halt_condition_definition({"name": "epoch_budget", "options": {}})
