"""Halt-condition bookkeeping for a single run."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from typing import Any

from ef21sim.core.sim.plugins import HaltConditionPlugin

logger = logging.getLogger(__name__)


class EarlyStopCoordinator:
    """Offers each recorded round to the halt conditions and latches the first halt.

    One coordinator belongs to one run; parallel tuning builds one per grid point.
    """

    def __init__(self, plugins: Sequence[HaltConditionPlugin] | None = None):
        self.plugins = list(plugins or ())
        self._reason: dict[str, Any] | None = None
        for plugin in self.plugins:
            reset = getattr(plugin, "reset", None)
            if callable(reset):
                reset()

    def is_stopped(self) -> bool:
        return self._reason is not None

    def check_record(self, record: dict[str, Any], round_index: int | None = None) -> None:
        if self._reason is not None:
            return
        metadata = None if round_index is None else {"round_index": round_index}
        for plugin in self.plugins:
            name = getattr(plugin, "name", "unknown")
            try:
                verdict = plugin.check(record, metadata=metadata)
            except Exception:
                logger.exception("Halt condition '%s' failed on round %s; ignoring it", name, round_index)
                continue
            if verdict:
                self._reason = {"plugin": name, **(metadata or {}), **verdict}
                logger.info("Run halted by '%s' at round %s", self._reason["plugin"], round_index)
                return

    def get_reason(self) -> dict[str, Any] | None:
        return None if self._reason is None else dict(self._reason)
