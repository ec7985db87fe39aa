"""
FvK Plate Run Context Module
"""

import contextvars
import logging

logger = logging.getLogger(__name__)

class RunContext:
    """Per-run store of stage timings isolated per execution context."""

    def __init__(self):
        self._store = contextvars.ContextVar("fvk_run", default={})

    def set(self, key, value):
        self._store.set({**self._store.get(), key: value})

    def get(self, key, default=None):
        return self._store.get().get(key, default)

    def get_all(self):
        return self._store.get()

    def clear(self):
        self._store.set({})

    def add_timing(self, name, seconds):
        timings = dict(self.get("timings", {}))
        timings[name] = timings.get(name, 0.0) + seconds
        self.set("timings", timings)
        logger.debug(f"timing {name}: {seconds:.3f}s")

run_context = RunContext()
