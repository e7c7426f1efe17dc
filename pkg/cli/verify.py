import importlib
import inspect
import os
import time
from dataclasses import dataclass, field
from logging import getLogger

from checks.base_check import BaseCheck, CheckResult, VerifyOptions
from checks.constants import CHECK_TYPES

logger = getLogger(__name__)


@dataclass
class VerifyReport:
    results: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.results) and all(r.passed for r in self.results)

    def format(self) -> str:
        lines = []
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            lines.append(
                f"[{status}] {r.name:<13} measured {r.measured:.3e}  threshold {r.threshold:.3e}"
                f"  ({r.elapsed:.1f}s)  {r.details}"
            )
        failed = sum(not r.passed for r in self.results)
        lines.append(f"{len(self.results) - failed}/{len(self.results)} checks passed")
        return "\n".join(lines)


def discover_checks() -> list[BaseCheck]:
    """Dynamically discovers and instantiates every check in the 'checks' package."""
    check_dir = os.path.dirname(importlib.import_module("checks").__file__)
    checks = []

    for f in sorted(os.listdir(check_dir)):
        if f.endswith(".py") and f != "base_check.py" and not f.startswith("__"):
            module_name = f"checks.{f[:-3]}"
            try:
                module = importlib.import_module(module_name)
            except Exception as e:
                logger.error(f"Could not import checks from {f}: {e}", exc_info=True)
                continue
            for name, obj in inspect.getmembers(module, inspect.isclass):
                if (
                    issubclass(obj, BaseCheck)
                    and obj is not BaseCheck
                    and obj.__module__ == module_name
                ):
                    checks.append(obj())
                    logger.debug(f"Discovered check: {name}")

    order = list(CHECK_TYPES)
    return sorted(checks, key=lambda c: order.index(c.name) if c.name in order else len(order))


def verify(options: VerifyOptions) -> VerifyReport:
    """Run the oracle suite; slow checks only with include_slow or when named in `only`."""
    unknown = set(options.only or []) - set(CHECK_TYPES)
    if unknown:
        raise ValueError(f"Unknown checks: {', '.join(sorted(unknown))}")

    report = VerifyReport()
    for check in discover_checks():
        if options.only is not None:
            if check.name not in options.only:
                continue
        elif check.slow and not options.include_slow:
            logger.info(f"Skipping slow check '{check.name}'")
            continue

        logger.info(f"--- Running check: {check.name} ({CHECK_TYPES.get(check.name, '')}) ---")
        started = time.perf_counter()
        try:
            result = check.run(options)
        except Exception as e:
            logger.error(f"Error running check {check.name}: {e}", exc_info=True)
            result = CheckResult(check.name, False, float("nan"), float("nan"), f"error: {e}")
        result.elapsed = time.perf_counter() - started
        report.results.append(result)
        logger.info(f"--- Finished check: {check.name} ({'pass' if result.passed else 'FAIL'}) ---")

    return report
