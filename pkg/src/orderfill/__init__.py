"""Lost-sales inventory systems with online order fulfillment."""

from .core import (ArrivalPath, ConfigError, CycleResult, DomainError, InvariantViolation,
                   PipelineState, ProblemSpec, inventory_position, validate)
from .fulfillment import FulfillmentAlgo, LookAheadContext, bayes_selector
from .replenishment import BaseStock, ConstantOrder
from .engine import RunConfig, RunSummary, simulate, optimize_parameter, regret_series, exact_expectation

__version__ = "0.1.0"
