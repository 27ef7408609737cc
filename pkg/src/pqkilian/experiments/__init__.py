from .runner import ScenarioConfig, make_config, recheck, run, write
from .scenarios import REGISTRY, Scenario

__all__ = ["REGISTRY", "Scenario", "ScenarioConfig", "make_config", "recheck", "run", "write"]
