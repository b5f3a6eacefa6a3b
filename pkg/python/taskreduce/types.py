# W0-BEGIN:types
from __future__ import annotations

from typing import Any, Literal, Protocol

import numpy as np

Direction = Literal["N", "E", "S", "W"]
ActionDecode = Literal["argmax", "tanh"]
Role = Literal["encoder", "decoder"]


class TaskModel(Protocol):
    """Sampling interface behind a TaskSpec: p0, p, sigma, r and the terminal predicate."""

    def initial(self, rng: np.random.Generator) -> Any: ...
    def observe(self, state: Any, rng: np.random.Generator) -> Any: ...
    def transition(self, state: Any, action: Any, rng: np.random.Generator) -> Any: ...
    def reward(self, state: Any, action: Any) -> float: ...
    def terminal(self, state: Any) -> bool: ...


class SupportsAct(Protocol):
    """Anything usable as a deterministic memoryless policy O -> A."""

    observations: Any
    actions: Any

    def act(self, observation: Any) -> Any: ...

# Public re-export set is defined in __init__.__all__
# W0-END:types
