"""Actor registry and scripted agent functions.

Every leaf action and every logics lookup goes through here as an
``agent.function`` reference. Real-mode calls consume an ordered list of
canned responses (that cursor is the only agent state there is);
simulation-mode calls return a fixed prediction and never touch it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import ActorFailure, DuplicateReference, SimulationUnsupported, UnknownReference

# A canned response is an envelope: {"value": ...} for success,
# {"fail": msg, "detail": {...}} for a scripted failure. Either form may
# carry "duration" (seconds) and "raise" (a situation header the agent
# posts to the queue after answering).
Response = dict[str, Any]

RaiseHook = Callable[[dict], None]


def _normalize(response: Any) -> Response:
    if isinstance(response, dict) and ("value" in response or "fail" in response):
        return response
    return {"value": response}


@dataclass
class AgentFunction:
    agent: str
    function: str
    responses: list[Response] = field(default_factory=list)
    default: Response = field(default_factory=lambda: {"value": {"ok": True}})
    simulation: Response | None = field(default_factory=lambda: {"value": {"ok": True}})
    cursor: int = 0

    @property
    def reference(self) -> str:
        return f"{self.agent}.{self.function}"

    def next_real(self) -> Response:
        if self.cursor < len(self.responses):
            response = self.responses[self.cursor]
            self.cursor += 1
            return response
        return self.default


class AgentRegistry:
    """Named agent functions, invokable in real or simulation mode."""

    def __init__(self):
        self._functions: dict[str, AgentFunction] = {}
        self.on_raise: RaiseHook | None = None

    def register(self, spec: AgentFunction) -> str:
        if spec.reference in self._functions:
            raise DuplicateReference(f"{spec.reference} already registered")
        self._functions[spec.reference] = spec
        return spec.reference

    def has(self, reference: str) -> bool:
        return reference in self._functions

    def supports_simulation(self, reference: str) -> bool:
        fn = self._functions.get(reference)
        return fn is not None and fn.simulation is not None

    def references(self) -> list[str]:
        return sorted(self._functions)

    def extend_script(self, reference: str, responses: list[Any],
                      simulation: Any | None = None) -> None:
        """Append canned responses (used by scenario timeline triggers)."""
        fn = self._functions.get(reference)
        if fn is None:
            agent, function = reference.split(".", 1)
            fn = AgentFunction(agent=agent, function=function)
            self._functions[reference] = fn
        fn.responses.extend(_normalize(r) for r in responses)
        if simulation is not None:
            fn.simulation = _normalize(simulation)

    def invoke(self, reference: str, args: dict[str, Any] | None = None,
               mode: str = "real") -> Any:
        """Invoke a function; returns its value tree.

        Real mode consumes the next canned response and may post a scripted
        situation through ``on_raise``; simulation mode is side-effect-free.
        """
        fn = self._functions.get(reference)
        if fn is None:
            raise UnknownReference(f"no agent function {reference!r}")
        if mode == "simulation":
            if fn.simulation is None:
                raise SimulationUnsupported(f"{reference} has no simulation handler")
            response = fn.simulation
            if "fail" in response:
                raise ActorFailure(response["fail"], detail=response.get("detail"))
            return response.get("value")

        response = fn.next_real()
        raised = response.get("raise")
        if raised is not None and self.on_raise is not None:
            self.on_raise(dict(raised))
        if "fail" in response:
            raise ActorFailure(response["fail"], detail=response.get("detail"))
        return response.get("value")

    def response_duration(self, reference: str, response_value: Any) -> int | None:
        # duration travels inside the envelope; exposed via invoke_with_meta
        return None

    def invoke_with_meta(self, reference: str, args: dict[str, Any] | None = None,
                         mode: str = "real") -> tuple[Any, int | None]:
        """Like invoke, but also reports the scripted duration if any."""
        fn = self._functions.get(reference)
        if fn is None:
            raise UnknownReference(f"no agent function {reference!r}")
        if mode == "simulation":
            if fn.simulation is None:
                raise SimulationUnsupported(f"{reference} has no simulation handler")
            response = fn.simulation
        else:
            response = fn.next_real()
            raised = response.get("raise")
            if raised is not None and self.on_raise is not None:
                self.on_raise(dict(raised))
        duration = response.get("duration")
        if "fail" in response:
            raise ActorFailure(response["fail"], detail=response.get("detail"))
        return response.get("value"), duration


# Functions every deployment registers; scenario scripts append responses.
DEFAULT_FUNCTIONS = [
    ("vda", "checking_window"),
    ("vda", "close_wdw_status"),
    ("vda", "wdw_malfunc_detect"),
    ("vda", "broken_wdw_detect"),
    ("weather", "current_weather"),
    ("chat", "wetness"),
    ("chat", "confirm"),
    ("chat", "request"),
    ("chat", "connect_passenger"),
    ("vehicle", "close_window"),
    ("vehicle", "open_window"),
    ("vehicle", "open_trunk"),
    ("vehicle", "close_trunk"),
    ("vehicle", "load_luggage"),
    ("vehicle", "wait"),
    ("vehicle", "offboard"),
    ("vehicle", "onboard"),
    ("map", "plan_route"),
    ("map", "cruise"),
    ("map", "arrive"),
    ("map", "drive"),
    ("map", "current_location"),
    ("map", "route_destination"),
    ("mobile", "notify"),
    ("service_center", "dispatch_trip"),
]


def build_default_registry() -> AgentRegistry:
    registry = AgentRegistry()
    for agent, function in DEFAULT_FUNCTIONS:
        registry.register(AgentFunction(agent=agent, function=function))
    return registry


def apply_agent_script(registry: AgentRegistry, script: dict[str, Any]) -> None:
    """Load per-reference canned responses from a scenario script block."""
    for reference, spec in script.items():
        if isinstance(spec, list):
            registry.extend_script(reference, spec)
            continue
        responses = spec.get("responses", [])
        registry.extend_script(reference, responses, simulation=spec.get("simulation"))
        if "default" in spec:
            fn = registry._functions[reference]
            fn.default = _normalize(spec["default"])
        if spec.get("simulation_unsupported"):
            registry._functions[reference].simulation = None
