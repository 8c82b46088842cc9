"""Streaming alert engine: classify each register, warn on abnormal runs.

A warning fires once a trigger style has been predicted for k consecutive
registers, and then not again until the cooldown has elapsed, so a sustained
abnormal stretch produces periodic reminders rather than one warning per
second.
"""

from dataclasses import dataclass, replace

from . import ann
from .errors import OutOfOrderRegister
from .records import Dataset, DrivingStyle, Register


@dataclass(frozen=True)
class AlertPolicy:
    trigger_styles: frozenset = frozenset({DrivingStyle.AGG})
    consecutive: int = 3          # registers of the same trigger style
    cooldown_s: float = 30.0      # minimum spacing between events

    def __post_init__(self):
        if self.consecutive < 1:
            raise ValueError("consecutive threshold must be >= 1")
        if self.cooldown_s < 0:
            raise ValueError("cooldown must be >= 0")


@dataclass(frozen=True)
class AlertEvent:
    time_of_day: float
    latitude: float
    longitude: float
    style: DrivingStyle
    message: str


@dataclass(frozen=True)
class AlertState:
    """Per-stream debounce state; start from AlertState()."""

    run_style: DrivingStyle | None = None
    run_length: int = 0
    last_event_time: float | None = None
    last_time: float | None = None


def _message(style: DrivingStyle) -> str:
    names = {
        DrivingStyle.CON: "conservative",
        DrivingStyle.NOR: "normal",
        DrivingStyle.AGG: "aggressive",
    }
    return f"warning: {names[style]} driving pattern detected"


def step(
    state: AlertState,
    net: ann.Network,
    r: Register,
    policy: AlertPolicy = AlertPolicy(),
) -> tuple[AlertState, AlertEvent | None, DrivingStyle]:
    """Advance the state machine by one register.

    Returns the new state, an event when the policy fires, and the predicted
    style (always, whether or not an event fires).  Registers must arrive
    with strictly increasing timestamps.
    """
    if state.last_time is not None and r.time_of_day <= state.last_time:
        raise OutOfOrderRegister(
            f"register at {r.time_of_day} after {state.last_time}"
        )
    style = ann.predict(net, r)
    if style is state.run_style:
        run_length = state.run_length + 1
    else:
        run_length = 1

    event = None
    if style in policy.trigger_styles and run_length >= policy.consecutive:
        quiet = (state.last_event_time is None
                 or r.time_of_day - state.last_event_time >= policy.cooldown_s)
        if quiet:
            event = AlertEvent(r.time_of_day, r.latitude, r.longitude,
                               style, _message(style))

    return (
        AlertState(
            run_style=style,
            run_length=run_length,
            last_event_time=r.time_of_day if event else state.last_event_time,
            last_time=r.time_of_day,
        ),
        event,
        style,
    )


def replay(
    log: Dataset,
    net: ann.Network,
    policy: AlertPolicy = AlertPolicy(),
) -> list[AlertEvent]:
    """Fold step over a time-ordered log; equals the streaming behavior."""
    state = AlertState()
    events = []
    for r in log:
        state, event, _ = step(state, net, r, policy)
        if event is not None:
            events.append(event)
    return events
