"""On-board terminal dashboard.

One line per frame: background state, per-object distance/TTC/THW, and
the most recent operator message. The effective background is the worse
of the locally computed state and any operator override, with overrides
expiring after OVERRIDE_TTL_S so a stale recall cannot pin the display.
"""

from dataclasses import dataclass

from ..protocol import OperatorMessage
from ..tracker import SafetyReport, SafetyState, format_metric

OVERRIDE_TTL_S = 10.0

_COLORS = {
    SafetyState.SAFE: "\x1b[32m",  # green
    SafetyState.HAZARDOUS: "\x1b[33m",  # yellow
    SafetyState.DANGEROUS: "\x1b[31m",  # red
}
_RESET = "\x1b[0m"

_SEVERITY_LABELS = {0: "INFO", 1: "WARNING", 2: "RECALL"}


@dataclass
class OnboardDisplay:
    """Tracks local state, operator override, and the message banner."""

    use_color: bool = True
    local_state: SafetyState = SafetyState.SAFE
    override_state: SafetyState | None = None
    override_until_s: float = 0.0
    operator_text: str = ""
    operator_severity: int = 0
    operator_text_at_s: float | None = None

    def update_report(self, report: SafetyReport):
        self.local_state = report.overall_state

    def apply_operator(self, msg: OperatorMessage, now_s: float):
        if msg.state_override > 0:
            self.override_state = SafetyState(msg.state_override - 1)
            self.override_until_s = now_s + OVERRIDE_TTL_S
        if msg.text:
            self.operator_text = msg.text
            self.operator_severity = msg.severity
            self.operator_text_at_s = now_s

    def effective_state(self, now_s: float) -> SafetyState:
        """Never less severe than the local state; override decays after its TTL."""
        if self.override_state is not None and now_s >= self.override_until_s:
            self.override_state = None
        if self.override_state is None:
            return self.local_state
        return max(self.local_state, self.override_state)

    def render_line(self, report: SafetyReport, now_s: float) -> str:
        state = self.effective_state(now_s)
        label = f"{state.label.upper():9s}"
        if self.use_color:
            label = f"{_COLORS[state]}{label}{_RESET}"
        cells = [f"[{report.frame_index:5d}] {label}"]
        for obj in report.objects:
            marker = "*" if obj.stale else " "
            cells.append(
                f"id {obj.object_id} {obj.obj_class.value}{marker} "
                f"d={obj.distance_m:5.1f}m v={obj.abs_speed_mps:4.1f}m/s "
                f"ttc={format_metric(obj.ttc_s)} thw={format_metric(obj.thw_s)}"
            )
        if not report.objects:
            cells.append("clear road")
        line = " | ".join(cells)
        if self.operator_text and self.operator_text_at_s is not None:
            age = now_s - self.operator_text_at_s
            severity = _SEVERITY_LABELS.get(self.operator_severity, "?")
            line += f" | {severity}: {self.operator_text} ({age:.0f}s ago)"
        return line
