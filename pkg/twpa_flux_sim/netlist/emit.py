from decimal import Decimal
from pathlib import Path

from twpa_flux_sim._types import ComponentKind
from twpa_flux_sim.models.circuit import Component, Netlist
from twpa_flux_sim.netlist.parse import SCALE_EXPONENTS

_SUFFIXES = {exponent: suffix for suffix, exponent in SCALE_EXPONENTS.items()}
_MIN_EXP = min(_SUFFIXES)
_MAX_EXP = max(_SUFFIXES)


def format_value(value: float) -> str:
    """Format `value` with an engineering suffix; parses back to the identical float."""
    if value == 0:
        return "0"
    exact = Decimal(repr(value))
    exponent = (exact.adjusted() // 3) * 3
    exponent = max(_MIN_EXP, min(_MAX_EXP, exponent))
    mantissa = exact.scaleb(-exponent).normalize()
    return f"{mantissa:f}{_SUFFIXES[exponent]}"


def emit_component(component: Component) -> str:
    n1, n2 = component.nodes
    head = f"{component.name} {n1} {n2}"

    match component.kind:
        case ComponentKind.CAPACITOR:
            line = f"{head} {format_value(component.value)}"
            if component.loss_tangent:
                line += f" tan={component.loss_tangent!r}"
            return line
        case ComponentKind.INDUCTOR:
            return f"{head} {format_value(component.value)}"
        case ComponentKind.MUTUAL_COUPLING:
            return f"{head} {component.value!r}"
        case ComponentKind.JOSEPHSON_JUNCTION:
            return f"{head} Ic={format_value(component.value)}"
        case ComponentKind.PORT:
            return (
                f"{head} R={format_value(component.value)}"
                f" port={component.port_number}"
            )


def emit_netlist(netlist: Netlist, *, header: str | None = None) -> str:
    lines = [f"# {line}" for line in (header or "").splitlines()]
    lines.extend(emit_component(c) for c in netlist.components)
    return "\n".join(lines) + "\n"


def save_netlist(netlist: Netlist, path: Path, *, header: str | None = None) -> None:
    Path(path).write_text(emit_netlist(netlist, header=header), encoding="utf-8")
