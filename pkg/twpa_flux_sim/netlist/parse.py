"""Parse the line-oriented netlist format.

One component per line; the leading letter of the name picks the kind:

    C<name> n1 n2 <value> [tan=<x>]
    L<name> n1 n2 <value>
    B<name> n1 n2 Ic=<value>
    K<name> L<a> L<b> <k>
    P<name> n1 n2 R=<value> port=<n>

`#` starts a comment. Values accept SPICE-style scale suffixes (case-insensitive):
f, p, n, u, m, k, meg, g, t. Node "0" is ground.
"""

import re
from decimal import Decimal, InvalidOperation
from pathlib import Path

from twpa_flux_sim._types import ComponentKind
from twpa_flux_sim.exceptions import (
    InvalidParameters,
    NetlistSemanticError,
    NetlistSyntaxError,
)
from twpa_flux_sim.models.circuit import Component, Netlist

SCALE_EXPONENTS: dict[str, int] = {
    "f": -15,
    "p": -12,
    "n": -9,
    "u": -6,
    "m": -3,
    "": 0,
    "k": 3,
    "meg": 6,
    "g": 9,
    "t": 12,
}

_VALUE_RE = re.compile(
    r"^(?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<suffix>[a-zA-Z]*)$",
)

# Options each kind accepts, and which of them are required.
_OPTIONS: dict[ComponentKind, tuple[set[str], set[str]]] = {
    ComponentKind.CAPACITOR: ({"tan"}, set()),
    ComponentKind.INDUCTOR: (set(), set()),
    ComponentKind.JOSEPHSON_JUNCTION: ({"ic"}, {"ic"}),
    ComponentKind.MUTUAL_COUPLING: (set(), set()),
    ComponentKind.PORT: ({"r", "port"}, {"r", "port"}),
}
_POSITIONAL_VALUE_KINDS = frozenset(
    {ComponentKind.CAPACITOR, ComponentKind.INDUCTOR, ComponentKind.MUTUAL_COUPLING},
)


def parse_value(text: str) -> float:
    """Convert a number with optional scale suffix, e.g. "250f", to float.

    The decimal is scaled exactly before rounding to float, so "250f" parses to the same
    float as the literal 250e-15.
    """
    match = _VALUE_RE.match(text.strip())
    if not match:
        raise ValueError(f"Unable to parse value {text!r}")

    suffix = match["suffix"].lower()
    if suffix not in SCALE_EXPONENTS:
        raise ValueError(f"Unknown scale suffix {match['suffix']!r} in {text!r}")

    try:
        number = Decimal(match["number"])
    except InvalidOperation as e:
        raise ValueError(f"Unable to parse value {text!r}") from e
    return float(number.scaleb(SCALE_EXPONENTS[suffix]))


def parse_netlist(text: str) -> Netlist:
    components: list[Component] = []
    lines: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        component = _parse_line(line, lineno)
        if component.name in lines:
            raise NetlistSemanticError(
                f"Duplicate component name {component.name}"
                f" (first defined on line {lines[component.name]})",
                names=[component.name],
                line=lineno,
            )
        lines[component.name] = lineno
        components.append(component)

    return Netlist.from_components(components, lines=lines)


def load_netlist(path: Path) -> Netlist:
    return parse_netlist(Path(path).read_text(encoding="utf-8"))


def _parse_line(line: str, lineno: int) -> Component:
    tokens = line.split()
    name = tokens[0]
    try:
        kind = ComponentKind(name[0].upper())
    except ValueError:
        raise NetlistSyntaxError(
            lineno,
            f"unknown component type {name[0]!r} in {name!r}",
        ) from None

    positional = [t for t in tokens[1:] if "=" not in t]
    options = _parse_options([t for t in tokens[1:] if "=" in t], kind, lineno)

    if kind in _POSITIONAL_VALUE_KINDS:
        n1, n2, value_text = _expect(positional, 3, name, lineno)
        value = _value(value_text, lineno)
    elif kind is ComponentKind.JOSEPHSON_JUNCTION:
        n1, n2 = _expect(positional, 2, name, lineno)
        value = _value(options["ic"], lineno)
    else:
        n1, n2 = _expect(positional, 2, name, lineno)
        value = _value(options["r"], lineno)

    port_number = None
    if kind is ComponentKind.PORT:
        try:
            port_number = int(options["port"])
        except ValueError:
            raise NetlistSyntaxError(
                lineno,
                f"port number must be an integer, got {options['port']!r}",
            ) from None

    loss_tangent = _value(options["tan"], lineno) if "tan" in options else 0.0

    try:
        return Component(
            kind=kind,
            name=name,
            nodes=(n1, n2),
            value=value,
            loss_tangent=loss_tangent,
            port_number=port_number,
        )
    except InvalidParameters as e:
        raise NetlistSyntaxError(lineno, str(e)) from e


def _parse_options(
    tokens: list[str],
    kind: ComponentKind,
    lineno: int,
) -> dict[str, str]:
    allowed, required = _OPTIONS[kind]
    options: dict[str, str] = {}
    for token in tokens:
        key, _, value = token.partition("=")
        key = key.lower()
        if key not in allowed:
            raise NetlistSyntaxError(lineno, f"unexpected option {key!r}")
        if not value:
            raise NetlistSyntaxError(lineno, f"option {key!r} has no value")
        options[key] = value

    missing = required - options.keys()
    if missing:
        raise NetlistSyntaxError(lineno, f"missing option(s) {sorted(missing)}")
    return options


def _expect(positional: list[str], count: int, name: str, lineno: int) -> list[str]:
    if len(positional) != count:
        raise NetlistSyntaxError(
            lineno,
            f"{name} expects {count} positional fields, got {len(positional)}",
        )
    return positional


def _value(text: str, lineno: int) -> float:
    try:
        return parse_value(text)
    except ValueError as e:
        raise NetlistSyntaxError(lineno, str(e)) from e
