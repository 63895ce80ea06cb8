"""SPICE-flavored netlist parsing for PWM converter circuits.

The input is line oriented: one element per line, comments starting with
``*`` or ``#``, case-insensitive keywords, engineering suffixes on values.
Switching cells are three-terminal elements (``X`` lines) carrying their
own inductance, duty ratio and switch type; switching frequency and run
duration are global ``.FS`` / ``.TRAN`` directives.

Example::

    * synchronous buck
    VIN 1 0 10
    X1  1 0 2 CELL KIND=basic SW=syn L=10u D=0.5
    C1  2 0 100u
    R1  2 0 5
    IOUT 2 0 4
    .FS 100k
    .TRAN 5m
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

GROUND = "0"

SUFFIX_MULTIPLIERS = {
    "f": 1e-15,
    "p": 1e-12,
    "n": 1e-9,
    "u": 1e-6,
    "m": 1e-3,
    "k": 1e3,
    "meg": 1e6,
    "g": 1e9,
}

_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


class NetlistError(ValueError):
    """Netlist syntax or validation error with source location."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(self._format())

    def _format(self) -> str:
        if self.line is None:
            return self.message
        if self.column is None:
            return f"line {self.line}: {self.message}"
        return f"line {self.line}, column {self.column}: {self.message}"


def parse_value(token: str) -> float:
    """Parse a decimal literal with an optional engineering suffix.

    Recognized suffixes: f, p, n, u, m, k, meg, g (case-insensitive).
    Unit letters after a valid suffix are ignored, so ``10uH`` is 1e-5.

    >>> parse_value("100u")
    0.0001
    >>> parse_value("2meg")
    2000000.0
    """
    m = _NUMBER_RE.match(token)
    if m is None or m.start() != 0:
        raise NetlistError(f"malformed number {token!r}")
    magnitude = float(m.group(0))
    rest = token[m.end() :]
    if not rest:
        return magnitude
    low = rest.lower()
    if low.startswith("meg"):
        multiplier, tail = 1e6, rest[3:]
    elif low[0] in SUFFIX_MULTIPLIERS:
        multiplier, tail = SUFFIX_MULTIPLIERS[low[0]], rest[1:]
    else:
        raise NetlistError(f"unknown suffix {rest!r} in value {token!r}")
    if tail and not tail.isalpha():
        raise NetlistError(f"malformed number {token!r}")
    return magnitude * multiplier


class CellKind(enum.Enum):
    BASIC = "basic"
    FLYBACK = "flyback"


class SwitchType(enum.Enum):
    SYNCHRONOUS = "syn"
    DIODE = "diode"


@dataclass(frozen=True)
class Resistor:
    name: str
    node1: str
    node2: str
    ohms: float


@dataclass(frozen=True)
class Capacitor:
    name: str
    node_pos: str
    node_neg: str
    farads: float
    initial_volts: float = 0.0


@dataclass(frozen=True)
class VoltageSource:
    name: str
    node_pos: str
    node_neg: str
    volts: float


@dataclass(frozen=True)
class CurrentSource:
    """Positive value drives current from node_pos through the source to node_neg."""

    name: str
    node_pos: str
    node_neg: str
    amps: float


@dataclass(frozen=True)
class SwitchingCell:
    """Three-terminal averaged switching cell.

    ``node_active`` is the controlled-switch terminal, ``node_passive`` the
    diode (or complementary switch) terminal and ``node_common`` the shared
    return carrying the inductor.  For the flyback variant ``inductance`` is
    the magnetizing inductance and ``turns_ratio`` the secondary:primary
    winding ratio.
    """

    name: str
    node_active: str
    node_passive: str
    node_common: str
    kind: CellKind
    switch_type: SwitchType
    inductance: float
    duty: float
    turns_ratio: float = 1.0
    initial_current: float = 0.0


@dataclass(frozen=True)
class SimDirectives:
    switching_frequency: float
    duration: float
    oracle_substeps: int = 1000

    @property
    def period(self) -> float:
        return 1.0 / self.switching_frequency


@dataclass(frozen=True)
class Circuit:
    resistors: tuple[Resistor, ...]
    capacitors: tuple[Capacitor, ...]
    vsources: tuple[VoltageSource, ...]
    isources: tuple[CurrentSource, ...]
    cells: tuple[SwitchingCell, ...]
    directives: SimDirectives
    nodes: tuple[str, ...] = field(default=())

    @staticmethod
    def build(
        resistors=(),
        capacitors=(),
        vsources=(),
        isources=(),
        cells=(),
        directives=None,
    ) -> "Circuit":
        """Construct a Circuit with the canonical node ordering."""
        resistors = tuple(resistors)
        capacitors = tuple(capacitors)
        vsources = tuple(vsources)
        isources = tuple(isources)
        cells = tuple(cells)
        order: list[str] = []
        seen: set[str] = set()

        def visit(node: str) -> None:
            if node not in seen:
                seen.add(node)
                order.append(node)

        for v in vsources:
            visit(v.node_pos), visit(v.node_neg)
        for i in isources:
            visit(i.node_pos), visit(i.node_neg)
        for r in resistors:
            visit(r.node1), visit(r.node2)
        for c in capacitors:
            visit(c.node_pos), visit(c.node_neg)
        for x in cells:
            visit(x.node_active), visit(x.node_passive), visit(x.node_common)
        return Circuit(resistors, capacitors, vsources, isources, cells, directives, tuple(order))

    @property
    def non_ground_nodes(self) -> tuple[str, ...]:
        return tuple(n for n in self.nodes if n != GROUND)

    def element_names(self) -> list[str]:
        names = []
        for group in (self.vsources, self.isources, self.resistors, self.capacitors, self.cells):
            names.extend(el.name for el in group)
        return names

    def cell(self, name: str) -> SwitchingCell:
        for c in self.cells:
            if c.name.lower() == name.lower():
                return c
        raise KeyError(f"no switching cell named {name!r}")

    def capacitor(self, name: str) -> Capacitor:
        for c in self.capacitors:
            if c.name.lower() == name.lower():
                return c
        raise KeyError(f"no capacitor named {name!r}")


class _Token:
    __slots__ = ("text", "line", "column")

    def __init__(self, text: str, line: int, column: int):
        self.text = text
        self.line = line
        self.column = column


def _tokenize(line: str, line_no: int) -> list[_Token]:
    return [_Token(m.group(0), line_no, m.start() + 1) for m in re.finditer(r"\S+", line)]


def _value_of(tok: _Token) -> float:
    try:
        return parse_value(tok.text)
    except NetlistError as exc:
        raise NetlistError(exc.message, tok.line, tok.column) from None


def _keyword_params(tokens: list[_Token]) -> dict[str, _Token]:
    params: dict[str, _Token] = {}
    for tok in tokens:
        if "=" not in tok.text:
            raise NetlistError(f"expected KEY=VALUE parameter, got {tok.text!r}", tok.line, tok.column)
        key, _, value = tok.text.partition("=")
        key = key.lower()
        if key in params:
            raise NetlistError(f"duplicate parameter {key.upper()}", tok.line, tok.column)
        params[key] = _Token(value, tok.line, tok.column + len(key) + 1)
    return params


def parse(text: str) -> Circuit:
    """Parse netlist text into a validated :class:`Circuit`.

    Raises :class:`NetlistError` (with line and column where meaningful)
    for every malformed input; never any other exception type.
    """
    resistors: list[Resistor] = []
    capacitors: list[Capacitor] = []
    vsources: list[VoltageSource] = []
    isources: list[CurrentSource] = []
    cells: list[SwitchingCell] = []
    fs_tok: _Token | None = None
    tran_tok: _Token | None = None
    substeps: int | None = None
    element_lines: dict[str, int] = {}

    def check_name(name: str, line: int) -> None:
        key = name.lower()
        if key in element_lines:
            raise NetlistError(
                f"duplicate element name {name!r} (first defined on line {element_lines[key]})", line
            )
        element_lines[key] = line

    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("*") or stripped.startswith("#"):
            continue
        tokens = _tokenize(raw, line_no)
        head = tokens[0]
        kind = head.text[0].upper()

        if kind == ".":
            directive = head.text.lower()
            if directive == ".end":
                break
            if directive == ".fs":
                if fs_tok is not None:
                    raise NetlistError("duplicate .FS directive", line_no, head.column)
                if len(tokens) != 2:
                    raise NetlistError(".FS takes exactly one value", line_no, head.column)
                fs_tok = tokens[1]
            elif directive == ".tran":
                if tran_tok is not None:
                    raise NetlistError("duplicate .TRAN directive", line_no, head.column)
                if len(tokens) != 2:
                    raise NetlistError(".TRAN takes exactly one value", line_no, head.column)
                tran_tok = tokens[1]
            elif directive == ".oraclesteps":
                if substeps is not None:
                    raise NetlistError("duplicate .ORACLESTEPS directive", line_no, head.column)
                if len(tokens) != 2:
                    raise NetlistError(".ORACLESTEPS takes exactly one integer", line_no, head.column)
                try:
                    substeps = int(tokens[1].text)
                except ValueError:
                    raise NetlistError(
                        f"malformed integer {tokens[1].text!r}", line_no, tokens[1].column
                    ) from None
                if substeps < 1:
                    raise NetlistError(".ORACLESTEPS must be positive", line_no, tokens[1].column)
            else:
                raise NetlistError(f"unsupported directive {head.text!r}", line_no, head.column)
            continue

        if kind in "VIRC":
            if len(tokens) < 4:
                raise NetlistError(
                    f"{kind} element needs: {kind}<name> n1 n2 <value>", line_no, head.column
                )
            name = head.text
            check_name(name, line_no)
            n1, n2 = tokens[1].text, tokens[2].text
            if n1 == n2:
                raise NetlistError(f"element {name!r} shorts a single node {n1!r}", line_no, tokens[2].column)
            value = _value_of(tokens[3])
            extra = tokens[4:]
            if kind == "C":
                params = _keyword_params(extra)
                unknown = set(params) - {"ic"}
                if unknown:
                    raise NetlistError(f"unknown capacitor parameter {unknown.pop().upper()}", line_no)
                if value <= 0:
                    raise NetlistError(f"capacitance must be positive, got {value!r}", line_no, tokens[3].column)
                ic = _value_of(params["ic"]) if "ic" in params else 0.0
                capacitors.append(Capacitor(name, n1, n2, value, ic))
                continue
            if extra:
                raise NetlistError(f"unexpected token {extra[0].text!r}", line_no, extra[0].column)
            if kind == "R":
                if value <= 0:
                    raise NetlistError(f"resistance must be positive, got {value!r}", line_no, tokens[3].column)
                resistors.append(Resistor(name, n1, n2, value))
            elif kind == "V":
                vsources.append(VoltageSource(name, n1, n2, value))
            else:
                isources.append(CurrentSource(name, n1, n2, value))
            continue

        if kind == "X":
            if len(tokens) < 5 or tokens[4].text.upper() != "CELL":
                raise NetlistError(
                    "switching cell needs: X<name> na np nc CELL KIND=... SW=... L=... D=...",
                    line_no,
                    head.column,
                )
            name = head.text
            check_name(name, line_no)
            na, np_, nc = tokens[1].text, tokens[2].text, tokens[3].text
            if len({na, np_, nc}) != 3:
                raise NetlistError(f"cell {name!r} terminals must be three distinct nodes", line_no)
            params = _keyword_params(tokens[5:])
            unknown = set(params) - {"kind", "sw", "l", "d", "n", "ic"}
            if unknown:
                raise NetlistError(f"unknown cell parameter {unknown.pop().upper()}", line_no)
            for required in ("kind", "sw", "l", "d"):
                if required not in params:
                    raise NetlistError(
                        f"missing required cell parameter {required.upper()} on cell {name!r}", line_no
                    )
            kind_txt = params["kind"].text.lower()
            try:
                cell_kind = CellKind(kind_txt)
            except ValueError:
                raise NetlistError(
                    f"cell KIND must be basic or flyback, got {kind_txt!r}",
                    line_no,
                    params["kind"].column,
                ) from None
            sw_txt = params["sw"].text.lower()
            try:
                sw = SwitchType(sw_txt)
            except ValueError:
                raise NetlistError(
                    f"cell SW must be syn or diode, got {sw_txt!r}", line_no, params["sw"].column
                ) from None
            inductance = _value_of(params["l"])
            duty = _value_of(params["d"])
            ratio = _value_of(params["n"]) if "n" in params else 1.0
            ic = _value_of(params["ic"]) if "ic" in params else 0.0
            if inductance <= 0:
                raise NetlistError(f"cell inductance must be positive, got {inductance!r}", line_no)
            if not 0.0 < duty < 1.0:
                raise NetlistError(f"duty ratio must be in (0, 1), got {duty!r}", line_no)
            if cell_kind is CellKind.FLYBACK and ratio <= 0:
                raise NetlistError(f"turns ratio must be positive, got {ratio!r}", line_no)
            if cell_kind is CellKind.BASIC:
                ratio = 1.0
            if sw is SwitchType.DIODE and ic < 0:
                raise NetlistError(
                    f"diode cell {name!r} cannot start with negative current {ic!r}", line_no
                )
            cells.append(
                SwitchingCell(name, na, np_, nc, cell_kind, sw, inductance, duty, ratio, ic)
            )
            continue

        raise NetlistError(f"unknown element prefix {head.text[0]!r}", line_no, head.column)

    if fs_tok is not None:
        fs = _value_of(fs_tok)
        if fs <= 0:
            raise NetlistError(f"switching frequency must be positive, got {fs!r}", fs_tok.line)
    if tran_tok is not None:
        duration = _value_of(tran_tok)

    circuit = Circuit.build(resistors, capacitors, vsources, isources, cells, None)
    if GROUND not in circuit.nodes:
        raise NetlistError("missing ground node (node 0)")
    if fs_tok is None:
        raise NetlistError("missing .FS directive")
    if tran_tok is None:
        raise NetlistError("missing .TRAN directive")
    if duration < (1.0 / fs) * (1.0 - 1e-9):
        raise NetlistError(
            f"duration {duration!r} is shorter than one switching period {1.0 / fs!r}", tran_tok.line
        )
    directives = SimDirectives(fs, duration, substeps if substeps is not None else 1000)
    circuit = Circuit(
        circuit.resistors,
        circuit.capacitors,
        circuit.vsources,
        circuit.isources,
        circuit.cells,
        directives,
        circuit.nodes,
    )
    validate(circuit, element_lines)
    return circuit


def validate(circuit: Circuit, element_lines: dict[str, int] | None = None) -> None:
    """Check circuit-level invariants; raises :class:`NetlistError`."""
    lines = element_lines or {}

    def line_of(name: str) -> int | None:
        return lines.get(name.lower())

    if GROUND not in circuit.nodes:
        raise NetlistError("missing ground node (node 0)")
    if circuit.directives is None:
        raise NetlistError("missing simulation directives")
    d = circuit.directives
    if d.switching_frequency <= 0:
        raise NetlistError("switching frequency must be positive")
    if d.duration < d.period * (1.0 - 1e-9):
        raise NetlistError(
            f"duration {d.duration!r} is shorter than one switching period {d.period!r}"
        )
    if d.oracle_substeps < 1:
        raise NetlistError("oracle substeps must be positive")

    adjacency: dict[str, set[str]] = {n: set() for n in circuit.nodes}
    node_line: dict[str, int | None] = {}

    def connect(name: str, *nodes: str) -> None:
        for n in nodes:
            node_line.setdefault(n, line_of(name))
        for a in nodes:
            for b in nodes:
                if a != b:
                    adjacency[a].add(b)

    for r in circuit.resistors:
        if r.ohms <= 0:
            raise NetlistError(f"resistance must be positive on {r.name!r}", line_of(r.name))
        connect(r.name, r.node1, r.node2)
    for c in circuit.capacitors:
        if c.farads <= 0:
            raise NetlistError(f"capacitance must be positive on {c.name!r}", line_of(c.name))
        connect(c.name, c.node_pos, c.node_neg)
    for v in circuit.vsources:
        connect(v.name, v.node_pos, v.node_neg)
    for i in circuit.isources:
        connect(i.name, i.node_pos, i.node_neg)
    for x in circuit.cells:
        if x.inductance <= 0:
            raise NetlistError(f"cell inductance must be positive on {x.name!r}", line_of(x.name))
        if not 0.0 < x.duty < 1.0:
            raise NetlistError(f"duty ratio must be in (0, 1) on {x.name!r}", line_of(x.name))
        if x.turns_ratio <= 0:
            raise NetlistError(f"turns ratio must be positive on {x.name!r}", line_of(x.name))
        if x.switch_type is SwitchType.DIODE and x.initial_current < 0:
            raise NetlistError(
                f"diode cell {x.name!r} cannot start with negative current", line_of(x.name)
            )
        connect(x.name, x.node_active, x.node_passive, x.node_common)

    reachable = {GROUND}
    frontier = [GROUND]
    while frontier:
        node = frontier.pop()
        for nb in adjacency[node]:
            if nb not in reachable:
                reachable.add(nb)
                frontier.append(nb)
    unreachable = [n for n in circuit.nodes if n not in reachable]
    if unreachable:
        n = unreachable[0]
        raise NetlistError(f"node {n!r} is not connected to ground", node_line.get(n))


def serialize(circuit: Circuit) -> str:
    """Render a circuit as canonical netlist text; parse(serialize(c)) == c."""
    out: list[str] = []
    for v in circuit.vsources:
        out.append(f"V{_strip(v.name, 'V')} {v.node_pos} {v.node_neg} {v.volts!r}")
    for i in circuit.isources:
        out.append(f"I{_strip(i.name, 'I')} {i.node_pos} {i.node_neg} {i.amps!r}")
    for r in circuit.resistors:
        out.append(f"R{_strip(r.name, 'R')} {r.node1} {r.node2} {r.ohms!r}")
    for c in circuit.capacitors:
        line = f"C{_strip(c.name, 'C')} {c.node_pos} {c.node_neg} {c.farads!r}"
        if c.initial_volts != 0.0:
            line += f" IC={c.initial_volts!r}"
        out.append(line)
    for x in circuit.cells:
        line = (
            f"X{_strip(x.name, 'X')} {x.node_active} {x.node_passive} {x.node_common} CELL"
            f" KIND={x.kind.value} SW={x.switch_type.value} L={x.inductance!r} D={x.duty!r}"
        )
        if x.kind is CellKind.FLYBACK:
            line += f" N={x.turns_ratio!r}"
        if x.initial_current != 0.0:
            line += f" IC={x.initial_current!r}"
        out.append(line)
    d = circuit.directives
    out.append(f".FS {d.switching_frequency!r}")
    out.append(f".TRAN {d.duration!r}")
    if d.oracle_substeps != 1000:
        out.append(f".ORACLESTEPS {d.oracle_substeps}")
    out.append(".END")
    return "\n".join(out) + "\n"


def _strip(name: str, prefix: str) -> str:
    return name[1:] if name[:1].upper() == prefix else name
