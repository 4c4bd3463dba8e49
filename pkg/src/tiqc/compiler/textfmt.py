"""Line-oriented sequence text format.

One op per line, ions 1-based, classical bits 0-based::

    %name qft3
    %qubits 3
    R(pi, pi/2)
    Sz(2, pi)
    MS(pi/2, 3pi/16)   # optional note
    HIDE(3)
    MEAS(1, 0)
    CZROT(1, pi/2, 0)  # fourth argument ``neg`` inverts the condition
    PD(1, 0.5)
    AD(1, 1, 1)        # third argument: damping target level (default 0)
    RECOOL(800)        # microseconds
    IDLE(150)

Angles are decimals (radians) or multiples of pi: ``pi``, ``-pi/2``,
``3pi/16``, ``1.75pi``. ``emit_sequence`` writes a canonical form that
parses back to identical floats.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction

from ..gates import (
    MS,
    AmpDamp,
    Collective,
    ConditionalZRot,
    Hide,
    Idle,
    Measure,
    NativeOp,
    PhaseDamp,
    PulseSequence,
    Recool,
    Unhide,
    ZRot,
)


class SequenceSyntaxError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {msg}")
        self.line = line
        self.col = col


_PI_RE = re.compile(r"^(?P<coef>\d+(?:\.\d*)?|\.\d+)?\s*\*?\s*pi(?:\s*/\s*(?P<den>\d+))?$")
_NUM_RE = re.compile(r"^(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")
_LINE_RE = re.compile(r"^(?P<name>[A-Za-z]+)\s*\((?P<args>[^()]*)\)\s*$")

_ARITY = {
    "R": (2, 2),
    "Sz": (2, 2),
    "MS": (2, 2),
    "HIDE": (1, 1),
    "UNHIDE": (1, 1),
    "PD": (2, 2),
    "AD": (2, 3),
    "MEAS": (2, 2),
    "CZROT": (3, 4),
    "RECOOL": (1, 1),
    "IDLE": (1, 1),
}


def parse_angle(text: str) -> float:
    s = text.strip().replace(" ", "")
    sign = 1.0
    if s[:1] in ("+", "-"):
        sign = -1.0 if s[0] == "-" else 1.0
        s = s[1:]
    m = _PI_RE.match(s)
    if m:
        coef = m.group("coef")
        val = math.pi if coef is None else float(coef) * math.pi
        if m.group("den"):
            den = int(m.group("den"))
            if den == 0:
                raise ValueError("zero denominator")
            val = val / den
        return sign * val
    if _NUM_RE.match(s):
        return sign * float(s)
    raise ValueError(f"cannot parse angle {text!r}")


def format_angle(x: float) -> str:
    """Canonical text for an angle; ``parse_angle(format_angle(x)) == x``."""
    if x == 0:
        return "0"
    if x < 0:
        return "-" + format_angle(-x)
    r = x / math.pi
    frac = Fraction(r).limit_denominator(64)
    if frac.numerator > 0:
        p, q = frac.numerator, frac.denominator
        cand = ("pi" if p == 1 else f"{p}pi") + ("" if q == 1 else f"/{q}")
        if parse_angle(cand) == x:
            return cand
    for digits in range(1, 17):
        cand = f"{round(r, digits):.{digits}f}".rstrip("0").rstrip(".") + "pi"
        if parse_angle(cand) == x:
            return cand
    return repr(float(x))


def _fmt_num(x: float) -> str:
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


def _int_arg(tok: str, what: str) -> int:
    if not re.fullmatch(r"\d+", tok):
        raise ValueError(f"{what} must be a non-negative integer, got {tok!r}")
    return int(tok)


def _ion(tok: str, n: int) -> int:
    i = _int_arg(tok, "ion index")
    if not 1 <= i <= n:
        raise ValueError(f"ion index {i} outside 1..{n}")
    return i - 1


def _number(tok: str) -> float:
    if not _NUM_RE.match(tok.lstrip("+-")):
        raise ValueError(f"expected a number, got {tok!r}")
    return float(tok)


def _build_op(name: str, args: list[str], n: int, note: str) -> NativeOp:
    if name == "R":
        return Collective(parse_angle(args[0]), parse_angle(args[1]), note=note)
    if name == "MS":
        return MS(parse_angle(args[0]), parse_angle(args[1]), note=note)
    if name == "Sz":
        return ZRot(_ion(args[0], n), parse_angle(args[1]), note=note)
    if name == "HIDE":
        return Hide(_ion(args[0], n), note=note)
    if name == "UNHIDE":
        return Unhide(_ion(args[0], n), note=note)
    if name == "PD":
        return PhaseDamp(_ion(args[0], n), _number(args[1]), note=note)
    if name == "AD":
        target = _int_arg(args[2], "damping target") if len(args) > 2 else 0
        return AmpDamp(_ion(args[0], n), _number(args[1]), target, note=note)
    if name == "MEAS":
        return Measure(_ion(args[0], n), _int_arg(args[1], "classical bit"), note=note)
    if name == "CZROT":
        neg = False
        if len(args) > 3:
            if args[3] not in ("neg", "0", "1"):
                raise ValueError(f"fourth CZROT argument must be 'neg', 0 or 1, got {args[3]!r}")
            neg = args[3] in ("neg", "1")
        return ConditionalZRot(
            _ion(args[0], n), parse_angle(args[1]), _int_arg(args[2], "classical bit"), neg, note=note
        )
    if name == "RECOOL":
        return Recool(_number(args[0]) * 1e-6, note=note)
    if name == "IDLE":
        return Idle(_number(args[0]) * 1e-6, note=note)
    raise AssertionError(name)


def parse_sequence(text: str, n_qubits: int | None = None, name: str = "") -> PulseSequence:
    """Parse sequence text; ``%qubits`` in the text overrides ``n_qubits``."""
    meta = {"name": name, "source": ""}
    body: list[tuple[int, int, str, str]] = []
    n = n_qubits
    for lineno, raw in enumerate(text.splitlines(), start=1):
        code, _, comment = raw.partition("#")
        stripped = code.strip()
        if not stripped:
            continue
        col = len(code) - len(code.lstrip()) + 1
        if stripped.startswith("%"):
            key, _, val = stripped[1:].partition(" ")
            val = val.strip()
            if key == "qubits":
                try:
                    n = _int_arg(val, "qubit count")
                except ValueError as e:
                    raise SequenceSyntaxError(str(e), lineno, col) from None
            elif key in meta:
                meta[key] = val
            else:
                raise SequenceSyntaxError(f"unknown directive %{key}", lineno, col)
            continue
        body.append((lineno, col, stripped, comment.strip()))
    if n is None:
        raise ValueError("qubit count not given (use %qubits or n_qubits=)")
    ops = []
    for lineno, col, stripped, note in body:
        m = _LINE_RE.match(stripped)
        if not m:
            raise SequenceSyntaxError(f"malformed operation {stripped!r}", lineno, col)
        op_name = m.group("name")
        if op_name not in _ARITY:
            raise SequenceSyntaxError(f"unknown operation {op_name!r}", lineno, col)
        args = [a.strip() for a in m.group("args").split(",")] if m.group("args").strip() else []
        lo, hi = _ARITY[op_name]
        if not lo <= len(args) <= hi:
            raise SequenceSyntaxError(
                f"{op_name} takes {lo}{'' if lo == hi else f'-{hi}'} arguments, got {len(args)}",
                lineno,
                col + stripped.index("(") + 1,
            )
        try:
            ops.append(_build_op(op_name, args, n, note))
        except ValueError as e:
            raise SequenceSyntaxError(str(e), lineno, col + stripped.index("(") + 1) from None
    return PulseSequence(n, tuple(ops), meta["name"], meta["source"])


def format_op(op: NativeOp) -> str:
    if isinstance(op, Collective):
        s = f"R({format_angle(op.phi)}, {format_angle(op.theta)})"
    elif isinstance(op, MS):
        s = f"MS({format_angle(op.phi)}, {format_angle(op.theta)})"
    elif isinstance(op, ZRot):
        s = f"Sz({op.ion + 1}, {format_angle(op.theta)})"
    elif isinstance(op, Hide):
        s = f"HIDE({op.ion + 1})"
    elif isinstance(op, Unhide):
        s = f"UNHIDE({op.ion + 1})"
    elif isinstance(op, PhaseDamp):
        s = f"PD({op.ion + 1}, {_fmt_num(op.gamma)})"
    elif isinstance(op, AmpDamp):
        tail = f", {op.target}" if op.target else ""
        s = f"AD({op.ion + 1}, {_fmt_num(op.gamma)}{tail})"
    elif isinstance(op, Measure):
        s = f"MEAS({op.ion + 1}, {op.cbit})"
    elif isinstance(op, ConditionalZRot):
        tail = ", neg" if op.negate else ""
        s = f"CZROT({op.ion + 1}, {format_angle(op.theta)}, {op.cbit}{tail})"
    elif isinstance(op, Recool):
        s = f"RECOOL({_fmt_num(round(op.duration * 1e6, 9))})"
    elif isinstance(op, Idle):
        s = f"IDLE({_fmt_num(round(op.duration * 1e6, 9))})"
    else:  # pragma: no cover
        raise TypeError(f"cannot format {op!r}")
    return f"{s}  # {op.note}" if op.note else s


def emit_sequence(seq: PulseSequence) -> str:
    lines = []
    if seq.name:
        lines.append(f"%name {seq.name}")
    if seq.source:
        lines.append(f"%source {seq.source}")
    lines.append(f"%qubits {seq.n_qubits}")
    lines.extend(format_op(op) for op in seq.ops)
    return "\n".join(lines) + "\n"
