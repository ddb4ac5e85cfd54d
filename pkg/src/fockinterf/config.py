"""Plain-text circuit descriptions.

A description is a sequence of lines. Blank lines and text after ``#`` are
ignored. Assignments have the form ``name = value``; element lines start
with ``squeeze`` or ``phase``::

    # two crystals with a tied gain
    kind = two_crystal
    r = 1.0
    r1 = r
    r2 = r
    phi = 0.5pi

    # or an explicit element list
    modes = 2
    input = 1,1
    squeeze 0 1 r=g theta=0
    phase 0 phi=pi/2
    g = asinh(1)

Reserved keys:

``kind``
    One of the standard setups; its parameters are read from the
    assignments of the same names (``r``, ``r1``.., ``phi``, ``phi1``..).
``modes``
    Mode count of an explicit element list.
``input``, ``pattern``
    Comma-separated occupation vectors (vacuum and one photon per mode by
    default).
``photon_cap``, ``k_max``, ``term_floor``, ``prune_floor``, ``target_tail``
    Truncation overrides. Setting any of the first four fixes the policy;
    otherwise the photon cap adapts until the tail bound meets
    ``target_tail``.

Every other assignment defines a named parameter. Values are arithmetic
expressions over numbers, parameters, ``pi`` and the functions in
:data:`FUNCTIONS`; a number directly followed by ``pi`` is multiplied by it,
so ``0.5pi`` means pi/2. Parameters may refer to each other in any order;
sweeps override them by name and the ties follow.
"""

from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass, field, replace

from .engine import PhaseShifter, TwoModeSqueezer
from .fock_state import DEFAULT_POLICY, TruncationPolicy
from .interferometer import (
    DEFAULT_TARGET_TAIL,
    STANDARD_KINDS,
    Circuit,
    detection_pattern,
    standard_circuit,
)

FUNCTIONS = {
    name: getattr(math, name)
    for name in (
        "sqrt", "exp", "log", "sin", "cos", "tan", "asin", "acos", "atan",
        "sinh", "cosh", "tanh", "asinh", "acosh", "atanh",
    )
}
CONSTANTS = {"pi": math.pi}
POLICY_KEYS = ("photon_cap", "k_max", "term_floor", "prune_floor")
RESERVED = {"kind", "modes", "input", "pattern", "target_tail", *POLICY_KEYS}

_BINARY = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_PI_SUFFIX = re.compile(r"((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*pi\b")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


class ConfigError(ValueError):
    """A description that cannot be parsed, with its source position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 source: str = "<config>"):
        self.message, self.line, self.column, self.source = message, line, column, source
        where = source if line is None else f"{source}:{line}:{column or 1}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class Expr:
    """An expression with the position it was read from."""

    text: str
    line: int
    column: int
    tree: ast.AST = field(repr=False, compare=False)

    @classmethod
    def parse(cls, text: str, line: int, column: int, source: str) -> "Expr":
        if not text.strip():
            raise ConfigError("missing value", line, column, source)
        expanded = _PI_SUFFIX.sub(r"(\1*pi)", text)
        try:
            tree = ast.parse(expanded.strip(), mode="eval").body
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {text.strip()!r}", line,
                              column + max((exc.offset or 1) - 1, 0), source) from None
        for node in ast.walk(tree):
            if not isinstance(node, (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call,
                                     ast.Name, ast.Constant, ast.Load, *(_BINARY), *(_UNARY))):
                raise ConfigError(f"unsupported syntax in {text.strip()!r}", line, column, source)
            if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
                raise ConfigError(f"unsupported literal in {text.strip()!r}", line, column, source)
            if isinstance(node, ast.Call) and not (
                isinstance(node.func, ast.Name) and node.func.id in FUNCTIONS and not node.keywords
            ):
                raise ConfigError(f"unknown function in {text.strip()!r}", line, column, source)
        return cls(text.strip(), line, column, tree)

    def names(self) -> set[str]:
        called = {n.func.id for n in ast.walk(self.tree) if isinstance(n, ast.Call)}
        return {n.id for n in ast.walk(self.tree) if isinstance(n, ast.Name)} - called - set(CONSTANTS)

    def evaluate(self, env: dict[str, float], source: str) -> float:
        def ev(node):
            if isinstance(node, ast.Constant):
                return float(node.value)
            if isinstance(node, ast.Name):
                if node.id in CONSTANTS:
                    return CONSTANTS[node.id]
                if node.id not in env:
                    raise ConfigError(f"undefined parameter {node.id!r}", self.line, self.column, source)
                return env[node.id]
            if isinstance(node, ast.BinOp):
                return _BINARY[type(node.op)](ev(node.left), ev(node.right))
            if isinstance(node, ast.UnaryOp):
                return _UNARY[type(node.op)](ev(node.operand))
            return FUNCTIONS[node.func.id](*(ev(a) for a in node.args))

        try:
            value = float(ev(self.tree))
        except ConfigError:
            raise
        except (ArithmeticError, ValueError, TypeError) as exc:
            raise ConfigError(f"cannot evaluate {self.text!r}: {exc}", self.line, self.column, source) from None
        if not math.isfinite(value):
            raise ConfigError(f"{self.text!r} is not finite", self.line, self.column, source)
        return value


@dataclass(frozen=True)
class ElementSpec:
    op: str
    modes: tuple[int, ...]
    args: dict
    line: int


@dataclass(frozen=True)
class CircuitConfig:
    """A parsed description; :meth:`circuit` builds the circuit for given overrides."""

    source: str = "<config>"
    kind: str | None = None
    mode_count: int | None = None
    elements: tuple[ElementSpec, ...] = ()
    params: dict = field(default_factory=dict)
    input: tuple[int, ...] | None = None
    pattern: tuple[int, ...] | None = None
    policy_overrides: dict = field(default_factory=dict)
    target_tail: float = DEFAULT_TARGET_TAIL

    def resolve(self, overrides: dict[str, float] | None = None) -> dict[str, float]:
        """Values of every parameter, with ``overrides`` replacing definitions."""
        overrides = dict(overrides or {})
        unknown = sorted(set(overrides) - set(self.params))
        if unknown:
            raise ConfigError(f"unknown parameter(s) {', '.join(unknown)}", source=self.source)
        env: dict[str, float] = {k: float(v) for k, v in overrides.items()}
        active: list[str] = []

        def visit(name: str):
            if name in env:
                return
            if name in active:
                cycle = " -> ".join(active[active.index(name):] + [name])
                expr = self.params[name]
                raise ConfigError(f"circular parameter definition {cycle}", expr.line, expr.column, self.source)
            expr = self.params[name]
            active.append(name)
            for dep in sorted(expr.names()):
                if dep not in self.params:
                    raise ConfigError(f"undefined parameter {dep!r}", expr.line, expr.column, self.source)
                visit(dep)
            active.pop()
            env[name] = expr.evaluate(env, self.source)

        for name in self.params:
            visit(name)
        return env

    def circuit(self, overrides: dict[str, float] | None = None) -> Circuit:
        env = self.resolve(overrides)
        if self.kind is not None:
            names = STANDARD_KINDS[self.kind]
            missing = [n for n in names if n not in env]
            if missing:
                raise ConfigError(f"{self.kind} needs parameter(s) {', '.join(missing)}", source=self.source)
            circuit = standard_circuit(self.kind, [env[n] for n in names])
            if self.input is not None:
                circuit = replace(circuit, input=self.input)
            return circuit
        built = []
        for spec in self.elements:
            vals = {k: v.evaluate(env, self.source) for k, v in spec.args.items()}
            try:
                if spec.op == "squeeze":
                    built.append(TwoModeSqueezer(spec.modes[0], spec.modes[1], vals["r"], vals.get("theta", 0.0)))
                else:
                    built.append(PhaseShifter(spec.modes[0], vals["phi"]))
            except ValueError as exc:
                raise ConfigError(str(exc), spec.line, 1, self.source) from None
        return Circuit(self.mode_count, tuple(built), self.input)

    def detection(self, circuit: Circuit) -> tuple[int, ...]:
        return detection_pattern(circuit) if self.pattern is None else self.pattern

    def policy(self) -> TruncationPolicy | None:
        """A fixed policy when any truncation key was set, else None (adaptive)."""
        if not self.policy_overrides:
            return None
        policy = replace(DEFAULT_POLICY, **self.policy_overrides)
        if "k_max" not in self.policy_overrides:
            policy = replace(policy, k_max=max(policy.k_max, policy.photon_cap + 1))
        return policy


def _int_list(text: str, line: int, column: int, source: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",")]
    try:
        vals = tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text.strip()!r}", line, column, source) from None
    if any(v < 0 for v in vals):
        raise ConfigError("occupations must be non-negative", line, column, source)
    return vals


def _element(op: str, rest: str, line: int, offset: int, source: str) -> ElementSpec:
    modes, args = [], {}
    allowed = {"squeeze": ("r", "theta"), "phase": ("phi",)}[op]
    for match in re.finditer(r"\S+", rest):
        token, col = match.group(), offset + match.start()
        if "=" in token:
            key, _, value = token.partition("=")
            if key not in allowed:
                raise ConfigError(f"{op} takes {', '.join(allowed)}, not {key!r}", line, col, source)
            if key in args:
                raise ConfigError(f"{key!r} given twice", line, col, source)
            args[key] = Expr.parse(value, line, col + len(key) + 1, source)
        else:
            if args:
                raise ConfigError("mode indices must precede key=value arguments", line, col, source)
            if not token.isdigit():
                raise ConfigError(f"expected a mode index, got {token!r}", line, col, source)
            modes.append(int(token))
    need = 2 if op == "squeeze" else 1
    if len(modes) != need:
        raise ConfigError(f"{op} takes {need} mode index(es), got {len(modes)}", line, offset, source)
    required = "r" if op == "squeeze" else "phi"
    if required not in args:
        raise ConfigError(f"{op} needs {required}=...", line, offset, source)
    return ElementSpec(op, tuple(modes), args, line)


def parse_config(text: str, source: str = "<config>") -> CircuitConfig:
    """Parse a description; errors carry the line and column they refer to."""
    fields: dict = {}
    params: dict[str, Expr] = {}
    policy: dict = {}
    elements = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        indent = len(body) - len(body.lstrip())
        head = body.strip().split(None, 1)[0]
        if head in ("squeeze", "phase") and "=" not in head:
            rest_at = body.index(head) + len(head)
            elements.append(_element(head, body[rest_at:], lineno, rest_at + 1, source))
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'name = value' or an element line, got {body.strip()!r}",
                              lineno, indent + 1, source)
        key_text, _, value = body.partition("=")
        key = key_text.strip()
        value_col = len(key_text) + 2 + (len(value) - len(value.lstrip()))
        if not _NAME.match(key):
            raise ConfigError(f"invalid name {key!r}", lineno, indent + 1, source)
        if key in seen:
            raise ConfigError(f"{key!r} already set on line {seen[key]}", lineno, indent + 1, source)
        if key in FUNCTIONS or key in CONSTANTS:
            raise ConfigError(f"{key!r} is a reserved function or constant name", lineno, indent + 1, source)
        seen[key] = lineno
        if key == "kind":
            kind = value.strip()
            if kind not in STANDARD_KINDS:
                raise ConfigError(f"unknown kind {kind!r}; expected one of {', '.join(sorted(STANDARD_KINDS))}",
                                  lineno, value_col, source)
            fields["kind"] = kind
        elif key == "modes":
            count = _int_list(value, lineno, value_col, source)
            if len(count) != 1 or count[0] < 1:
                raise ConfigError("modes must be a single positive integer", lineno, value_col, source)
            fields["mode_count"] = count[0]
        elif key in ("input", "pattern"):
            fields[key] = _int_list(value, lineno, value_col, source)
        elif key in POLICY_KEYS or key == "target_tail":
            number = Expr.parse(value, lineno, value_col, source).evaluate({}, source)
            if key in ("photon_cap", "k_max"):
                if number != int(number) or number < 1:
                    raise ConfigError(f"{key} must be a positive integer", lineno, value_col, source)
                number = int(number)
            elif not number > 0:
                raise ConfigError(f"{key} must be positive", lineno, value_col, source)
            if key == "target_tail":
                fields["target_tail"] = number
            else:
                policy[key] = number
        else:
            params[key] = Expr.parse(value, lineno, value_col, source)

    kind = fields.get("kind")
    if kind is None and not elements:
        raise ConfigError("description needs either 'kind = ...' or element lines", source=source)
    if kind is not None and elements:
        raise ConfigError("'kind' and explicit element lines are mutually exclusive",
                          elements[0].line, 1, source)
    if kind is not None:
        if "mode_count" in fields:
            raise ConfigError("'modes' applies only to explicit element lists", seen["modes"], 1, source)
        mode_count = 4 if kind == "four_crystal" else 2
    else:
        if "mode_count" not in fields:
            raise ConfigError("explicit element lists need 'modes = N'", source=source)
        mode_count = fields["mode_count"]
        for el in elements:
            if max(el.modes) >= mode_count:
                raise ConfigError(f"mode {max(el.modes)} outside 0..{mode_count - 1}", el.line, 1, source)
            if el.op == "squeeze" and el.modes[0] == el.modes[1]:
                raise ConfigError("squeeze needs two distinct modes", el.line, 1, source)
    for key in ("input", "pattern"):
        if key in fields and len(fields[key]) != mode_count:
            raise ConfigError(f"{key} has {len(fields[key])} entries but the circuit has {mode_count} modes",
                              seen[key], 1, source)
    config = CircuitConfig(
        source=source, kind=kind, mode_count=mode_count, elements=tuple(elements), params=params,
        input=fields.get("input"), pattern=fields.get("pattern"), policy_overrides=policy,
        target_tail=fields.get("target_tail", DEFAULT_TARGET_TAIL),
    )
    for name, expr in params.items():
        if name in expr.names():
            raise ConfigError(f"parameter {name!r} refers to itself", expr.line, expr.column, source)
    # surface undefined names and cycles at parse time
    config.resolve()
    return config


def load_config(path: str) -> CircuitConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))
