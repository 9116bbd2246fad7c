"""The process language: straight-line scripts of ability calls.

Grammar:
    program   := statement*
    statement := "let" IDENT "=" call | call
    call      := IDENT "(" [ IDENT ":" expr { "," IDENT ":" expr } ] ")"
    expr      := STRING | NUMBER | "pose" "(" 7 numbers ")" | IDENT | JSON

No control flow, no arithmetic: generated code is already fully ordered.
'#' starts a comment. Variables must be bound before use; the check happens
at parse time. Interpretation dispatches each call to a registered ability
handler and halts at the first error, returning the partial trace.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable, Union

from .errors import ArgTypeMismatch, AbilityError, LexError, ParseError, UnboundVariable, UnknownAbility
from .geometry import Pose
from .twin.kinematics import Trajectory

# ------------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<number>-?\d+(\.\d+)?([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(\\.|[^"\\])*")
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<colon>:)
  | (?P<comma>,)
  | (?P<equals>=)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "{[":
            blob, consumed = _scan_json(text, i, line, col)
            tokens.append(Token("json", blob, line, col))
            for c in text[i : i + consumed]:
                if c == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
            i += consumed
            continue
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise LexError(line, col, ch)
        kind = m.lastgroup
        value = m.group()
        if kind == "newline":
            line += 1
            col = 1
        else:
            if kind not in ("ws", "comment"):
                tokens.append(Token(kind, value, line, col))
            col += len(value)
        i = m.end()
    return tokens


def _scan_json(text: str, start: int, line: int, col: int) -> tuple[str, int]:
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch in "{[":
            depth += 1
        elif ch in "}]":
            depth -= 1
            if depth == 0:
                blob = text[start : i + 1]
                try:
                    json.loads(blob)
                except json.JSONDecodeError as e:
                    raise LexError(line, col, blob[:20]) from e
                return blob, i + 1 - start
    raise LexError(line, col, text[start])


# -------------------------------------------------------------------- ast

@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class NumLit:
    value: float


@dataclass(frozen=True)
class PoseLit:
    pose: Pose


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class JsonLit:
    value: object  # canonicalized (sorted keys) on construction


Expr = Union[StrLit, NumLit, PoseLit, VarRef, JsonLit]


@dataclass(frozen=True)
class Call:
    ability: str
    args: tuple[tuple[str, Expr], ...]


@dataclass(frozen=True)
class Statement:
    call: Call
    bind: str | None = None  # let name


@dataclass(frozen=True)
class Ast:
    statements: tuple[Statement, ...]


# ------------------------------------------------------------------ parser

class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0
        self.defined: set[str] = set()

    def _peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _pos(self) -> tuple[int, int]:
        t = self._peek()
        if t is None:
            last = self.tokens[-1] if self.tokens else None
            return (last.line, last.col + len(last.value)) if last else (1, 1)
        return (t.line, t.col)

    def _take(self, kind: str, expected: str) -> Token:
        t = self._peek()
        if t is None or t.kind != kind:
            raise ParseError(self._pos(), expected, t.value if t else "end of input")
        self.i += 1
        return t

    def parse(self) -> Ast:
        statements = []
        while self._peek() is not None:
            statements.append(self._statement())
        return Ast(tuple(statements))

    def _statement(self) -> Statement:
        t = self._peek()
        if t.kind == "ident" and t.value == "let":
            self.i += 1
            name = self._take("ident", "variable name").value
            self._take("equals", "'='")
            call = self._call()
            self.defined.add(name)
            return Statement(call, bind=name)
        call = self._call()
        return Statement(call)

    def _call(self) -> Call:
        name = self._take("ident", "ability name").value
        self._take("lparen", "'('")
        args: list[tuple[str, Expr]] = []
        seen: set[str] = set()
        t = self._peek()
        if t is not None and t.kind != "rparen":
            while True:
                arg_tok = self._take("ident", "argument name")
                if arg_tok.value in seen:
                    raise ParseError((arg_tok.line, arg_tok.col), "unique argument name", arg_tok.value)
                seen.add(arg_tok.value)
                self._take("colon", "':'")
                args.append((arg_tok.value, self._expr()))
                t = self._peek()
                if t is not None and t.kind == "comma":
                    self.i += 1
                    continue
                break
        self._take("rparen", "')'")
        return Call(name, tuple(args))

    def _expr(self) -> Expr:
        t = self._peek()
        if t is None:
            raise ParseError(self._pos(), "expression", "end of input")
        if t.kind == "string":
            self.i += 1
            return StrLit(json.loads(t.value))
        if t.kind == "number":
            self.i += 1
            return NumLit(float(t.value))
        if t.kind == "json":
            self.i += 1
            return JsonLit(_canonical_json(json.loads(t.value)))
        if t.kind == "ident" and t.value == "pose":
            self.i += 1
            self._take("lparen", "'('")
            nums = []
            for k in range(7):
                if k:
                    self._take("comma", "','")
                nums.append(float(self._take("number", "number").value))
            self._take("rparen", "')'")
            return PoseLit(Pose(nums[:4], nums[4:]))
        if t.kind == "ident":
            self.i += 1
            if t.value not in self.defined:
                raise UnboundVariable(t.value, (t.line, t.col))
            return VarRef(t.value)
        raise ParseError((t.line, t.col), "expression", t.value)


def _canonical_json(value):
    """Stable key order for dict values, recursively."""
    if isinstance(value, dict):
        return {k: _canonical_json(value[k]) for k in sorted(value)}
    if isinstance(value, list):
        return [_canonical_json(v) for v in value]
    return value


def parse(tokens: list[Token]) -> Ast:
    return _Parser(tokens).parse()


def parse_text(text: str) -> Ast:
    return parse(tokenize(text))


# ------------------------------------------------------------ pretty print

def _format_expr(e: Expr) -> str:
    if isinstance(e, StrLit):
        return json.dumps(e.value)
    if isinstance(e, NumLit):
        return repr(e.value)
    if isinstance(e, PoseLit):
        vals = list(e.pose.q) + list(e.pose.t)
        return "pose(" + ", ".join(repr(float(v)) for v in vals) + ")"
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, JsonLit):
        return json.dumps(e.value, sort_keys=True, separators=(", ", ": "))
    raise TypeError(e)


def pretty_print(ast: Ast) -> str:
    lines = []
    for stmt in ast.statements:
        call = f"{stmt.call.ability}(" + ", ".join(f"{n}: {_format_expr(v)}" for n, v in stmt.call.args) + ")"
        lines.append(f"let {stmt.bind} = {call}" if stmt.bind else call)
    return "\n".join(lines) + ("\n" if lines else "")


# -------------------------------------------------------------- interpreter

TYPE_STRING = "string"
TYPE_NUMBER = "number"
TYPE_POSE = "pose"
TYPE_JSON = "json"
TYPE_SNAPSHOT = "snapshot"
TYPE_TRAJECTORY = "trajectory"
TYPE_ANY = "any"


@dataclass(frozen=True)
class AbilitySpec:
    name: str
    params: dict[str, str]  # name -> type tag
    returns: str
    handler: Callable
    optional: frozenset[str] = frozenset()


@dataclass
class AbilityRegistry:
    abilities: dict[str, AbilitySpec] = field(default_factory=dict)

    def register(self, spec: AbilitySpec) -> None:
        if spec.name in self.abilities:
            raise ValueError(f"ability {spec.name!r} already registered")
        self.abilities[spec.name] = spec

    def get(self, name: str) -> AbilitySpec | None:
        return self.abilities.get(name)

    def names(self) -> list[str]:
        return sorted(self.abilities)


def _type_of(value) -> str:
    if isinstance(value, str):
        return TYPE_STRING
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return TYPE_NUMBER
    if isinstance(value, Pose):
        return TYPE_POSE
    if isinstance(value, Trajectory):
        return TYPE_TRAJECTORY
    if isinstance(value, dict) and "objects" in value and "robot_joints" in value:
        return TYPE_SNAPSHOT
    return TYPE_JSON


def value_to_json(value):
    if isinstance(value, Pose):
        return {"pose": value.to_json()}
    if isinstance(value, Trajectory):
        return {"trajectory": value.to_json()}
    return value


@dataclass
class TraceEntry:
    index: int
    ability: str
    args: dict
    result: object = None
    error: dict | None = None
    twin_time: float = 0.0

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "ability": self.ability,
            "args": self.args,
            "result": value_to_json(self.result),
            "error": self.error,
            "twin_time": self.twin_time,
        }


@dataclass
class ExecutionTrace:
    entries: list[TraceEntry] = field(default_factory=list)
    ok: bool = True
    error: dict | None = None

    def to_json(self) -> dict:
        return {
            "entries": [e.to_json() for e in self.entries],
            "ok": self.ok,
            "error": self.error,
        }


def _eval_expr(e: Expr, env: dict):
    if isinstance(e, StrLit):
        return e.value
    if isinstance(e, NumLit):
        return e.value
    if isinstance(e, PoseLit):
        return e.pose
    if isinstance(e, JsonLit):
        return e.value
    if isinstance(e, VarRef):
        return env[e.name]
    raise TypeError(e)


def interpret(ast: Ast, registry: AbilityRegistry, ctx) -> ExecutionTrace:
    """Run statements in order; halt at the first error with a partial trace.

    ``ctx`` is the twin handle; handlers receive it first.
    """
    env: dict[str, object] = {}
    trace = ExecutionTrace()
    for idx, stmt in enumerate(ast.statements):
        call = stmt.call
        entry = TraceEntry(idx, call.ability, {})
        try:
            spec = registry.get(call.ability)
            if spec is None:
                raise UnknownAbility(call.ability)
            kwargs = {}
            for name, expr in call.args:
                if name not in spec.params:
                    raise ArgTypeMismatch(call.ability, name, "no such parameter", _type_of(_eval_expr(expr, env)))
                value = _eval_expr(expr, env)
                expected = spec.params[name]
                got = _type_of(value)
                if expected != TYPE_ANY and got != expected:
                    raise ArgTypeMismatch(call.ability, name, expected, got)
                kwargs[name] = value
            for name in spec.params:
                if name not in kwargs and name not in spec.optional:
                    raise ArgTypeMismatch(call.ability, name, spec.params[name], "missing")
            entry.args = {k: value_to_json(v) for k, v in sorted(kwargs.items())}
            result = spec.handler(ctx, **kwargs)
            entry.result = result
            entry.twin_time = getattr(ctx, "twin_time", 0.0)
            trace.entries.append(entry)
            if stmt.bind:
                env[stmt.bind] = result
        except (AbilityError, UnknownAbility, ArgTypeMismatch) as e:
            reason = e.reason if isinstance(e, AbilityError) else (
                "unknown_ability" if isinstance(e, UnknownAbility) else "arg_type_mismatch"
            )
            entry.error = {
                "reason": reason,
                "detail": str(e),
                "objects": getattr(e, "objects", []),
            }
            entry.twin_time = getattr(ctx, "twin_time", 0.0)
            trace.entries.append(entry)
            trace.ok = False
            trace.error = {"statement": idx, "ability": call.ability, **entry.error}
            break
    return trace
