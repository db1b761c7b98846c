"""Parser and pretty-printer for the `.ir` app language.

Grammar sketch (whitespace-insensitive, `//` comments):

    app       ::= 'app' STRING decl*
    decl      ::= input | subscribe | schedule | methoddef
    input     ::= 'input' '(' IDENT ',' IDENT ',' 'type' ':' kind ')'
    kind      ::= 'device' | 'user_defined'           (user inputs use the
                  permission's second IDENT as the value type: number|string|time)
    subscribe ::= 'subscribe' '(' source ',' STRING ',' IDENT ')'
                | 'subscribe' '(' 'app' ',' 'touch' ',' IDENT ')'
    source    ::= IDENT | 'location'
    schedule  ::= 'schedule' '(' 'after' INT ',' IDENT ')'
                | 'schedule' '(' 'at' IDENT ',' IDENT ')'
    methoddef ::= 'def'? IDENT '(' ('evt')? ')' block
    block     ::= '{' stmt* '}'
    stmt      ::= IDENT '.' IDENT '(' args ')'        // device action
                | IDENT '=' expr | 'state' '.' IDENT '=' expr
                | 'if' '(' pred ')' block ('else' block)?
                | IDENT '(' args ')'                  // helper / platform call
                | '"' '$' expr-ish '"' '(' ')'        // reflective call
                | 'setMode' '(' expr ')' | 'return' expr? | schedule
    expr      ::= atom (('+'|'-') INT)?
    atom      ::= INT | STRING | IDENT | 'evt' '.' 'value' | 'state' '.' IDENT
                | IDENT '.' 'currentValue' '(' STRING ')' | IDENT '(' args ')'
    pred      ::= disjunction of conjunctions of (expr CMP expr), '!(...)'

The subscribed event string is `"attr"` (attribute level) or `"attr.value"`
(value level). Printing then reparsing yields a structurally equal app.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ir import (
    And,
    AppIR,
    Arith,
    Assign,
    ActionCall,
    AttrRead,
    Call,
    CallExpr,
    Cmp,
    Const,
    EventSpec,
    EventValue,
    Expr,
    HandlerDef,
    If,
    InputRef,
    LocalRef,
    Not,
    Or,
    PermissionDecl,
    Pred,
    ReflectiveCall,
    Return,
    Schedule,
    SetMode,
    Span,
    StateRead,
    Stmt,
    Subscription,
    TimerDecl,
)


class IrSyntaxError(Exception):
    """Raised for malformed `.ir` text; carries position and expectation."""

    def __init__(self, line: int, col: int, expected: str, found: str = ""):
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found
        where = f" (found {found!r})" if found else ""
        super().__init__(f"{line}:{col}: expected {expected}{where}")


class DuplicateDefinition(Exception):
    def __init__(self, name: str, span: Span):
        self.name = name
        self.span = span
        super().__init__(f"{span.line}:{span.col}: duplicate definition of '{name}'")


class UnknownReference(Exception):
    def __init__(self, name: str, span: Span):
        self.name = name
        self.span = span
        super().__init__(f"{span.line}:{span.col}: unknown reference '{name}'")


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<int>-?\d+)
  | (?P<ident>[a-zA-Z_][a-zA-Z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<op><=|>=|==|!=|&&|\|\||[-+<>!=(){},.:$])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "ident" | "string" | "op" | "eof"
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise IrSyntaxError(line, col, "a token", source[pos])
        text = m.group(0)
        kind = m.lastgroup or ""
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


def _unquote(text: str) -> str:
    body = text[1:-1]
    return body.replace('\\"', '"').replace("\\\\", "\\")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token helpers ------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, expected: str) -> "IrSyntaxError":
        tok = self.peek()
        return IrSyntaxError(tok.line, tok.col, expected, tok.text or "<eof>")

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text:
            raise self.fail(f"'{text}'")
        return self.advance()

    def expect_kind(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise self.fail(kind)
        return self.advance()

    def at(self, text: str) -> bool:
        return self.peek().text == text

    def span(self) -> Span:
        tok = self.peek()
        return Span(tok.line, tok.col)

    # -- top level -----------------------------------------------------------

    def parse_app(self) -> AppIR:
        self.expect("app")
        name = _unquote(self.expect_kind("string").text)
        permissions: list[PermissionDecl] = []
        subscriptions: list[Subscription] = []
        timers: list[TimerDecl] = []
        methods: dict[str, HandlerDef] = {}

        while not self.at(""):
            tok = self.peek()
            if tok.kind == "eof":
                break
            if tok.text == "input":
                permissions.append(self.parse_input(permissions))
            elif tok.text == "subscribe":
                subscriptions.append(self.parse_subscribe())
            elif tok.text == "schedule":
                timers.append(self.parse_schedule_decl())
            elif tok.text == "def" or tok.kind == "ident":
                hd = self.parse_methoddef()
                if hd.name in methods:
                    raise DuplicateDefinition(hd.name, hd.span)
                methods[hd.name] = hd
            else:
                raise self.fail("'input', 'subscribe', 'schedule' or a method definition")

        app = self._assemble(name, permissions, subscriptions, timers, methods)
        self._resolve(app)
        return app

    def parse_input(self, seen: list[PermissionDecl]) -> PermissionDecl:
        sp = self.span()
        self.expect("input")
        self.expect("(")
        handle = self.expect_kind("ident").text
        self.expect(",")
        second = self.expect_kind("ident").text
        self.expect(",")
        self.expect("type")
        self.expect(":")
        kind = self.expect_kind("ident").text
        self.expect(")")
        if any(p.handle == handle for p in seen):
            raise DuplicateDefinition(handle, sp)
        if kind == "device":
            return PermissionDecl(handle, "device", capability=second, span=sp)
        if kind == "user_defined":
            return PermissionDecl(handle, "user_input", value_type=second, span=sp)
        raise IrSyntaxError(sp.line, sp.col, "'device' or 'user_defined'", kind)

    def _parse_event_string(self, text: str, sp: Span) -> EventSpec:
        if "." in text:
            attr, _, value = text.partition(".")
            if not attr or not value:
                raise IrSyntaxError(sp.line, sp.col, 'event "attr" or "attr.value"', text)
            lit: str | int = int(value) if re.fullmatch(r"-?\d+", value) else value
            return EventSpec(attr, lit)
        return EventSpec(text, None)

    def parse_subscribe(self) -> Subscription:
        sp = self.span()
        self.expect("subscribe")
        self.expect("(")
        src = self.expect_kind("ident").text
        self.expect(",")
        if src == "app":
            self.expect("touch")
            self.expect(",")
            handler = self.expect_kind("ident").text
            self.expect(")")
            return Subscription("app_touch", None, None, handler, span=sp)
        ev_tok = self.expect_kind("string")
        event = self._parse_event_string(_unquote(ev_tok.text), Span(ev_tok.line, ev_tok.col))
        self.expect(",")
        handler = self.expect_kind("ident").text
        self.expect(")")
        if src == "location":
            return Subscription("location_mode", None, event, handler, span=sp)
        return Subscription("device", src, event, handler, span=sp)

    def _parse_timer(self, sp: Span, handler_last: bool = True) -> TimerDecl:
        self.expect("(")
        if self.at("after"):
            self.advance()
            sec_tok = self.expect_kind("int")
            seconds = int(sec_tok.text)
            if seconds < 0:
                raise IrSyntaxError(sec_tok.line, sec_tok.col, "a delay >= 0", sec_tok.text)
            self.expect(",")
            handler = self.expect_kind("ident").text
            self.expect(")")
            return TimerDecl("after_seconds", seconds, None, handler, span=sp)
        if self.at("at"):
            self.advance()
            name = self.expect_kind("ident").text
            self.expect(",")
            handler = self.expect_kind("ident").text
            self.expect(")")
            return TimerDecl("at_named_time", None, name, handler, span=sp)
        raise self.fail("'after' or 'at'")

    def parse_schedule_decl(self) -> TimerDecl:
        sp = self.span()
        self.expect("schedule")
        return self._parse_timer(sp)

    def parse_methoddef(self) -> HandlerDef:
        sp = self.span()
        if self.at("def"):
            self.advance()
        name = self.expect_kind("ident").text
        self.expect("(")
        params: list[str] = []
        while not self.at(")"):
            params.append(self.expect_kind("ident").text)
            if self.at(","):
                self.advance()
        self.expect(")")
        if len(params) > 1:
            raise IrSyntaxError(sp.line, sp.col, "at most one parameter (the event binding)")
        body = self.parse_block()
        return HandlerDef(name, tuple(params), body, span=sp)

    # -- statements ----------------------------------------------------------

    def parse_block(self) -> tuple[Stmt, ...]:
        self.expect("{")
        stmts: list[Stmt] = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                raise self.fail("'}'")
            stmts.append(self.parse_stmt())
        self.expect("}")
        return tuple(stmts)

    def parse_stmt(self) -> Stmt:
        sp = self.span()
        tok = self.peek()
        if tok.text == "if":
            return self.parse_if(sp)
        if tok.text == "return":
            self.advance()
            if self.at("}"):
                return Return(None, span=sp)
            return Return(self.parse_expr(), span=sp)
        if tok.text == "setMode":
            self.advance()
            self.expect("(")
            value = self.parse_expr()
            self.expect(")")
            return SetMode(value, span=sp)
        if tok.text == "schedule":
            self.advance()
            return Schedule(self._parse_timer(sp), span=sp)
        if tok.kind == "string":
            # "$name"() reflective call
            self.advance()
            body = _unquote(tok.text)
            if not body.startswith("$"):
                raise IrSyntaxError(tok.line, tok.col, "a reflective call \"$name\"()", tok.text)
            self.expect("(")
            self.expect(")")
            return ReflectiveCall(self._reflective_name(body[1:], sp), span=sp)
        if tok.text == "state":
            self.advance()
            self.expect(".")
            fieldname = self.expect_kind("ident").text
            self.expect("=")
            return Assign("state_field", fieldname, self.parse_expr(), span=sp)
        if tok.kind == "ident":
            nxt = self.peek(1).text
            if nxt == ".":
                handle = self.advance().text
                self.expect(".")
                member = self.expect_kind("ident").text
                self.expect("(")
                args: list[Expr] = []
                while not self.at(")"):
                    args.append(self.parse_expr())
                    if self.at(","):
                        self.advance()
                self.expect(")")
                return ActionCall(handle, member, tuple(args), span=sp)
            if nxt == "=":
                name = self.advance().text
                self.expect("=")
                return Assign("local", name, self.parse_expr(), span=sp)
            if nxt == "(":
                name = self.advance().text
                self.expect("(")
                args = []
                while not self.at(")"):
                    args.append(self.parse_expr())
                    if self.at(","):
                        self.advance()
                self.expect(")")
                return Call(name, tuple(args), span=sp)
        raise self.fail("a statement")

    def _reflective_name(self, inner: str, sp: Span) -> Expr:
        # "$state.m"() reads a state field, "$name"() a local/input.
        if inner.startswith("state."):
            return StateRead(inner[len("state."):])
        if not re.fullmatch(r"[a-zA-Z_][a-zA-Z0-9_]*", inner):
            raise IrSyntaxError(sp.line, sp.col, "an identifier after '$'", inner)
        return LocalRef(inner)

    def parse_if(self, sp: Span) -> If:
        self.expect("if")
        self.expect("(")
        cond = self.parse_pred()
        self.expect(")")
        then = self.parse_block()
        orelse: tuple[Stmt, ...] = ()
        if self.at("else"):
            self.advance()
            if self.at("if"):
                orelse = (self.parse_if(self.span()),)
            else:
                orelse = self.parse_block()
        return If(cond, then, orelse, span=sp)

    # -- predicates -----------------------------------------------------------

    def parse_pred(self) -> Pred:
        return self.parse_or()

    def parse_or(self) -> Pred:
        items = [self.parse_and()]
        while self.at("||"):
            self.advance()
            items.append(self.parse_and())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def parse_and(self) -> Pred:
        items = [self.parse_pred_atom()]
        while self.at("&&"):
            self.advance()
            items.append(self.parse_pred_atom())
        return items[0] if len(items) == 1 else And(tuple(items))

    def parse_pred_atom(self) -> Pred:
        if self.at("!"):
            self.advance()
            self.expect("(")
            inner = self.parse_pred()
            self.expect(")")
            return Not(inner)
        if self.at("("):
            self.advance()
            inner = self.parse_pred()
            self.expect(")")
            return inner
        lhs = self.parse_expr()
        op_tok = self.peek()
        if op_tok.text not in ("==", "!=", "<", "<=", ">", ">="):
            raise self.fail("a comparison operator")
        self.advance()
        rhs = self.parse_expr()
        return Cmp(lhs, op_tok.text, rhs)

    # -- expressions -----------------------------------------------------------

    def parse_expr(self) -> Expr:
        base = self.parse_atom()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            amt_tok = self.peek()
            if amt_tok.kind != "int":
                raise self.fail("an integer constant after '+'/'-'")
            self.advance()
            base = Arith(base, op, int(amt_tok.text))
        return base

    def parse_atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return Const(int(tok.text))
        if tok.kind == "string":
            self.advance()
            return Const(_unquote(tok.text))
        if tok.text == "evt":
            self.advance()
            self.expect(".")
            self.expect("value")
            return EventValue()
        if tok.text == "state":
            self.advance()
            self.expect(".")
            return StateRead(self.expect_kind("ident").text)
        if tok.kind == "ident":
            nxt = self.peek(1).text
            if nxt == ".":
                handle = self.advance().text
                self.expect(".")
                self.expect("currentValue")
                self.expect("(")
                attr = _unquote(self.expect_kind("string").text)
                self.expect(")")
                return AttrRead(handle, attr)
            if nxt == "(":
                name = self.advance().text
                self.expect("(")
                args: list[Expr] = []
                while not self.at(")"):
                    args.append(self.parse_expr())
                    if self.at(","):
                        self.advance()
                self.expect(")")
                return CallExpr(name, tuple(args))
            self.advance()
            return LocalRef(tok.text)
        raise self.fail("an expression")

    # -- assembly and name resolution -------------------------------------------

    def _assemble(self, name, permissions, subscriptions, timers, methods) -> AppIR:
        from .ir import walk_stmts

        input_handles = {p.handle for p in permissions if p.kind == "user_input"}
        methods = {n: _mark_input_refs(h, input_handles) for n, h in methods.items()}

        entry_names = {s.handler for s in subscriptions} | {t.handler for t in timers}
        for hd in methods.values():
            for st in walk_stmts(hd.body):
                if isinstance(st, Schedule):
                    entry_names.add(st.timer.handler)
        handlers = {n: h for n, h in methods.items() if n in entry_names}
        helpers = {n: h for n, h in methods.items() if n not in entry_names}
        return AppIR(name, tuple(permissions), tuple(subscriptions), tuple(timers),
                     handlers, helpers)

    def _resolve(self, app: AppIR) -> None:
        """Name-level invariants: handlers defined, handles declared."""
        from .ir import stmt_exprs, walk_stmts

        defs = app.defs()
        handles = {p.handle for p in app.permissions}
        device_handles = {p.handle for p in app.permissions if p.kind == "device"}
        input_handles = {p.handle for p in app.permissions if p.kind == "user_input"}

        for sub in app.subscriptions:
            if sub.handler not in defs:
                raise UnknownReference(sub.handler, sub.span)
            if sub.source_kind == "device" and sub.handle not in device_handles:
                raise UnknownReference(sub.handle or "?", sub.span)
        for timer in app.timers:
            if timer.handler not in defs:
                raise UnknownReference(timer.handler, timer.span)
            if timer.kind == "at_named_time" and timer.name not in input_handles:
                raise UnknownReference(timer.name or "?", timer.span)

        for hd in defs.values():
            locals_seen = set(hd.params)
            for st in walk_stmts(hd.body):
                if isinstance(st, ActionCall) and st.handle not in device_handles:
                    raise UnknownReference(st.handle, st.span)
                if isinstance(st, Schedule) and st.timer.handler not in defs:
                    raise UnknownReference(st.timer.handler, st.span)
                if isinstance(st, Assign) and st.target_kind == "local":
                    locals_seen.add(st.target)
                for e in stmt_exprs(st):
                    if isinstance(e, AttrRead) and e.handle not in device_handles:
                        raise UnknownReference(e.handle, st.span)


def _mark_input_refs(hd: HandlerDef, input_handles: set[str]) -> HandlerDef:
    """Rewrite bare identifiers naming user-input permissions into InputRef.

    A name assigned anywhere in the method (or bound as its parameter) stays
    a local and shadows the permission handle.
    """
    from .ir import walk_stmts

    assigned = set(hd.params)
    for st in walk_stmts(hd.body):
        if isinstance(st, Assign) and st.target_kind == "local":
            assigned.add(st.target)
    free_inputs = input_handles - assigned
    if not free_inputs:
        return hd

    def rx(e: Expr) -> Expr:
        if isinstance(e, LocalRef) and e.name in free_inputs:
            return InputRef(e.name)
        if isinstance(e, Arith):
            return Arith(rx(e.base), e.op, e.amount)
        if isinstance(e, CallExpr):
            return CallExpr(e.name, tuple(rx(a) for a in e.args))
        return e

    def rp(p: Pred) -> Pred:
        if isinstance(p, Cmp):
            return Cmp(rx(p.lhs), p.op, rx(p.rhs))
        if isinstance(p, And):
            return And(tuple(rp(i) for i in p.items))
        if isinstance(p, Or):
            return Or(tuple(rp(i) for i in p.items))
        if isinstance(p, Not):
            return Not(rp(p.item))
        return p

    def rs(st: Stmt) -> Stmt:
        if isinstance(st, ActionCall):
            return ActionCall(st.handle, st.action, tuple(rx(a) for a in st.args), span=st.span)
        if isinstance(st, Assign):
            return Assign(st.target_kind, st.target, rx(st.rhs), span=st.span)
        if isinstance(st, If):
            return If(rp(st.cond), tuple(rs(s) for s in st.then),
                      tuple(rs(s) for s in st.orelse), span=st.span)
        if isinstance(st, Call):
            return Call(st.name, tuple(rx(a) for a in st.args), span=st.span)
        if isinstance(st, ReflectiveCall):
            return ReflectiveCall(rx(st.name_expr), span=st.span)
        if isinstance(st, Return):
            return Return(None if st.value is None else rx(st.value), span=st.span)
        if isinstance(st, SetMode):
            return SetMode(rx(st.value), span=st.span)
        return st

    return HandlerDef(hd.name, hd.params, tuple(rs(s) for s in hd.body), span=hd.span)


def parse_app(source: str) -> AppIR:
    """Parse `.ir` text into a validated-by-name AppIR.

    Raises IrSyntaxError / DuplicateDefinition / UnknownReference. Registry
    level checks (capabilities, actions, domains) live in ir.validate_ir.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    return _Parser(tokenize(source)).parse_app()


# ---------------------------------------------------------------------------
# Pretty printer (canonical form; parse(print(parse(s))) == parse(s))
# ---------------------------------------------------------------------------


def _fmt_expr(e: Expr) -> str:
    if isinstance(e, Const):
        return str(e.value) if isinstance(e.value, int) else f'"{e.value}"'
    if isinstance(e, LocalRef):
        return e.name
    if isinstance(e, InputRef):
        return e.handle
    if isinstance(e, AttrRead):
        return f'{e.handle}.currentValue("{e.attribute}")'
    if isinstance(e, StateRead):
        return f"state.{e.fieldname}"
    if isinstance(e, EventValue):
        return "evt.value"
    if isinstance(e, Arith):
        return f"{_fmt_expr(e.base)} {e.op} {e.amount}"
    if isinstance(e, CallExpr):
        return f'{e.name}({", ".join(_fmt_expr(a) for a in e.args)})'
    raise TypeError(f"unknown expr {e!r}")


def _fmt_pred(p: Pred) -> str:
    if isinstance(p, Cmp):
        return f"{_fmt_expr(p.lhs)} {p.op} {_fmt_expr(p.rhs)}"
    if isinstance(p, And):
        return " && ".join(_fmt_pred_atomic(i) for i in p.items)
    if isinstance(p, Or):
        return " || ".join(_fmt_pred_atomic(i) for i in p.items)
    if isinstance(p, Not):
        return f"!({_fmt_pred(p.item)})"
    raise TypeError(f"unknown pred {p!r}")


def _fmt_pred_atomic(p: Pred) -> str:
    if isinstance(p, (And, Or)):
        return f"({_fmt_pred(p)})"
    return _fmt_pred(p)


def _fmt_timer(t: TimerDecl) -> str:
    if t.kind == "after_seconds":
        return f"schedule(after {t.seconds}, {t.handler})"
    return f"schedule(at {t.name}, {t.handler})"


def _fmt_stmt(st: Stmt, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(st, ActionCall):
        args = ", ".join(_fmt_expr(a) for a in st.args)
        return [f"{pad}{st.handle}.{st.action}({args})"]
    if isinstance(st, Assign):
        target = st.target if st.target_kind == "local" else f"state.{st.target}"
        return [f"{pad}{target} = {_fmt_expr(st.rhs)}"]
    if isinstance(st, If):
        lines = [f"{pad}if ({_fmt_pred(st.cond)}) {{"]
        for s in st.then:
            lines.extend(_fmt_stmt(s, indent + 1))
        if st.orelse:
            lines.append(f"{pad}}} else {{")
            for s in st.orelse:
                lines.extend(_fmt_stmt(s, indent + 1))
        lines.append(f"{pad}}}")
        return lines
    if isinstance(st, Call):
        args = ", ".join(_fmt_expr(a) for a in st.args)
        return [f"{pad}{st.name}({args})"]
    if isinstance(st, ReflectiveCall):
        inner = _fmt_expr(st.name_expr)
        return [f'{pad}"${inner}"()']
    if isinstance(st, Return):
        return [f"{pad}return" if st.value is None else f"{pad}return {_fmt_expr(st.value)}"]
    if isinstance(st, SetMode):
        return [f"{pad}setMode({_fmt_expr(st.value)})"]
    if isinstance(st, Schedule):
        return [f"{pad}{_fmt_timer(st.timer)}"]
    raise TypeError(f"unknown stmt {st!r}")


def print_app(app: AppIR) -> str:
    """Render an AppIR back to canonical `.ir` text."""
    lines = [f'app "{app.name}"', ""]
    for p in app.permissions:
        if p.kind == "device":
            lines.append(f"input ({p.handle}, {p.capability}, type: device)")
        else:
            lines.append(f"input ({p.handle}, {p.value_type}, type: user_defined)")
    if app.permissions:
        lines.append("")
    for s in app.subscriptions:
        if s.source_kind == "app_touch":
            lines.append(f"subscribe(app, touch, {s.handler})")
        elif s.source_kind == "location_mode":
            lines.append(f'subscribe(location, "{s.event.label()}", {s.handler})')
        else:
            lines.append(f'subscribe({s.handle}, "{s.event.label()}", {s.handler})')
    for t in app.timers:
        lines.append(_fmt_timer(t))
    if app.subscriptions or app.timers:
        lines.append("")
    for name in list(app.handlers) + list(app.helpers):
        hd = app.defs()[name]
        params = ", ".join(hd.params)
        lines.append(f"def {hd.name}({params}) {{")
        for st in hd.body:
            lines.extend(_fmt_stmt(st, 1))
        lines.append("}")
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"
