"""App intermediate representation: permissions, subscriptions, handler bodies.

The IR is a small standalone text language (see parser.py for the grammar).
An app declares device/user-input permissions, subscribes handlers to device
events, abstract events (location mode, app touch) or timers, and handler
bodies actuate devices, read attributes, branch on predicates and write
persistent ``state.<field>`` variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Span:
    """Source position (1-based line, 1-based column)."""

    line: int
    col: int

    def render(self, filename: str = "<ir>") -> str:
        return f"{filename}:{self.line}:{self.col}"


NO_SPAN = Span(0, 0)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Const(Expr):
    value: int | str


@dataclass(frozen=True)
class LocalRef(Expr):
    name: str


@dataclass(frozen=True)
class InputRef(Expr):
    """Reference to a user-input permission handle."""

    handle: str


@dataclass(frozen=True)
class AttrRead(Expr):
    """Read a device attribute snapshot, `handle.currentValue("attr")`."""

    handle: str
    attribute: str


@dataclass(frozen=True)
class StateRead(Expr):
    """Read a persistent `state.<field>` variable."""

    fieldname: str


@dataclass(frozen=True)
class EventValue(Expr):
    """The value carried by the triggering event (`evt.value`)."""


@dataclass(frozen=True)
class Arith(Expr):
    """`expr + c` / `expr - c`; only integer-constant offsets are allowed."""

    base: Expr
    op: str  # "+" or "-"
    amount: int


@dataclass(frozen=True)
class CallExpr(Expr):
    """Call in expression position; unknown names are opaque platform calls."""

    name: str
    args: tuple[Expr, ...] = ()


# ---------------------------------------------------------------------------
# Predicates
# ---------------------------------------------------------------------------

CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Pred:
    pass


@dataclass(frozen=True)
class Cmp(Pred):
    lhs: Expr
    op: str
    rhs: Expr


@dataclass(frozen=True)
class And(Pred):
    items: tuple[Pred, ...]


@dataclass(frozen=True)
class Or(Pred):
    items: tuple[Pred, ...]


@dataclass(frozen=True)
class Not(Pred):
    item: Pred


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Stmt:
    span: Span = field(default=NO_SPAN, kw_only=True, compare=False)


@dataclass(frozen=True)
class ActionCall(Stmt):
    handle: str
    action: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class Assign(Stmt):
    target_kind: str  # "local" | "state_field"
    target: str
    rhs: Expr


@dataclass(frozen=True)
class If(Stmt):
    cond: Pred
    then: tuple[Stmt, ...]
    orelse: tuple[Stmt, ...] = ()


@dataclass(frozen=True)
class Call(Stmt):
    name: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class ReflectiveCall(Stmt):
    """`"$expr"()`: invoke a method named by a string-valued expression."""

    name_expr: Expr


@dataclass(frozen=True)
class Return(Stmt):
    value: Expr | None = None


@dataclass(frozen=True)
class SetMode(Stmt):
    value: Expr


@dataclass(frozen=True)
class TimerDecl:
    kind: str  # "after_seconds" | "at_named_time"
    seconds: int | None
    name: str | None
    handler: str
    span: Span = field(default=NO_SPAN, compare=False)

    def label(self) -> str:
        if self.kind == "after_seconds":
            return f"timer.{self.seconds}s"
        return f"timer.{self.name}"


@dataclass(frozen=True)
class Schedule(Stmt):
    timer: TimerDecl


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------

USER_INPUT_TYPES = ("number", "string", "time")


@dataclass(frozen=True)
class PermissionDecl:
    handle: str
    kind: str  # "device" | "user_input"
    capability: str | None = None  # device kind
    value_type: str | None = None  # user_input kind
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class EventSpec:
    """Device/mode event: attribute plus optional value (absent = all values)."""

    attribute: str
    value: str | int | None = None

    def label(self) -> str:
        if self.value is None:
            return self.attribute
        return f"{self.attribute}.{self.value}"


@dataclass(frozen=True)
class Subscription:
    source_kind: str  # "device" | "location_mode" | "app_touch"
    handle: str | None
    event: EventSpec | None  # None only for app_touch
    handler: str
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class HandlerDef:
    name: str
    params: tuple[str, ...]
    body: tuple[Stmt, ...]
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class AppIR:
    name: str
    permissions: tuple[PermissionDecl, ...]
    subscriptions: tuple[Subscription, ...]
    timers: tuple[TimerDecl, ...]
    handlers: dict[str, HandlerDef]
    helpers: dict[str, HandlerDef]

    def permission(self, handle: str) -> PermissionDecl | None:
        for p in self.permissions:
            if p.handle == handle:
                return p
        return None

    def defs(self) -> dict[str, HandlerDef]:
        out = dict(self.handlers)
        out.update(self.helpers)
        return out

    def device_handles(self) -> list[str]:
        return [p.handle for p in self.permissions if p.kind == "device"]


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    span: Span = NO_SPAN

    def render(self, filename: str = "<ir>") -> str:
        return f"{self.span.render(filename)}: {self.severity}: {self.message}"


def walk_stmts(body: tuple[Stmt, ...]):
    """Yield every statement in program order, descending into branches."""
    for st in body:
        yield st
        if isinstance(st, If):
            yield from walk_stmts(st.then)
            yield from walk_stmts(st.orelse)


def walk_exprs(root: Expr):
    yield root
    if isinstance(root, Arith):
        yield from walk_exprs(root.base)
    elif isinstance(root, CallExpr):
        for a in root.args:
            yield from walk_exprs(a)


def pred_exprs(p: Pred):
    if isinstance(p, Cmp):
        yield from walk_exprs(p.lhs)
        yield from walk_exprs(p.rhs)
    elif isinstance(p, (And, Or)):
        for item in p.items:
            yield from pred_exprs(item)
    elif isinstance(p, Not):
        yield from pred_exprs(p.item)


def stmt_exprs(st: Stmt):
    """Expressions appearing directly in one statement (not nested blocks)."""
    if isinstance(st, ActionCall):
        yield from (e for a in st.args for e in walk_exprs(a))
    elif isinstance(st, Assign):
        yield from walk_exprs(st.rhs)
    elif isinstance(st, If):
        yield from pred_exprs(st.cond)
    elif isinstance(st, Call):
        yield from (e for a in st.args for e in walk_exprs(a))
    elif isinstance(st, ReflectiveCall):
        yield from walk_exprs(st.name_expr)
    elif isinstance(st, Return) and st.value is not None:
        yield from walk_exprs(st.value)
    elif isinstance(st, SetMode):
        yield from walk_exprs(st.value)


# ---------------------------------------------------------------------------
# Validation against a capability registry
# ---------------------------------------------------------------------------


def validate_ir(app: AppIR, reg) -> list[Diagnostic]:
    """Check AppIR invariants that need the capability registry.

    Name-level invariants (unknown handles, undefined handlers, duplicate
    permissions) are already enforced by the parser; this pass resolves
    capabilities, actions, attributes and event values against ``reg`` and
    returns an empty list iff everything checks out.
    """
    diags: list[Diagnostic] = []

    def err(code: str, message: str, span: Span) -> None:
        diags.append(Diagnostic("error", code, message, span))

    cap_of: dict[str, str] = {}
    for perm in app.permissions:
        if perm.kind != "device":
            continue
        if not reg.has_capability(perm.capability):
            err("UnknownCapability",
                f"capability '{perm.capability}' of handle '{perm.handle}' is not in the registry",
                perm.span)
        else:
            cap_of[perm.handle] = perm.capability

    for sub in app.subscriptions:
        if sub.source_kind == "device":
            cap = cap_of.get(sub.handle or "")
            if cap is None:
                continue  # permission error already reported
            attrs = reg.attributes_of(cap)
            ev = sub.event
            if ev.attribute not in attrs:
                err("AttributeNotInCapability",
                    f"capability '{cap}' has no attribute '{ev.attribute}'",
                    sub.span)
            elif ev.value is not None and not reg.value_in_domain(cap, ev.attribute, ev.value):
                err("ValueNotInDomain",
                    f"'{ev.value}' is not in the domain of {cap}.{ev.attribute}",
                    sub.span)
        elif sub.source_kind == "location_mode":
            ev = sub.event
            if ev.value is not None and not reg.value_in_domain("location", "mode", ev.value):
                err("ValueNotInDomain", f"'{ev.value}' is not a location mode", sub.span)

    defs = app.defs()
    for name, hd in defs.items():
        for st in walk_stmts(hd.body):
            if isinstance(st, ActionCall):
                cap = cap_of.get(st.handle)
                if cap is None:
                    continue
                effect = reg.action_effect(cap, st.action)
                if effect is None:
                    err("UnknownAction",
                        f"capability '{cap}' has no action '{st.action}'",
                        st.span)
                elif effect.from_argument is not None and len(st.args) <= effect.from_argument:
                    err("MissingActionArgument",
                        f"action '{st.action}' needs argument ${effect.from_argument + 1}",
                        st.span)
            if isinstance(st, ReflectiveCall):
                for e in walk_exprs(st.name_expr):
                    if isinstance(e, Const) and isinstance(e.value, int):
                        err("ReflectiveNameNotString",
                            "reflective call target must be a string-valued expression",
                            st.span)
            for e in stmt_exprs(st):
                if isinstance(e, AttrRead):
                    cap = cap_of.get(e.handle)
                    if cap is not None and e.attribute not in reg.attributes_of(cap):
                        err("AttributeNotInCapability",
                            f"capability '{cap}' has no attribute '{e.attribute}'",
                            st.span)

    for perm in app.permissions:
        if perm.kind == "user_input" and perm.value_type not in USER_INPUT_TYPES:
            err("BadInputType",
                f"user input '{perm.handle}' has unknown type '{perm.value_type}'",
                perm.span)

    return diags
