"""Program analysis: call graphs, backward dependence, symbolic execution.

The executor explores every feasible handler path, accumulating a path
condition (conjunction of branch atoms) and the ordered device writes, and
merges paths that produce identical effects by OR-ing their conditions.
Feasibility is decided by a custom interval/equality checker over single
symbolic keys; comparisons between two unrelated symbolic quantities are
kept as opaque atoms and never prune a path.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from .ir import (
    AppIR,
    Arith,
    Assign,
    ActionCall,
    AttrRead,
    And,
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
    Pred,
    ReflectiveCall,
    Return,
    Schedule,
    SetMode,
    StateRead,
    Stmt,
    Subscription,
    TimerDecl,
    walk_stmts,
)


class RecursionUnsupported(Exception):
    pass


class PathBudgetExceeded(Exception):
    pass


_NEG = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}
_SWAP = {"==": "==", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


# ---------------------------------------------------------------------------
# Symbolic values
# ---------------------------------------------------------------------------
#
# A symbolic quantity is a key plus an integer offset; keys identify one
# snapshot per handler run (two reads of the same attribute are equal).
# Key shapes:
#   ("attr", handle, attribute)   device attribute snapshot
#   ("input", handle)             user-configured input
#   ("state", field)              persistent state.<field> variable
#   ("evtvalue",)                 the triggering event's value
#   ("opaque", site)              result of an unmodeled platform call


@dataclass(frozen=True)
class SymValue:
    key: tuple | None  # None = concrete
    value: int | str | None = None
    offset: int = 0

    @staticmethod
    def concrete(v: int | str) -> "SymValue":
        return SymValue(None, v)

    @property
    def is_concrete(self) -> bool:
        return self.key is None

    def shifted(self, op: str, amount: int) -> "SymValue":
        delta = amount if op == "+" else -amount
        if self.is_concrete:
            if not isinstance(self.value, int):
                raise TypeError(f"arithmetic on non-integer constant {self.value!r}")
            return SymValue.concrete(self.value + delta)
        return replace(self, offset=self.offset + delta)

    def render(self) -> str:
        if self.is_concrete:
            return repr(self.value) if isinstance(self.value, str) else str(self.value)
        base = ".".join(str(p) for p in self.key[1:]) or self.key[0]
        if self.key[0] == "evtvalue":
            base = "evt.value"
        if self.offset:
            return f"{base}{'+' if self.offset > 0 else ''}{self.offset}"
        return base


# ---------------------------------------------------------------------------
# Sources
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SourceDescriptor:
    origin: str  # "developer_defined" | "user_defined" | "device_state" | "state_variable"
    const: int | str | None = None
    handle: str | None = None
    attribute: str | None = None
    fieldname: str | None = None

    def render(self) -> str:
        if self.origin == "developer_defined":
            return f"developer-defined({self.const})"
        if self.origin == "user_defined":
            return f"user-defined({self.handle})"
        if self.origin == "device_state":
            return f"device-state({self.handle}.{self.attribute})"
        return f"state-variable({self.fieldname})"


def source_of_key(key: tuple, entry: "EntryPoint | None" = None) -> SourceDescriptor | None:
    if key[0] == "attr":
        return SourceDescriptor("device_state", handle=key[1], attribute=key[2])
    if key[0] == "input":
        return SourceDescriptor("user_defined", handle=key[1])
    if key[0] == "state":
        return SourceDescriptor("state_variable", fieldname=key[1])
    if key[0] == "evtvalue" and entry is not None and entry.handle is not None:
        return SourceDescriptor("device_state", handle=entry.handle,
                                attribute=entry.attribute)
    return None


# ---------------------------------------------------------------------------
# Path conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    """`key + 0 cmp const` over one symbolic key (offset already folded)."""

    key: tuple
    op: str
    const: int | str

    def negated(self) -> "Atom":
        return Atom(self.key, _NEG[self.op], self.const)

    def render(self, evt_name: str | None = None) -> str:
        if self.key == ("evtvalue",) and evt_name:
            base = evt_name
        else:
            base = SymValue(self.key).render()
        c = repr(self.const) if isinstance(self.const, str) else self.const
        return f"{base} {self.op} {c}"


@dataclass(frozen=True)
class OpaqueAtom:
    """Comparison the checker cannot interpret; both polarities feasible."""

    text: str
    negated_flag: bool = False

    def negated(self) -> "OpaqueAtom":
        return OpaqueAtom(self.text, not self.negated_flag)

    def render(self) -> str:
        return f"!({self.text})" if self.negated_flag else self.text


@dataclass(frozen=True)
class PathCondition:
    """Conjunction of atoms; `key_domains` bounds finite keys for the checker."""

    atoms: tuple = ()
    key_domains: tuple = ()  # ((key, ("finite", values) | ("int",)), ...)

    def conjoin(self, other: "PathCondition") -> "PathCondition":
        domains = dict(self.key_domains)
        domains.update(dict(other.key_domains))
        return PathCondition(self.atoms + other.atoms, tuple(sorted(domains.items())))

    def domain_of(self, key: tuple):
        return dict(self.key_domains).get(key)

    def atoms_on(self, key: tuple) -> list[Atom]:
        return [a for a in self.atoms if isinstance(a, Atom) and a.key == key]

    def render(self, evt_name: str | None = None) -> str:
        if not self.atoms:
            return "true"
        return " && ".join(
            a.render(evt_name) if isinstance(a, Atom) else a.render()
            for a in self.atoms)


TRUE_CONDITION = PathCondition()


def normalize_condition(cond: PathCondition) -> PathCondition:
    """Replace each key's atoms by a minimal equivalent set.

    Integer keys collapse to an equality or tight bounds plus surviving
    disequalities; string keys dedupe. Opaque atoms pass through.
    """
    by_key: dict[tuple, list[Atom]] = {}
    opaques: list = []
    order: list[tuple] = []
    for a in cond.atoms:
        if isinstance(a, Atom):
            if a.key not in by_key:
                by_key[a.key] = []
                order.append(a.key)
            by_key[a.key].append(a)
        elif a not in opaques:
            opaques.append(a)

    out: list = []
    for key in order:
        atoms = by_key[key]
        if any(isinstance(a.const, str) for a in atoms):
            seen = set()
            for a in atoms:
                if (a.op, a.const) not in seen:
                    seen.add((a.op, a.const))
                    out.append(a)
            continue
        lo = hi = None
        eqs: set[int] = set()
        neqs: set[int] = set()
        for a in atoms:
            c = a.const
            if a.op == "==":
                eqs.add(c)
            elif a.op == "!=":
                neqs.add(c)
            elif a.op == ">":
                lo = c + 1 if lo is None else max(lo, c + 1)
            elif a.op == ">=":
                lo = c if lo is None else max(lo, c)
            elif a.op == "<":
                hi = c - 1 if hi is None else min(hi, c - 1)
            elif a.op == "<=":
                hi = c if hi is None else min(hi, c)
        if eqs:
            out.append(Atom(key, "==", next(iter(sorted(eqs)))))
            continue
        if lo is not None and (hi is None or lo <= hi) and lo == hi:
            out.append(Atom(key, "==", lo))
            continue
        # render strict ops when they came in strict (purely cosmetic choice:
        # keep the tight inclusive form)
        orig_strict_lo = any(a.op == ">" for a in atoms)
        orig_strict_hi = any(a.op == "<" for a in atoms)
        if lo is not None:
            out.append(Atom(key, ">", lo - 1) if orig_strict_lo and
                       any(a.op == ">" and a.const == lo - 1 for a in atoms)
                       else Atom(key, ">=", lo))
        if hi is not None:
            out.append(Atom(key, "<", hi + 1) if orig_strict_hi and
                       any(a.op == "<" and a.const == hi + 1 for a in atoms)
                       else Atom(key, "<=", hi))
        for v in sorted(neqs):
            if (lo is None or v >= lo) and (hi is None or v <= hi):
                out.append(Atom(key, "!=", v))
    out.extend(opaques)
    return PathCondition(tuple(out), cond.key_domains)


def check_path_condition(cond: PathCondition) -> bool:
    """Decide feasibility of a normalized conjunction.

    Per key the atoms induce an integer interval intersected with equality
    and disequality sets (string keys use equalities only); the condition is
    infeasible iff some key's set is empty. Opaque atoms are ignored.
    """
    by_key: dict[tuple, list[Atom]] = {}
    for atom in cond.atoms:
        if isinstance(atom, Atom):
            by_key.setdefault(atom.key, []).append(atom)

    for key, atoms in by_key.items():
        dom = cond.domain_of(key)
        if any(isinstance(a.const, str) for a in atoms):
            if not _strings_feasible(atoms, dom):
                return False
        else:
            if not _ints_feasible(atoms, dom):
                return False
    return True


def _strings_feasible(atoms: list[Atom], dom) -> bool:
    eqs = {a.const for a in atoms if a.op == "=="}
    neqs = {a.const for a in atoms if a.op == "!="}
    if len(eqs) > 1:
        return False
    if eqs:
        return next(iter(eqs)) not in neqs
    if dom is not None and dom[0] == "finite":
        return bool(set(dom[1]) - neqs)
    return True


def _ints_feasible(atoms: list[Atom], dom) -> bool:
    lo: int | None = None
    hi: int | None = None
    if dom is not None and dom[0] == "numeric":
        lo, hi = dom[1], dom[2]
    eqs: set[int] = set()
    neqs: set[int] = set()
    for a in atoms:
        c = a.const
        if a.op == "==":
            eqs.add(c)
        elif a.op == "!=":
            neqs.add(c)
        elif a.op == ">":
            lo = c + 1 if lo is None else max(lo, c + 1)
        elif a.op == ">=":
            lo = c if lo is None else max(lo, c)
        elif a.op == "<":
            hi = c - 1 if hi is None else min(hi, c - 1)
        elif a.op == "<=":
            hi = c if hi is None else min(hi, c)
    if len(eqs) > 1:
        return False
    if eqs:
        e = next(iter(eqs))
        if e in neqs:
            return False
        return (lo is None or lo <= e) and (hi is None or e <= hi)
    if lo is not None and hi is not None:
        if lo > hi:
            return False
        blocked = sum(1 for v in neqs if lo <= v <= hi)
        return hi - lo + 1 > blocked
    return True


# ---------------------------------------------------------------------------
# Call graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CallGraph:
    entry: str
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str, int]]  # (caller, callee, call line)
    reflective_sites: frozenset[tuple[str, int]]  # (enclosing method, line)


def _direct_callees(app: AppIR, hd: HandlerDef):
    defs = app.defs()
    for st in walk_stmts(hd.body):
        if isinstance(st, Call) and st.name in defs:
            yield st.name, st.span.line, False
        if isinstance(st, ReflectiveCall):
            yield None, st.span.line, True
        for e in _stmt_callexprs(st):
            if e.name in defs:
                yield e.name, st.span.line, False


def _stmt_callexprs(st: Stmt):
    from .ir import stmt_exprs

    for e in stmt_exprs(st):
        if isinstance(e, CallExpr):
            yield e


def build_call_graphs(app: AppIR) -> dict[str, CallGraph]:
    """One graph per entry handler; reflective sites fan out to all methods.

    Raises RecursionUnsupported when the direct-call relation has a cycle;
    a reflective fan-out edge back into the enclosing method is dropped
    instead (path exploration excludes in-progress targets the same way).
    """
    defs = app.defs()
    direct: dict[str, set[tuple[str, int]]] = {name: set() for name in defs}
    reflective: dict[str, set[int]] = {name: set() for name in defs}
    for name, hd in defs.items():
        for callee, line, is_reflective in _direct_callees(app, hd):
            if is_reflective:
                reflective[name].add(line)
            else:
                direct[name].add((callee, line))

    _reject_recursion(direct)

    graphs: dict[str, CallGraph] = {}
    for entry in sorted(app.handlers):
        nodes: set[str] = set()
        edges: set[tuple[str, str, int]] = set()
        sites: set[tuple[str, int]] = set()
        work = [entry]
        while work:
            cur = work.pop()
            if cur in nodes:
                continue
            nodes.add(cur)
            for callee, line in sorted(direct.get(cur, ())):
                edges.add((cur, callee, line))
                work.append(callee)
            for line in sorted(reflective.get(cur, ())):
                sites.add((cur, line))
                for target in sorted(defs):
                    if target != cur:
                        edges.add((cur, target, line))
                        work.append(target)
        graphs[entry] = CallGraph(entry, frozenset(nodes), frozenset(edges),
                                  frozenset(sites))
    return graphs


def _reject_recursion(direct: dict[str, set[tuple[str, int]]]) -> None:
    color: dict[str, int] = {}

    def visit(node: str) -> None:
        color[node] = 1
        for callee, _ in direct.get(node, ()):
            c = color.get(callee, 0)
            if c == 1:
                raise RecursionUnsupported(f"recursive call involving '{callee}'")
            if c == 0:
                visit(callee)
        color[node] = 2

    for name in direct:
        if color.get(name, 0) == 0:
            visit(name)


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntryPoint:
    kind: str  # "device" | "mode" | "touch" | "timer"
    handler: str
    handle: str | None = None  # device handle
    attribute: str | None = None
    value: str | int | None = None  # specialized event value
    timer: str | None = None  # rendered timer label

    def label(self) -> str:
        if self.kind == "device":
            return f"{self.attribute}.{self.value}" if self.value is not None else self.attribute
        if self.kind == "mode":
            return f"mode.{self.value}" if self.value is not None else "mode"
        if self.kind == "touch":
            return "touch"
        return self.timer or "timer"

    def specialized(self, value: str | int) -> "EntryPoint":
        return replace(self, value=value)


def entry_points(app: AppIR) -> list[EntryPoint]:
    out: list[EntryPoint] = []
    for sub in app.subscriptions:
        if sub.source_kind == "device":
            out.append(EntryPoint("device", sub.handler, handle=sub.handle,
                                  attribute=sub.event.attribute, value=sub.event.value))
        elif sub.source_kind == "location_mode":
            out.append(EntryPoint("mode", sub.handler, attribute="mode",
                                  value=sub.event.value))
        else:
            out.append(EntryPoint("touch", sub.handler))
    timers: list[TimerDecl] = list(app.timers)
    for hd in app.defs().values():
        for st in walk_stmts(hd.body):
            if isinstance(st, Schedule):
                timers.append(st.timer)
    seen: set[tuple[str, str]] = set()
    for t in timers:
        key = (t.label(), t.handler)
        if key not in seen:
            seen.add(key)
            out.append(EntryPoint("timer", t.handler, timer=t.label()))
    return out


# ---------------------------------------------------------------------------
# Path summaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WriteStep:
    """One attribute/mode/state write along a path, in program order."""

    kind: str  # "device" | "mode" | "state"
    handle: str | None
    attribute: str
    value: SymValue
    action: str | None = None
    line: int = 0

    def render(self) -> str:
        if self.kind == "device":
            return f"{self.handle}.{self.attribute}:={self.value.render()}"
        if self.kind == "mode":
            return f"mode:={self.value.render()}"
        return f"state.{self.attribute}:={self.value.render()}"


@dataclass(frozen=True)
class PathSummary:
    app_name: str
    entry: EntryPoint
    conditions: tuple[PathCondition, ...]  # disjunction of conjunctions
    actions: tuple[WriteStep, ...]
    source_labels: tuple = ()  # ((atom, SourceDescriptor), ...)
    call_events: tuple = ()  # (("call"|"return", method, line), ...)
    read_keys: frozenset = frozenset()  # symbolic keys the handler consulted

    @property
    def condition(self) -> PathCondition:
        return self.conditions[0] if self.conditions else TRUE_CONDITION

    def feasible(self) -> bool:
        return any(check_path_condition(c) for c in self.conditions)

    def guard_render(self) -> str:
        evt_name = self.entry.attribute
        parts = [c.render(evt_name) for c in self.conditions]
        if parts == ["true"]:
            return "true"
        return " || ".join(f"({p})" if len(parts) > 1 else p for p in parts)

    def device_writes(self) -> list[WriteStep]:
        return [w for w in self.actions if w.kind == "device"]


# ---------------------------------------------------------------------------
# Symbolic executor
# ---------------------------------------------------------------------------


@dataclass
class _Ctx:
    env: dict
    atoms: list
    actions: list
    call_events: list
    stack: tuple[str, ...]
    returning: bool = False
    retval: SymValue | None = None
    opaque_count: int = 0

    def fork(self) -> "_Ctx":
        return _Ctx(dict(self.env), list(self.atoms), list(self.actions),
                    list(self.call_events), self.stack, self.returning,
                    self.retval, self.opaque_count)


class _Executor:
    def __init__(self, app: AppIR, reg, entry: EntryPoint, path_budget: int):
        self.app = app
        self.reg = reg
        self.entry = entry
        self.budget = path_budget
        self.paths_seen = 0
        self.defs = app.defs()
        self.cap_of = {p.handle: p.capability for p in app.permissions if p.kind == "device"}
        self.key_domains: dict[tuple, tuple] = {}
        if entry.kind == "mode" and entry.value is None:
            self.key_domains[("evtvalue",)] = ("finite", reg.domain("location", "mode").values)

    # -- expression evaluation (may fork through helper calls) --------------

    def eval_expr(self, e: Expr, ctx: _Ctx) -> list[tuple[SymValue, _Ctx]]:
        if isinstance(e, Const):
            return [(SymValue.concrete(e.value), ctx)]
        if isinstance(e, LocalRef):
            if e.name in ctx.env:
                return [(ctx.env[e.name], ctx)]
            # unassigned local: opaque unknown
            return [(self._fresh_opaque(f"local:{e.name}", ctx), ctx)]
        if isinstance(e, InputRef):
            return [(SymValue(("input", e.handle)), ctx)]
        if isinstance(e, StateRead):
            self.key_domains.setdefault(("state", e.fieldname), ("any",))
            written = ctx.env.get(("state", e.fieldname))
            if written is not None:
                return [(written, ctx)]
            return [(SymValue(("state", e.fieldname)), ctx)]
        if isinstance(e, EventValue):
            # The event already updated its attribute, so the event value and
            # a fresh read of the subscribed attribute are the same snapshot.
            if self.entry.kind == "device":
                if self.entry.value is not None:
                    return [(SymValue.concrete(self.entry.value), ctx)]
                key = ("attr", self.entry.handle, self.entry.attribute)
                self._note_attr_domain(key)
                return [(SymValue(key), ctx)]
            if self.entry.kind == "mode":
                if self.entry.value is not None:
                    return [(SymValue.concrete(self.entry.value), ctx)]
                return [(SymValue(("evtvalue",)), ctx)]
            return [(self._fresh_opaque("evt.value", ctx), ctx)]
        if isinstance(e, AttrRead):
            if e.handle == "location" and e.attribute == "mode":
                if self.entry.kind == "mode" and self.entry.value is not None:
                    return [(SymValue.concrete(self.entry.value), ctx)]
                self.key_domains[("mode",)] = ("finite",
                                               self.reg.domain("location", "mode").values)
                return [(SymValue(("mode",)), ctx)]
            key = ("attr", e.handle, e.attribute)
            self._note_attr_domain(key)
            return [(SymValue(key), ctx)]
        if isinstance(e, Arith):
            outs = []
            for v, c in self.eval_expr(e.base, ctx):
                outs.append((v.shifted(e.op, e.amount), c))
            return outs
        if isinstance(e, CallExpr):
            if e.name in self.defs:
                return self.call_method(e.name, e.args, ctx, line=0)
            return [(self._fresh_opaque(f"{e.name}()", ctx), ctx)]
        raise TypeError(f"unknown expr {e!r}")

    def _fresh_opaque(self, site: str, ctx: _Ctx) -> SymValue:
        ctx.opaque_count += 1
        return SymValue(("opaque", f"{site}#{ctx.opaque_count}"))

    def _note_attr_domain(self, key: tuple) -> None:
        cap = self.cap_of.get(key[1])
        if cap is None:
            return
        dom = self.reg.domain(cap, key[2])
        if dom.kind == "finite":
            self.key_domains[key] = ("finite", dom.values)
        else:
            self.key_domains[key] = ("numeric", dom.lo, dom.hi)

    # -- predicates ----------------------------------------------------------

    def eval_cmp(self, lhs: SymValue, op: str, rhs: SymValue):
        """Return True/False when decidable, else an Atom or OpaqueAtom."""
        if lhs.is_concrete and rhs.is_concrete:
            return _concrete_cmp(lhs.value, op, rhs.value)
        if lhs.is_concrete:
            return self.eval_cmp(rhs, _SWAP[op], lhs)
        if rhs.is_concrete:
            # (key + off) op c  ->  key op (c - off)
            c = rhs.value
            if isinstance(c, int):
                return Atom(lhs.key, op, c - lhs.offset)
            if lhs.offset:
                return OpaqueAtom(f"{lhs.render()} {op} {rhs.render()}")
            return Atom(lhs.key, op, c)
        if lhs.key == rhs.key:
            return _concrete_cmp(lhs.offset, op, rhs.offset)
        return OpaqueAtom(f"{lhs.render()} {op} {rhs.render()}")

    def pred_alternatives(self, p: Pred, ctx: _Ctx, want: bool):
        """Yield (atom-list, ctx) alternatives making `p` evaluate to `want`."""
        if isinstance(p, Cmp):
            for (lv, c1) in self.eval_expr(p.lhs, ctx):
                for (rv, c2) in self.eval_expr(p.rhs, c1):
                    verdict = self.eval_cmp(lv, p.op, rv)
                    if isinstance(verdict, bool):
                        if verdict == want:
                            yield [], c2
                    else:
                        yield [verdict if want else verdict.negated()], c2
            return
        if isinstance(p, Not):
            yield from self.pred_alternatives(p.item, ctx, not want)
            return
        if isinstance(p, And):
            items = p.items if want else None
            if want:
                yield from self._all_of(list(p.items), ctx, True)
            else:
                # !(a && b) = !a | (a && !b) ... disjoint decomposition
                for i in range(len(p.items)):
                    prefix = list(p.items[:i])
                    for atoms1, c1 in self._all_of(prefix, ctx, True):
                        for atoms2, c2 in self.pred_alternatives(p.items[i], c1, False):
                            yield atoms1 + atoms2, c2
            return
        if isinstance(p, Or):
            if want:
                for i in range(len(p.items)):
                    prefix = list(p.items[:i])
                    for atoms1, c1 in self._all_of(prefix, ctx, False):
                        for atoms2, c2 in self.pred_alternatives(p.items[i], c1, True):
                            yield atoms1 + atoms2, c2
            else:
                yield from self._all_of(list(p.items), ctx, False)
            return
        raise TypeError(f"unknown pred {p!r}")

    def _all_of(self, items: list[Pred], ctx: _Ctx, want: bool):
        if not items:
            yield [], ctx
            return
        head, rest = items[0], items[1:]
        for atoms1, c1 in self.pred_alternatives(head, ctx, want):
            for atoms2, c2 in self._all_of(rest, c1, want):
                yield atoms1 + atoms2, c2

    # -- statements ------------------------------------------------------------

    def exec_stmts(self, stmts, ctx: _Ctx) -> list[_Ctx]:
        ctxs = [ctx]
        for st in stmts:
            nxt: list[_Ctx] = []
            for c in ctxs:
                if c.returning:
                    nxt.append(c)
                else:
                    nxt.extend(self.exec_stmt(st, c))
            ctxs = nxt
        return ctxs

    def exec_stmt(self, st: Stmt, ctx: _Ctx) -> list[_Ctx]:
        if isinstance(st, ActionCall):
            return self._exec_action(st, ctx)
        if isinstance(st, Assign):
            outs = []
            for v, c in self.eval_expr(st.rhs, ctx):
                c2 = c.fork()
                if st.target_kind == "local":
                    c2.env[st.target] = v
                else:
                    c2.actions.append(WriteStep("state", None, st.target, v,
                                                line=st.span.line))
                    c2.env[("state", st.target)] = v
                outs.append(c2)
            return outs
        if isinstance(st, If):
            outs = []
            for want, block in ((True, st.then), (False, st.orelse)):
                for atoms, c in self.pred_alternatives(st.cond, ctx, want):
                    c2 = c.fork()
                    c2.atoms.extend(atoms)
                    if not check_path_condition(self._condition(c2)):
                        continue
                    self._spend_budget()
                    outs.extend(self.exec_stmts(block, c2))
            return outs
        if isinstance(st, Call):
            if st.name in self.defs:
                return [c for _, c in self.call_method(st.name, st.args, ctx,
                                                       line=st.span.line)]
            return [ctx]  # unmodeled platform call
        if isinstance(st, ReflectiveCall):
            return self._exec_reflective(st, ctx)
        if isinstance(st, Return):
            if st.value is None:
                c2 = ctx.fork()
                c2.returning = True
                c2.retval = None
                return [c2]
            outs = []
            for v, c in self.eval_expr(st.value, ctx):
                c2 = c.fork()
                c2.returning = True
                c2.retval = v
                outs.append(c2)
            return outs
        if isinstance(st, SetMode):
            outs = []
            for v, c in self.eval_expr(st.value, ctx):
                c2 = c.fork()
                c2.actions.append(WriteStep("mode", None, "mode", v, line=st.span.line))
                outs.append(c2)
            return outs
        if isinstance(st, Schedule):
            return [ctx]  # the scheduled handler is analyzed as its own entry
        raise TypeError(f"unknown stmt {st!r}")

    def _exec_action(self, st: ActionCall, ctx: _Ctx) -> list[_Ctx]:
        cap = self.cap_of[st.handle]
        effect = self.reg.action_effect(cap, st.action)
        if effect is None:
            raise KeyError(f"unknown action {cap}.{st.action}; validate the app first")
        if effect.from_argument is None:
            c2 = ctx.fork()
            c2.actions.append(WriteStep("device", st.handle, effect.attribute,
                                        SymValue.concrete(effect.constant),
                                        action=st.action, line=st.span.line))
            return [c2]
        outs = []
        for v, c in self.eval_expr(st.args[effect.from_argument], ctx):
            c2 = c.fork()
            c2.actions.append(WriteStep("device", st.handle, effect.attribute, v,
                                        action=st.action, line=st.span.line))
            outs.append(c2)
        return outs

    def call_method(self, name: str, args, ctx: _Ctx, line: int):
        if name in ctx.stack:
            raise RecursionUnsupported(f"recursive call of '{name}'")
        hd = self.defs[name]
        cur = [((), ctx)]
        for a in args:
            nxt = []
            for (vals, c) in cur:
                for v, c2 in self.eval_expr(a, c):
                    nxt.append((vals + (v,), c2))
            cur = nxt
        outs: list[tuple[SymValue, _Ctx]] = []
        for vals, c in cur:
            callee = c.fork()
            saved_env = callee.env
            callee.env = {("state", k[1]): v for k, v in saved_env.items()
                          if isinstance(k, tuple)}
            for pname, v in zip(hd.params, vals):
                callee.env[pname] = v
            callee.stack = ctx.stack + (name,)
            callee.call_events.append(("call", name, line))
            for done in self.exec_stmts(hd.body, callee):
                ret = done.retval if done.returning else None
                back = done.fork()
                back.env = dict(saved_env)
                for k, v in done.env.items():
                    if isinstance(k, tuple):
                        back.env[k] = v
                back.stack = ctx.stack
                back.returning = False
                back.retval = None
                back.call_events.append(("return", name, line))
                outs.append((ret if ret is not None else SymValue.concrete(0), back))
        return outs

    def _exec_reflective(self, st: ReflectiveCall, ctx: _Ctx) -> list[_Ctx]:
        """Over-approximate a string-named call: any method not in progress."""
        outs: list[_Ctx] = []
        for target in sorted(self.defs):
            if target in ctx.stack:
                continue
            self._spend_budget()
            for _, c in self.call_method(target, (), ctx, line=st.span.line):
                outs.append(c)
        return outs or [ctx]

    # -- driver -----------------------------------------------------------------

    def _spend_budget(self) -> None:
        self.paths_seen += 1
        if self.paths_seen > self.budget:
            raise PathBudgetExceeded(
                f"more than {self.budget} paths in handler '{self.entry.handler}'")

    def _condition(self, ctx: _Ctx) -> PathCondition:
        return PathCondition(tuple(ctx.atoms), tuple(sorted(self.key_domains.items())))

    def run(self) -> list[PathSummary]:
        hd = self.defs[self.entry.handler]
        root = _Ctx({}, [], [], [], (self.entry.handler,))
        summaries: list[PathSummary] = []
        for done in self.exec_stmts(hd.body, root):
            cond = self._condition(done)
            if not check_path_condition(cond):
                continue
            for entry, final_cond in self._specialize(cond):
                summaries.append(self._summarize(entry, final_cond, done))
        return summaries

    def _specialize(self, cond: PathCondition):
        """Split an attribute-level entry by the event values a path admits.

        The event pinned its own attribute, so atoms over that attribute are
        constraints on the event value: a value-level entry folds them away,
        a finite attribute-level entry splits into one summary per admitted
        value, and numeric attribute-level entries keep them as guards on
        the incoming reading.
        """
        if self.entry.kind == "mode" and self.entry.value is None:
            ev_key = ("evtvalue",)
            ev_atoms = cond.atoms_on(ev_key)
            dom = cond.domain_of(ev_key)
            if ev_atoms and dom is not None and dom[0] == "finite":
                rest = tuple(a for a in cond.atoms
                             if not (isinstance(a, Atom) and a.key == ev_key))
                for v in dom[1]:
                    probe = PathCondition(tuple(ev_atoms) + (Atom(ev_key, "==", v),),
                                          cond.key_domains)
                    if check_path_condition(probe):
                        yield self.entry.specialized(v), \
                            PathCondition(rest, cond.key_domains)
                return
            yield self.entry, cond
            return

        if self.entry.kind == "device":
            ka = ("attr", self.entry.handle, self.entry.attribute)
            ka_atoms = cond.atoms_on(ka)
            if not ka_atoms:
                yield self.entry, cond
                return
            rest = tuple(a for a in cond.atoms
                         if not (isinstance(a, Atom) and a.key == ka))
            if self.entry.value is not None:
                for a in ka_atoms:
                    if not _concrete_cmp(self.entry.value, a.op, a.const):
                        return  # path requires a different event value
                yield self.entry, PathCondition(rest, cond.key_domains)
                return
            dom = cond.domain_of(ka)
            if dom is not None and dom[0] == "finite":
                for v in dom[1]:
                    probe = PathCondition(tuple(ka_atoms) + (Atom(ka, "==", v),),
                                          cond.key_domains)
                    if check_path_condition(probe):
                        yield self.entry.specialized(v), \
                            PathCondition(rest, cond.key_domains)
                return
        yield self.entry, cond

    def _summarize(self, entry: EntryPoint, cond: PathCondition, ctx: _Ctx) -> PathSummary:
        cond = normalize_condition(cond)
        labels = []
        for a in cond.atoms:
            if isinstance(a, Atom):
                src = source_of_key(a.key, entry)
                if src is not None:
                    labels.append((a, src))
        actions = tuple(self._resolve_evtvalue(w, entry) for w in ctx.actions)
        return PathSummary(self.app.name, entry, (cond,), actions,
                           tuple(labels), tuple(ctx.call_events),
                           read_keys=frozenset(self.key_domains))

    def _resolve_evtvalue(self, w: WriteStep, entry: EntryPoint) -> WriteStep:
        if w.value.is_concrete or entry.value is None or w.value.offset != 0:
            return w
        event_keys = {("evtvalue",)}
        if entry.kind == "device":
            event_keys.add(("attr", entry.handle, entry.attribute))
        if w.value.key in event_keys:
            return replace(w, value=SymValue.concrete(entry.value))
        return w


def _concrete_cmp(a, op: str, b) -> bool:
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if isinstance(a, str) or isinstance(b, str):
        raise TypeError(f"ordered comparison of strings {a!r} {op} {b!r}")
    return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]


# ---------------------------------------------------------------------------
# Merging and pruning
# ---------------------------------------------------------------------------


def merge_summaries(summaries: list[PathSummary]) -> list[PathSummary]:
    """Join paths with identical entry and effects, OR-ing their conditions.

    Two conditions differing in exactly one complementary atom collapse to
    the condition without it, so `if c {x} else {x}` merges to guard true.
    """
    groups: dict[tuple, list[PathSummary]] = {}
    order: list[tuple] = []
    for s in summaries:
        key = (s.entry, tuple((w.kind, w.handle, w.attribute, w.value) for w in s.actions))
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(s)

    merged: list[PathSummary] = []
    for key in order:
        group = groups[key]
        conditions = [c for s in group for c in s.conditions]
        conditions = _simplify_disjunction(conditions)
        labels: dict = {}
        for s in group:
            labels.update(dict(s.source_labels))
        merged.append(replace(group[0], conditions=tuple(conditions),
                              source_labels=tuple(labels.items())))
    return merged


def _simplify_disjunction(conds: list[PathCondition]) -> list[PathCondition]:
    changed = True
    conds = list(conds)
    while changed:
        changed = False
        for i, j in itertools.combinations(range(len(conds)), 2):
            resolved = _resolve_pair(conds[i], conds[j])
            if resolved is not None:
                keep = [c for k, c in enumerate(conds) if k not in (i, j)]
                conds = keep + [resolved]
                changed = True
                break
    # an empty conjunction absorbs everything
    if any(not c.atoms for c in conds):
        return [PathCondition((), conds[0].key_domains if conds else ())]
    return conds


def _resolve_pair(c1: PathCondition, c2: PathCondition) -> PathCondition | None:
    s1, s2 = set(c1.atoms), set(c2.atoms)
    if s1 == s2:
        return c1
    diff1, diff2 = s1 - s2, s2 - s1
    if len(diff1) == 1 and len(diff2) == 1:
        a1, a2 = next(iter(diff1)), next(iter(diff2))
        if a1.negated() == a2:
            kept = tuple(a for a in c1.atoms if a != a1)
            return PathCondition(kept, c1.key_domains)
    return None


def prune_infeasible(paths: list[PathSummary], graph: CallGraph) -> list[PathSummary]:
    """Keep paths whose condition is satisfiable and whose call/return events
    respect stack discipline at depth one."""
    kept = []
    for p in paths:
        if not p.feasible():
            continue
        if not _calls_balanced(p.call_events):
            continue
        kept.append(p)
    return kept


def _calls_balanced(events) -> bool:
    stack: list[str] = []
    for kind, name, _line in events:
        if kind == "call":
            stack.append(name)
        else:
            if not stack or stack[-1] != name:
                return False
            stack.pop()
    return not stack


def symbolic_execute(app: AppIR, reg, entry: EntryPoint,
                     path_budget: int = 4096, merge: bool = True) -> list[PathSummary]:
    """All feasible paths of one entry point as merged PathSummaries."""
    raw = _Executor(app, reg, entry, path_budget).run()
    graphs = build_call_graphs(app)
    graph = graphs.get(entry.handler)
    if graph is None:
        graph = CallGraph(entry.handler, frozenset({entry.handler}), frozenset(),
                          frozenset())
    pruned = prune_infeasible(raw, graph)
    return merge_summaries(pruned) if merge else pruned


def analyze_app(app: AppIR, reg, path_budget: int = 4096) -> dict[EntryPoint, list[PathSummary]]:
    """Summaries for every entry point of the app."""
    out: dict[EntryPoint, list[PathSummary]] = {}
    for entry in entry_points(app):
        out[entry] = symbolic_execute(app, reg, entry, path_budget=path_budget)
    return out


# ---------------------------------------------------------------------------
# Backward dependence (worklist over def-use chains)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DepSource:
    descriptor: SourceDescriptor
    offset: int = 0

    def sink_value(self) -> int | None:
        if self.descriptor.origin == "developer_defined" \
                and isinstance(self.descriptor.const, int):
            return self.descriptor.const + self.offset
        return None


@dataclass
class DepRelation:
    entries: set[tuple[tuple[int, str], tuple[int, str]]] = field(default_factory=set)
    sources: set[DepSource] = field(default_factory=set)


@dataclass(frozen=True)
class _Linear:
    stmt: Stmt
    ctx: tuple  # ((if-line, arm-bool), ...)


def _linearize(body, ctx=()) -> list[_Linear]:
    out: list[_Linear] = []
    for st in body:
        out.append(_Linear(st, ctx))
        if isinstance(st, If):
            out.extend(_linearize(st.then, ctx + ((st.span.line, True),)))
            out.extend(_linearize(st.orelse, ctx + ((st.span.line, False),)))
    return out


def _ctx_compatible(a: tuple, b: tuple) -> bool:
    da, db = dict(a), dict(b)
    return all(db[k] == v for k, v in da.items() if k in db)


def compute_dependence(app: AppIR, target: tuple[str, str], reg) -> DepRelation:
    """Worklist backward dependence for a numeric attribute of a device.

    Seeds with identifiers used in action-call arguments that set the
    attribute, follows single-identifier (plus/minus constant) right-hand
    sides through assignments, parameter passing and returns, and collects
    terminal sources. Chains guarded by contradictory branch predicates are
    dropped (the guard conjunction along the chain must be satisfiable).
    """
    handle, attribute = target
    dep = DepRelation()
    defs = app.defs()
    lin: dict[str, list[_Linear]] = {n: _linearize(h.body) for n, h in defs.items()}

    cap_of = {p.handle: p.capability for p in app.permissions if p.kind == "device"}
    input_handles = {p.handle for p in app.permissions if p.kind == "user_input"}

    def effect_matches(st: ActionCall) -> int | None:
        if st.handle != handle:
            return None
        eff = reg.action_effect(cap_of.get(st.handle, ""), st.action)
        if eff is None or eff.attribute != attribute or eff.from_argument is None:
            return None
        return eff.from_argument

    # (method, index-in-linearization, identifier, offset, guard atoms)
    worklist: list[tuple[str, int, str, int, tuple]] = []
    done: set[tuple[str, int, str]] = set()

    def guard_atoms_of(method: str, ctx: tuple) -> tuple:
        atoms = []
        by_line = {l.stmt.span.line: l.stmt for l in lin[method]
                   if isinstance(l.stmt, If)}
        for line, arm in ctx:
            st = by_line.get(line)
            if st is None:
                continue
            atom = _static_atom(st.cond, arm, input_handles)
            if atom is not None:
                atoms.append(atom)
        return tuple(atoms)

    def seed_from_expr(e: Expr, method: str, idx: int, line: int,
                       offset: int, guards: tuple) -> None:
        if isinstance(e, Const) and isinstance(e.value, int):
            _add_source(SourceDescriptor("developer_defined", const=e.value),
                        offset, guards)
        elif isinstance(e, InputRef):
            _add_source(SourceDescriptor("user_defined", handle=e.handle), offset, guards)
        elif isinstance(e, StateRead):
            _add_source(SourceDescriptor("state_variable", fieldname=e.fieldname),
                        offset, guards)
        elif isinstance(e, AttrRead):
            _add_source(SourceDescriptor("device_state", handle=e.handle,
                                         attribute=e.attribute), offset, guards)
        elif isinstance(e, LocalRef):
            worklist.append((method, idx, e.name, offset, guards))
        elif isinstance(e, Arith):
            delta = e.amount if e.op == "+" else -e.amount
            seed_from_expr(e.base, method, idx, line, offset + delta, guards)
        elif isinstance(e, CallExpr) and e.name in defs:
            for li, l in enumerate(lin[e.name]):
                if isinstance(l.stmt, Return) and l.stmt.value is not None:
                    seed_from_expr(l.stmt.value, e.name, li, l.stmt.span.line,
                                   offset, guards + guard_atoms_of(e.name, l.ctx))

    def _add_source(desc: SourceDescriptor, offset: int, guards: tuple) -> None:
        if guards and not check_path_condition(PathCondition(guards)):
            return
        dep.sources.add(DepSource(desc, offset))

    for mname, linear in lin.items():
        for idx, l in enumerate(linear):
            st = l.stmt
            if isinstance(st, ActionCall):
                argidx = effect_matches(st)
                if argidx is None or argidx >= len(st.args):
                    continue
                guards = guard_atoms_of(mname, l.ctx)
                seed_from_expr(st.args[argidx], mname, idx, st.span.line, 0, guards)

    while worklist:
        method, use_idx, name, offset, guards = worklist.pop()
        key = (method, lin[method][use_idx].stmt.span.line, name)
        if key in done:
            continue
        done.add(key)
        use = lin[method][use_idx]
        found_def = False

        for j in range(use_idx - 1, -1, -1):
            cand = lin[method][j]
            st = cand.stmt
            if isinstance(st, Assign) and st.target_kind == "local" and st.target == name:
                if not _ctx_compatible(cand.ctx, use.ctx):
                    continue
                found_def = True
                dep.entries.add(((use.stmt.span.line, name), (st.span.line, name)))
                def_guards = guards + guard_atoms_of(method, cand.ctx)
                rhs = st.rhs
                if isinstance(rhs, LocalRef):
                    dep.entries.add(((st.span.line, name), (st.span.line, rhs.name)))
                    worklist.append((method, j, rhs.name, offset, def_guards))
                elif isinstance(rhs, Arith) and isinstance(rhs.base, LocalRef):
                    delta = rhs.amount if rhs.op == "+" else -rhs.amount
                    dep.entries.add(((st.span.line, name), (st.span.line, rhs.base.name)))
                    worklist.append((method, j, rhs.base.name, offset + delta, def_guards))
                else:
                    seed_from_expr(rhs, method, j, st.span.line, offset, def_guards)
                if set(dict(cand.ctx)) <= set(dict(use.ctx)):
                    break  # dominating definition kills earlier ones

        if not found_def:
            hd = defs[method]
            if name in hd.params:
                # parameter passing as inter-procedural definition
                for caller, clin in lin.items():
                    for cj, cl in enumerate(clin):
                        cst = cl.stmt
                        call_args = None
                        if isinstance(cst, Call) and cst.name == method:
                            call_args = cst.args
                        elif isinstance(cst, Assign) and isinstance(cst.rhs, CallExpr) \
                                and cst.rhs.name == method:
                            call_args = cst.rhs.args
                        if call_args is None:
                            continue
                        pidx = hd.params.index(name)
                        if pidx < len(call_args):
                            dep.entries.add(
                                ((use.stmt.span.line, name),
                                 (cst.span.line, _expr_id(call_args[pidx]) or name)))
                            seed_from_expr(call_args[pidx], caller, cj, cst.span.line,
                                           offset, guards + guard_atoms_of(caller, cl.ctx))
    return dep


def _expr_id(e: Expr) -> str | None:
    if isinstance(e, LocalRef):
        return e.name
    if isinstance(e, InputRef):
        return e.handle
    if isinstance(e, Arith):
        return _expr_id(e.base)
    return None


def _static_atom(cond: Pred, arm: bool, input_handles: set[str]) -> Atom | None:
    """Best-effort atom for a branch guard used during dependence pruning."""
    if not isinstance(cond, Cmp):
        return None
    lhs, rhs = cond.lhs, cond.rhs
    if isinstance(rhs, Const) and isinstance(rhs.value, int):
        key = _guard_key(lhs, input_handles)
        if key is not None:
            atom = Atom(key, cond.op, rhs.value)
            return atom if arm else atom.negated()
    if isinstance(lhs, Const) and isinstance(lhs.value, int):
        key = _guard_key(rhs, input_handles)
        if key is not None:
            atom = Atom(key, _SWAP[cond.op], lhs.value)
            return atom if arm else atom.negated()
    return None


def _guard_key(e: Expr, input_handles: set[str]) -> tuple | None:
    if isinstance(e, LocalRef):
        return ("input", e.name) if e.name in input_handles else ("local", e.name)
    if isinstance(e, InputRef):
        return ("input", e.handle)
    if isinstance(e, StateRead):
        return ("state", e.fieldname)
    if isinstance(e, AttrRead):
        return ("attr", e.handle, e.attribute)
    if isinstance(e, EventValue):
        return ("evtvalue",)
    return None
