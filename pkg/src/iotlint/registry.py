"""Device capability registry: attribute domains, action effects, conflicts.

The registry is data, not code (a line-oriented text file), so new device
kinds can be added without touching the analyzer:

    capability switch
      attr switch finite on off
      action on sets switch = on
    capability thermostat
      attr heatingSetpoint numeric 50 94 F
      action setHeatingSetpoint sets heatingSetpoint = $1
    conflict switch.switch on off
    complement motion.active motion.inactive

Two distinct values of a binary finite attribute conflict by default;
`conflict` lines extend that to wider domains. `complement` lines pair
events on one attribute (active/inactive, open/closed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

from .ir import EventSpec


class RegistrySyntaxError(Exception):
    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"registry line {lineno}: {message}")


class DuplicateCapability(Exception):
    pass


class InvalidDomain(Exception):
    pass


class UnknownCapability(KeyError):
    pass


class UnknownAttribute(KeyError):
    pass


class UnknownEvent(KeyError):
    pass


@dataclass(frozen=True)
class AttrDomain:
    kind: str  # "finite" | "numeric"
    values: tuple[str, ...] = ()
    lo: int = 0
    hi: int = 0
    unit: str = ""

    def size(self) -> int:
        if self.kind == "finite":
            return len(self.values)
        return self.hi - self.lo + 1

    def contains(self, value: str | int) -> bool:
        if self.kind == "finite":
            return str(value) in self.values
        return isinstance(value, int) and self.lo <= value <= self.hi


@dataclass(frozen=True)
class ActionEffect:
    attribute: str
    constant: str | int | None = None
    from_argument: int | None = None  # 0-based argument index


@dataclass(frozen=True)
class CapabilitySpec:
    capability: str
    attributes: dict[str, AttrDomain] = field(default_factory=dict)
    actions: dict[str, ActionEffect] = field(default_factory=dict)


@dataclass
class CapabilityRegistry:
    capabilities: dict[str, CapabilitySpec] = field(default_factory=dict)
    # (capability, attribute, frozenset({v1, v2})) entries
    conflicts: set[tuple[str, str, frozenset]] = field(default_factory=set)
    # frozenset({(attr, v1), (attr, v2)}) entries
    complements: set[frozenset] = field(default_factory=set)

    # -- lookups -------------------------------------------------------------

    def has_capability(self, name: str | None) -> bool:
        return name in self.capabilities

    def attributes_of(self, capability: str) -> dict[str, AttrDomain]:
        spec = self.capabilities.get(capability)
        if spec is None:
            raise UnknownCapability(capability)
        return spec.attributes

    def domain(self, capability: str, attribute: str) -> AttrDomain:
        attrs = self.attributes_of(capability)
        if attribute not in attrs:
            raise UnknownAttribute(f"{capability}.{attribute}")
        return attrs[attribute]

    def value_in_domain(self, capability: str, attribute: str, value: str | int) -> bool:
        return self.domain(capability, attribute).contains(value)

    def action_effect(self, capability: str, action: str) -> ActionEffect | None:
        spec = self.capabilities.get(capability)
        if spec is None:
            return None
        return spec.actions.get(action)

    def are_conflicting(self, capability: str, attribute: str,
                        v1: str | int, v2: str | int) -> bool:
        """True iff writing v1 and v2 to the attribute are conflicting commands.

        Symmetric and irreflexive. Distinct values of a two-valued finite
        attribute conflict unless the table overrides; wider domains conflict
        only when listed.
        """
        dom = self.domain(capability, attribute)
        a, b = str(v1), str(v2)
        if a == b:
            return False
        if (capability, attribute, frozenset((a, b))) in self.conflicts:
            return True
        return dom.kind == "finite" and len(dom.values) == 2

    def are_complement_events(self, e1: EventSpec, e2: EventSpec) -> bool:
        """True iff the two value-level events are a complement pair."""
        for ev in (e1, e2):
            known = any(ev.attribute in spec.attributes for spec in self.capabilities.values())
            if not known:
                raise UnknownEvent(ev.label())
        if e1.value is None or e2.value is None or e1.attribute != e2.attribute:
            return False
        if e1.value == e2.value:
            return False
        key = frozenset(((e1.attribute, str(e1.value)), (e2.attribute, str(e2.value))))
        return key in self.complements


# ---------------------------------------------------------------------------
# Loader
# ---------------------------------------------------------------------------


def load_registry(source: str) -> CapabilityRegistry:
    reg = CapabilityRegistry()
    current: CapabilitySpec | None = None
    pending_actions: list[tuple[int, CapabilitySpec, str, str, str]] = []

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        head = words[0]

        if head == "capability":
            if len(words) != 2:
                raise RegistrySyntaxError(lineno, "capability <name>")
            name = words[1]
            if name in reg.capabilities:
                raise DuplicateCapability(name)
            current = CapabilitySpec(name)
            reg.capabilities[name] = current

        elif head == "attr":
            if current is None:
                raise RegistrySyntaxError(lineno, "attr outside capability block")
            if len(words) < 3:
                raise RegistrySyntaxError(lineno, "attr <name> finite|numeric ...")
            attr, kind = words[1], words[2]
            if attr in current.attributes:
                raise RegistrySyntaxError(lineno, f"duplicate attribute '{attr}'")
            if kind == "finite":
                values = tuple(words[3:])
                if len(set(values)) < 2:
                    raise InvalidDomain(
                        f"{current.capability}.{attr}: finite domain needs >= 2 distinct values")
                current.attributes[attr] = AttrDomain("finite", values=values)
            elif kind == "numeric":
                if len(words) != 6:
                    raise RegistrySyntaxError(lineno, "attr <name> numeric <min> <max> <unit>")
                lo, hi = int(words[3]), int(words[4])
                if lo > hi:
                    raise InvalidDomain(f"{current.capability}.{attr}: min > max")
                current.attributes[attr] = AttrDomain("numeric", lo=lo, hi=hi, unit=words[5])
            else:
                raise RegistrySyntaxError(lineno, f"unknown domain kind '{kind}'")

        elif head == "action":
            if current is None:
                raise RegistrySyntaxError(lineno, "action outside capability block")
            # action <name> sets <attr> = <value|$N>
            if len(words) != 6 or words[2] != "sets" or words[4] != "=":
                raise RegistrySyntaxError(lineno, "action <name> sets <attr> = <value|$N>")
            pending_actions.append((lineno, current, words[1], words[3], words[5]))

        elif head == "conflict":
            # conflict <cap>.<attr> v1 v2
            if len(words) != 4 or "." not in words[1]:
                raise RegistrySyntaxError(lineno, "conflict <cap>.<attr> v1 v2")
            cap, _, attr = words[1].partition(".")
            v1, v2 = words[2], words[3]
            if v1 == v2:
                raise InvalidDomain(f"conflict values must differ: {v1}")
            reg.conflicts.add((cap, attr, frozenset((v1, v2))))

        elif head == "complement":
            # complement <attr>.<v1> <attr>.<v2>
            if len(words) != 3 or "." not in words[1] or "." not in words[2]:
                raise RegistrySyntaxError(lineno, "complement <attr>.<v1> <attr>.<v2>")
            a1, _, v1 = words[1].partition(".")
            a2, _, v2 = words[2].partition(".")
            if a1 != a2:
                raise InvalidDomain("complement events must share one attribute")
            if v1 == v2:
                raise InvalidDomain("complement events must have distinct values")
            reg.complements.add(frozenset(((a1, v1), (a2, v2))))

        else:
            raise RegistrySyntaxError(lineno, f"unknown directive '{head}'")

    for lineno, spec, action, attr, value in pending_actions:
        if attr not in spec.attributes:
            raise RegistrySyntaxError(
                lineno, f"action '{action}' targets undeclared attribute '{attr}'")
        dom = spec.attributes[attr]
        if value.startswith("$"):
            if dom.kind != "numeric":
                raise InvalidDomain(
                    f"{spec.capability}.{action}: argument-valued actions need numeric attributes")
            spec.actions[action] = ActionEffect(attr, from_argument=int(value[1:]) - 1)
        else:
            lit: str | int = int(value) if value.lstrip("-").isdigit() else value
            if not dom.contains(lit):
                raise InvalidDomain(
                    f"{spec.capability}.{action}: '{value}' outside {attr} domain")
            spec.actions[action] = ActionEffect(attr, constant=lit)

    _check_tables(reg)
    return reg


def _check_tables(reg: CapabilityRegistry) -> None:
    for cap, attr, pair in reg.conflicts:
        if cap not in reg.capabilities or attr not in reg.capabilities[cap].attributes:
            raise InvalidDomain(f"conflict on unknown attribute {cap}.{attr}")
        dom = reg.capabilities[cap].attributes[attr]
        for v in pair:
            if not dom.contains(v) and not (dom.kind == "numeric" and v.lstrip("-").isdigit()
                                            and dom.contains(int(v))):
                raise InvalidDomain(f"conflict value '{v}' outside {cap}.{attr} domain")
    for pair in reg.complements:
        (a1, v1), (a2, v2) = sorted(pair)
        known = False
        for spec in reg.capabilities.values():
            if a1 in spec.attributes and spec.attributes[a1].contains(v1) \
                    and spec.attributes[a2].contains(v2):
                known = True
                break
        if not known:
            raise InvalidDomain(f"complement pair {a1}.{v1}/{a2}.{v2} matches no capability")


def default_registry_text() -> str:
    return resources.files("iotlint.data").joinpath("registry.txt").read_text("utf-8")


def load_default_registry() -> CapabilityRegistry:
    return load_registry(default_registry_text())
