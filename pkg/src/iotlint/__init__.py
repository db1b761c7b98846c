"""iotlint: static safety analysis for event-driven IoT automation apps.

Pipeline: parse the app IR, extract a finite state model by path-sensitive
symbolic execution with property abstraction, compose co-installed apps into
a union model, and check general (S.1-S.5) and app-specific (P.1-P.30)
properties with an explicit-state CTL checker. Emits counterexample traces,
Graphviz DOT and SMV code.
"""

from .ir import AppIR, Diagnostic, validate_ir
from .parser import parse_app, print_app, IrSyntaxError, DuplicateDefinition, UnknownReference
from .registry import CapabilityRegistry, load_registry, load_default_registry

__all__ = [
    "AppIR",
    "CapabilityRegistry",
    "Diagnostic",
    "DuplicateDefinition",
    "IrSyntaxError",
    "UnknownReference",
    "load_default_registry",
    "load_registry",
    "parse_app",
    "print_app",
    "validate_ir",
]

__version__ = "0.1.0"
