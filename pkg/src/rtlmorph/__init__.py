"""rtlmorph: semantics-preserving RTL metamorphosis and optimizer evaluation.

Four mutation strategies (logic rewriting, data-path cascading, FSM
chaining/splitting, clock-domain splitting) produce structurally more
complex but behaviorally equivalent designs; equivalence oracles verify
them; the harness compares how optimizers fare on originals vs. mutants
using normalized synthesis metrics.
"""

__version__ = "0.1.0"

from .parser import parse, parse_file
from .emitter import emit, emit_expr, emit_module
from .elaborate import Diagnostic, ElaboratedDesign, elaborate, lint_synthesizable
from .sim import BranchCounters, SimInstance, Stimulus, Trace, instantiate, run

__all__ = [
    "parse", "parse_file", "emit", "emit_expr", "emit_module",
    "elaborate", "lint_synthesizable", "Diagnostic", "ElaboratedDesign",
    "instantiate", "run", "SimInstance", "Stimulus", "Trace", "BranchCounters",
    "__version__",
]
