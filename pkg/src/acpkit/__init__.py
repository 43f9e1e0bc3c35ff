"""acpkit: an executable process-algebra kernel.

Parse process expressions, rewrite them to head-normal form, derive bounded
labeled transition systems, and verify algebraic laws by bisimulation.
"""

__version__ = "0.1.0"

from .terms import (  # noqa: F401
    ActionLabel, Binder, Gamma, Outcome, Pred, ProcessEnv, Term, Value,
    free_vars, validate_env,
)
from .parser import (  # noqa: F401
    ParseError, SourceSpec, parse, parse_bindings_table, parse_expr,
    parse_gamma_table, render,
)
from .rewrite import (  # noqa: F401
    ALL_AXIOMS, Axiom, NormalForm, RewriteTrace, apply_axiom, disambiguate,
    disambiguate_step, eliminate_negation, expand_iteration, normalize,
    replay,
)
from .semantics import (  # noqa: F401
    Lts, StepBudget, completed_traces, derive, encapsulate, flow_value, run,
)
from .bisim import (  # noqa: F401
    BisimResult, bisimilar, check_axiom_schema, trace_equivalent,
)
