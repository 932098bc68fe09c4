"""Universal safety controllers: synthesize once per specification, adapt to any plant."""
from .automata import (AutomatonFormatError, ResourceLimitExceeded, SafetyAutomaton,
                       dsa_accepts_lasso, ltl_to_dsa, product_reach, read_dsa, write_dsa)
from .baseline import standard_synthesis
from .bench import GridWorld, gen_plant, gen_spec, maze
from .logic import (Architecture, LassoWord, LtlSyntaxError, SafetyFragmentViolation,
                    UnknownProposition, eval_lasso, parse_ltl, to_safety_nnf)
from .machines import MooreMachine, bisimilar, minimize, parallel, read_mm, reroot, write_mm
from .membership import MembershipCache, build_game, is_member, solve_safety
from .prophecy import ProphecyAutomaton, expand_transitions, prophecy
from .synthesis import (Composition, InternalInvariantError, UniversalController, Unrealizable,
                        compose, extract_controller, is_consistent, read_uc, step_composition,
                        universal_controller, write_uc)
from .verify import VerifyResult, verify

__version__ = "0.1.0"
