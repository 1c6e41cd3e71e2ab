from .ast import *  # noqa: F401,F403
from .ast import (
    Actor, Binding, Bool, Cond, End, ExtChoice, ExtT, InBranch, Inact, IntChoice,
    IntT, Msg, Nat, OutBranch, PVar, QMsg, Rec, RecT, Session, SharedEnv, Sort,
    TBranch, TVar, TypingEnv, Var, EMPTY_THETA, value_sort, is_ground,
)
from .macros import MacroError, Prefix, expand_concur, chain_to_process, chain_to_type
from .parser import (
    ParseError, parse_env, parse_process, parse_queue_type, parse_session,
    parse_type, process_guarded, type_guarded,
)
from .printer import (
    print_env, print_process, print_queue, print_queue_type, print_session,
    print_type, print_value,
)
