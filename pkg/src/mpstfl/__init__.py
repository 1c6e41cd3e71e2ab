"""Asynchronous multiparty session types with multi-peer choices.

Parse processes, sessions and types, type-check sessions against typing
environments, and model-check safety, deadlock-freedom and liveness of both.
"""

__version__ = "0.1.0"

from .congruence import (  # noqa: E402
    OpenTermError, canon_queue, env_congruent, session_congruent, unfold_process, unfold_type,
)
from .envcheck import (  # noqa: E402
    check_env, check_env_deadlock, check_env_liveness, check_env_safety, env_successors, explore_env,
)
from .flgen import gen_centralized, gen_decentralized, gen_multimodel_upgrade  # noqa: E402
from .lts import Verdict  # noqa: E402
from .semantics import apply_subst, simulate, successors  # noqa: E402
from .sessioncheck import (  # noqa: E402
    check_session_deadlock, check_session_liveness, check_session_property, check_session_safety,
    cosimulate, explore_session, transfer_check,
)
from .subtyping import subtype, subtype_env, subtype_pair  # noqa: E402
from .syntax import (  # noqa: E402
    ParseError, expand_concur, parse_env, parse_process, parse_session, parse_type, print_env,
    print_process, print_session, print_type,
)
from .typecheck import TypeCheckError, check_process, check_queue, check_session, check_value  # noqa: E402
