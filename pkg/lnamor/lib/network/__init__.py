from lnamor.lib.network.api import (
    NetworkDocument,
    Reaction,
    ReactionNetwork,
    builtin_model,
    builtin_model_path,
    load_network,
    parse_network,
)
from lnamor.lib.network.model import (
    LnaModel,
    damped_newton,
    jacobian,
    linearize,
    steady_state,
)
