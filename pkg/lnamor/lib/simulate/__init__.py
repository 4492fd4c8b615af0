from .integrate import integrate
from .moments import TrajectoryBundle, propagate_moments, trajectory_header, trajectory_rows
from .norms import dc_gain, difference, frequency_response, h2_norm, hinf_norm
from .sampling import SampleStatistics, euler_maruyama

__all__ = [
    "SampleStatistics",
    "TrajectoryBundle",
    "dc_gain",
    "difference",
    "euler_maruyama",
    "frequency_response",
    "h2_norm",
    "hinf_norm",
    "integrate",
    "propagate_moments",
    "trajectory_header",
    "trajectory_rows",
]
