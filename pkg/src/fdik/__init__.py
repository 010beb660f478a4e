"""Forward-dynamics inverse kinematics with a virtually conditioned twin."""
from .dynamics import (DegenerateModelError, apply_inverse_inertia, joint_space_inertia,
                       kinematic_mobility, task_space_mobility)
from .kinematics import forward_kinematics, forward_kinematics_batch, geometric_jacobian
from .model import (ChainModel, JointSpec, LinkInertia, ModelError, builtin_ur10, condition_uniform,
                    condition_virtual_twin, conditioned, load_chain, to_urdf)
from .solver import (BaselineConfig, SolverConfig, SolverState, SolveTrace, TrackingSession,
                     compute_alpha, solve_fd, solve_jt, step_fd, track)
from .spatial import CartesianError, Transform, compose, invert, pose_error, rotation_to_rodrigues

__version__ = "0.1.0"
