from .model import (
    FLOATING,
    Frame,
    Joint,
    KinematicTree,
    ModelError,
    PRISMATIC,
    REVOLUTE,
    RobotState,
    SpatialInertia,
    load_tree,
    tree_from_dict,
    tree_to_dict,
)
from .algorithms import (
    GRAVITY,
    ForwardKinematics,
    actuated_residual,
    centroidal_momentum_matrix,
    com_position,
    forward_kinematics,
    frame_jacobian,
    full_contact_residual,
    integrate_configuration,
    inverse_dynamics,
    mass_matrix,
    momentum_transform,
    nonlinear_effects,
)

__all__ = [
    "FLOATING",
    "REVOLUTE",
    "PRISMATIC",
    "Frame",
    "Joint",
    "KinematicTree",
    "ModelError",
    "RobotState",
    "SpatialInertia",
    "load_tree",
    "tree_from_dict",
    "tree_to_dict",
    "GRAVITY",
    "ForwardKinematics",
    "actuated_residual",
    "centroidal_momentum_matrix",
    "com_position",
    "forward_kinematics",
    "frame_jacobian",
    "full_contact_residual",
    "integrate_configuration",
    "inverse_dynamics",
    "mass_matrix",
    "momentum_transform",
    "nonlinear_effects",
]
