"""Passive sit-to-stand exoskeleton design and simulation toolkit."""

__version__ = "0.1.0"

from .anthro import AnthroInput, BodyModel, SegmentParams, build_body_model
from .dynamics import (ComPoint, JointState, bias_forces, forward_dynamics,
                       inverse_dynamics, mass_matrix, sesc_com)
from .mechanism import (ActuatorPlacement, DesignVector, EngagementAngles, GasSpring,
                        WireTensions, actuator_torque, circuit_length_p1,
                        circuit_length_p2, coupling_map_sitting, coupling_map_standing,
                        knee_moment_sitting, knee_moment_standing, spring_force)
from .sts_sim import (ExoModel, Stage, StageState, TransitionTrace, check_engagement,
                      combined_com, feasibility_report, simulate_transition)
from .optimizer import (Candidate, NormConstants, ObjectiveVector, OptimizerConfig,
                        ParetoFront, evaluate_candidate, nsga2_run, place_actuator)
from .controller import (ControlGains, PressureController, PressureFrame,
                         VelocityCommand, compute_cop, detect_backward,
                         map_to_velocity, simulate_drive)
