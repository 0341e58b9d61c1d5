"""Protocol state machines executed by the simulator."""

from .acs import AcsProtocol, UniversalBa, core_wait_time
from .base import ConstantProtocol, Machine, check_param_bounds, wrap_actions
from .binary import BinaryBa, CoinVotingInstance, sync_stage_duration
from .broadcast import ChainBroadcastStage, RbcInstance, RbcProtocol
from .misc import SharedRandomBaStar, fixed_point_label, fixed_point_of

__all__ = [
    "AcsProtocol",
    "BinaryBa",
    "ChainBroadcastStage",
    "CoinVotingInstance",
    "ConstantProtocol",
    "Machine",
    "RbcInstance",
    "RbcProtocol",
    "SharedRandomBaStar",
    "UniversalBa",
    "check_param_bounds",
    "core_wait_time",
    "fixed_point_label",
    "fixed_point_of",
    "sync_stage_duration",
    "wrap_actions",
]
