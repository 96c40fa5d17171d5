"""
Scheduling algorithms and a batch simulator for hybrid circuit/packet switches.
"""

from .bff import bff_schedule
from .demand import DemandMatrix, TrafficGenConfig, generate_demand, max_load
from .eclipse import SearchStrategy, SystemParams, best_configuration, eclipse_schedule, utility
from .evaluate import summarize, transmission_time, validate
from .matching import Matching, brute_force_mwm, max_weight_matching
from .twohop import apply_configuration, build_irem, two_hop_schedule
