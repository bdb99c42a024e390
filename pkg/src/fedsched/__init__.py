"""Latency-aware device scheduling for federated learning over a shared uplink."""
from .allocator import AllocationResult, optimal_allocation, required_gamma
from .bound import BoundParams, objective_C
from .datagen import Dataset, PartitionSpec, partition
from .fltrain import Federation, TrainingConfig, TrainingHistory, run_training
from .harness import ExperimentConfig, load_config, run, seed_streams, sweep
from .models import make_model
from .numeric import Branch, lambert_w
from .scheduler import PolicySpec, schedule
from .wireless import DeviceProfile, RadioConfig, RoundState

__all__ = [
    "AllocationResult", "BoundParams", "Branch", "Dataset", "DeviceProfile", "ExperimentConfig",
    "Federation", "PartitionSpec", "PolicySpec", "RadioConfig", "RoundState", "TrainingConfig",
    "TrainingHistory", "lambert_w", "load_config", "make_model", "objective_C",
    "optimal_allocation", "partition", "required_gamma", "run", "run_training", "schedule",
    "seed_streams", "sweep",
]
