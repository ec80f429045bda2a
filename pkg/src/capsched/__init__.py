"""capsched: scheduling of real-time task chains on capacitor-powered,
intermittently-charged devices.

Provides a capacitor/harvesting energy model, a deterministic simulator of
five scheduling policies for mixed preemptible/non-preemptible task chains,
a worst-case response-time analysis with charging demand, a random taskset
generator, and a CLI for the bundled experiments.
"""

from .energy import (
    CapacitorConfig,
    CapacitorState,
    ChargeEstimator,
    ChargingStarvedError,
    HarvestProfile,
    charging_demand,
    energy_of_voltage,
    estimate_rate,
    harvesting_time,
    integrate,
    min_capacitor,
    threshold_voltage,
    voltage_of_energy,
)
from .workload import (
    ChainSpec,
    GenConfig,
    TaskSpec,
    Taskset,
    chain_aggregates,
    generate_taskset,
    load_taskset,
    rm_priorities,
    save_taskset,
    uunifast,
    validate,
)
from .analysis import (
    AnalyzedChain,
    analyze_taskset,
    charging_utilization,
    taskset_schedulable,
)
from .simulator import (
    POLICIES,
    SimConfig,
    SimMetrics,
    SimResult,
    run,
)

__version__ = "0.1.0"
