"""Territorial carbon footprint of digital-agriculture deployments."""
from .allocation import (
    AllocationEntry, AllocationProfile, CoverageGapError, allocation_table,
    mass_function, raw_weight,
)
from .catalog import (
    Catalog, DeviceEntry, DeviceKind, DeviceSpec, TechnologicalSystem,
    load_catalog, validate_catalog,
)
from .distribution import (
    CoarseBinSpec, FarmSizeDistribution, SizeUnit, average_size, densify,
    total_farms, total_size,
)
from .impact import (
    FR_GRID, AssessmentResult, GridIntensity, assess, assess_average_baseline,
    efficiency_curve, embodied_annual, thermal_baseline, use_annual,
)
from .inventory import (
    Inventory, InventoryRecord, annual_energy_nonrobotic, annual_energy_robotic,
    build_inventory, derive_capacity, device_quantity, robot_total_work_time,
)
from .kernels import BACKEND
from .sensitivity import PerturbationSpec, SensitivityResult, run_sensitivity, summarize

__version__ = "0.1.0"
