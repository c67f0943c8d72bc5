import os

# Runtime environment
DEFAULT_SEED = os.getenv("CONTINUUM_SIM_SEED", "0")
LOG_LEVEL = os.getenv("CONTINUUM_SIM_LOG_LEVEL", "INFO")
OUTPUT_DIR = os.getenv("CONTINUUM_SIM_OUTPUT", "results")

# Bundled scenarios (relative to project root)
TOY_SCENARIO_FILE = "data/toy.json"
PAPER_TOPOLOGY_FILE = "data/paper_topology.json"
BUNDLED_SCENARIOS = {
    "toy": TOY_SCENARIO_FILE,
    "paper_topology": PAPER_TOPOLOGY_FILE,
}

# Model weights
DEFAULT_ALPHA = 1.0
DEFAULT_BETA = 1.0
DEFAULT_GAMMA_W = 1.0
DEFAULT_OMEGA = 1.0
DEFAULT_RHO = 100.0
DEFAULT_ETA = 0.001
DEFAULT_PENALTY = 1.0

# Links: bandwidth in Mbit/s, latency in ms
EDGE_LINK_BANDWIDTH = 100
EDGE_LINK_LATENCY = 1
CLOUD_LINK_BANDWIDTH = 1000
CLOUD_LINK_LATENCY = 200
UNCONSTRAINED_MAX_DELAY = 10**9

# Simulation
DEFAULT_HORIZON_MS = 1000

# Power model (watts)
EDGE_POWER_IDLE = 90.0
EDGE_POWER_MAX = 180.0
CLOUD_POWER_IDLE = 300.0
CLOUD_POWER_MAX = 600.0

# Servers specification: (cpu cores, ram MB, storage MB)
CLOUD_CAPACITY = (9000, 9_000_000, 90_000_000)
EDGE_CAPACITIES = {
    "ES1": (8, 16384, 131072),
    "ES2": (8, 16384, 131072),
    "ES3": (8, 8192, 131072),
    "ES4": (8, 8192, 131072),
    "ES5": (12, 16384, 131072),
    "ES6": (12, 16384, 131072),
}

# Where each edge server and user sits in the evaluation topology
EDGE_SITES = {
    "ES1": "BS2",
    "ES2": "BS7",
    "ES3": "BS3",
    "ES4": "BS12",
    "ES5": "BS5",
    "ES6": "BS11",
}
USER_BASE_STATIONS = {
    "us1": "BS4",
    "us2": "BS6",
    "us3": "BS10",
    "us4": "BS4",
    "us5": "BS11",
    "us6": "BS14",
}

# Workload levels: ranges are inclusive [min, max]
WORKLOAD_LEVELS = {
    "low": {
        "cpu_range": (2, 8),
        "ram_range": (2048, 8192),
    },
    "high": {
        "cpu_range": (6, 12),
        "ram_range": (2048, 16384),
    },
}
TASKS_PER_USER = 12
DEADLINE_RANGE = (30, 80)
DATA_SIZE_RANGE = (0.1, 1.0)
ARRIVAL_WINDOW = (0, 500)
PROCESSING_TIME_RANGE = (10, 30)
STORAGE_RANGE = (1024, 4096)

# Experiment design
DEFAULT_REPLICATIONS = 10
CONFIDENCE_LEVEL = 0.95

# Exhaustive oracle guards
OPTIMAL_MAX_TASKS = 8
OPTIMAL_MAX_NODES = 4
