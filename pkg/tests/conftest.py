import sys
from pathlib import Path

import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from config import PAPER_TOPOLOGY_FILE, TOY_SCENARIO_FILE
from src.scenario import builtin_paper_topology, load_scenario


@pytest.fixture
def toy_scenario():
    return load_scenario(project_root / TOY_SCENARIO_FILE)


@pytest.fixture
def paper_scenario():
    """Bundled evaluation topology file, with its six sample tasks."""
    return load_scenario(project_root / PAPER_TOPOLOGY_FILE)


@pytest.fixture
def paper_topology():
    return builtin_paper_topology(cloud_enabled=True)
