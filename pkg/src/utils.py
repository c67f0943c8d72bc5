import json
import logging
from pathlib import Path
from typing import Any, Iterable, Union

from config import BUNDLED_SCENARIOS

logger = logging.getLogger(__name__)


def get_project_root() -> Path:
    """Get the project root directory."""
    return Path(__file__).parent.parent


def resolve_scenario_path(name_or_path: Union[str, Path]) -> Path:
    """Map a bundled scenario name ('toy', 'paper_topology') to its file, else treat it as a path."""
    key = str(name_or_path)
    if key in BUNDLED_SCENARIOS:
        return get_project_root() / BUNDLED_SCENARIOS[key]
    return Path(name_or_path)


def load_json(filepath: Union[str, Path]) -> Any:
    with open(filepath, "r") as f:
        return json.load(f)


def save_json(data: Any, filepath: Union[str, Path]):
    """Write `data` as indented JSON, creating parent directories."""
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def parse_override(text: str) -> tuple[list[str], Any]:
    """
    Split 'weights.rho=50' into (['weights', 'rho'], 50).

    The value is parsed as JSON when possible ('50', '[1, 2]', 'true'),
    otherwise kept as a plain string.
    """
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ValueError(f"override '{text}' must look like key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def _index(container, part: str):
    if isinstance(container, list):
        try:
            return int(part)
        except ValueError:
            raise ValueError(f"'{part}' is not a list index") from None
    return part


def apply_overrides(document: dict, overrides: Iterable[str]) -> dict:
    """
    Return a copy of `document` with every dotted key=value override applied.

    List elements are addressed by index ('nodes.0.power_max=200'). The final
    key may be new; intermediate keys must exist.
    """
    result = json.loads(json.dumps(document))
    for text in overrides:
        path, value = parse_override(text)
        target = result
        for part in path[:-1]:
            try:
                target = target[_index(target, part)]
            except (KeyError, IndexError, TypeError):
                raise ValueError(f"override '{text}': no such key '{part}'") from None
        leaf = _index(target, path[-1])
        if isinstance(target, list) and not 0 <= leaf < len(target):
            raise ValueError(f"override '{text}': index {leaf} out of range")
        if not isinstance(target, (dict, list)):
            raise ValueError(f"override '{text}': cannot set a field on a scalar")
        target[leaf] = value
        logger.debug(f"Override {'.'.join(path)} = {value!r}")
    return result


def split_overrides(overrides: Iterable[str], prefix: str) -> tuple[list[str], list[str]]:
    """Separate overrides starting with `prefix.` (prefix stripped) from the rest."""
    matching, rest = [], []
    for text in overrides:
        if text.startswith(prefix + "."):
            matching.append(text[len(prefix) + 1:])
        else:
            rest.append(text)
    return matching, rest
