"""
Run manifests: the full command configuration stored next to every output,
enough to replay the run with `eigenscale rerun`.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Union

from errors import InvalidSpecError

logger = logging.getLogger('RunManifest')

VERSION = "1.0.0"
MANIFEST_SUFFIX = '.manifest.json'


@dataclass
class RunManifest:
    """What was run, with which arguments, and what it wrote"""
    command: str
    args: Dict[str, Any]
    version: str = VERSION
    created: str = field(default_factory=lambda: datetime.now().isoformat(timespec='seconds'))
    wall_time_s: float = 0.0
    outputs: List[str] = field(default_factory=list)


def manifest_path(output: Union[str, Path]) -> Path:
    return Path(f"{output}{MANIFEST_SUFFIX}")


def save_manifest(manifest: RunManifest, path: Union[str, Path]) -> Path:
    """Write through a temporary file and rename into place"""
    path = Path(path)
    tmp = path.with_name(path.name + '.tmp')
    with open(tmp, 'w') as f:
        json.dump(asdict(manifest), f, indent=2, sort_keys=True)
        f.write('\n')
    os.replace(tmp, path)
    logger.info(f"💾 Saved manifest {path}")
    return path


def load_manifest(path: Union[str, Path]) -> RunManifest:
    path = Path(path)
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise InvalidSpecError(f"manifest {path} not found")
    except json.JSONDecodeError as e:
        logger.error(f"❌ JSON decode error in manifest {path}: {e}")
        raise InvalidSpecError(f"manifest {path} is not valid JSON: {e}")

    if not isinstance(data, dict) or 'command' not in data or 'args' not in data:
        raise InvalidSpecError(f"manifest {path} lacks 'command' / 'args'")
    if data.get('version') != VERSION:
        logger.warning(f"⚠️ Manifest {path} was written by version {data.get('version')}, "
                       f"replaying with {VERSION}")

    known = {k: data[k] for k in ('command', 'args', 'version', 'created', 'wall_time_s', 'outputs') if k in data}
    logger.info(f"✅ Loaded manifest for '{known['command']}' from {path}")
    return RunManifest(**known)
