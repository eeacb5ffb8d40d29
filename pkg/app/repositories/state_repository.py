"""
State Spec Repository
Loads and saves StateSpec JSON documents (see State_Spec_Schema_Description).
"""
import json
import logging
import os

from pydantic import ValidationError

from app.errors import UsageError
from app.models.state_models import StateSpec

LOGGER = logging.getLogger(__name__)


def load_state_spec(path: str) -> StateSpec:
    """
    Parse and validate a state document.

    Raises:
        UsageError: missing file, invalid JSON, or a document failing validation
    """
    if not os.path.exists(path):
        raise UsageError(f"state spec not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as e:
            raise UsageError(f"{path} is not valid JSON: {e}") from e
    try:
        spec = StateSpec.model_validate(document)
    except ValidationError as e:
        raise UsageError(f"{path}: invalid state spec: {e.errors()[0]['msg']}") from e
    LOGGER.info("[States] loaded %s spec from %s", spec.kind.value, path)
    return spec


def save_state_spec(spec: StateSpec, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(spec.model_dump(mode="json"), f, indent=2, sort_keys=True)
        f.write("\n")
    return path
