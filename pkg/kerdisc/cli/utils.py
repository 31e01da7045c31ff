from functools import wraps
from pathlib import Path
from typing import Type, TypeVar
import json
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import click
from pydantic import BaseModel, ValidationError

from ..config import logger
from ..core.schemas import DiscrepancyEstimate
from ..exceptions import DiscrepancyException, InvalidArgumentError, ParseError

ModelT = TypeVar("ModelT", bound=BaseModel)


def describe_validation_error(error: ValidationError) -> str:
    """First offending key and message of a pydantic error, e.g. ``dims: dims must not be empty``."""
    first = error.errors()[0]
    key = ".".join(str(part) for part in first["loc"]) or "<root>"
    return f"{key}: {first['msg']}"


def load_config(path, model: Type[ModelT]) -> ModelT:
    """Read a TOML or JSON config file and validate it against ``model``."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ParseError(f"Cannot read config {path}: {e}")
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(raw.decode("utf-8"))
        else:
            data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ParseError(f"Malformed config {path}: {e}")
    if not isinstance(data, dict):
        raise ParseError(f"Config {path} must hold a table at the top level")
    try:
        config = model.model_validate(data)
    except ValidationError as e:
        raise InvalidArgumentError(f"Invalid config {path}: {describe_validation_error(e)}")
    logger.info(f"Loaded {model.__name__} from {path}")
    return config


def estimate_json(estimate: DiscrepancyEstimate) -> str:
    """One JSON object per estimate; floats use repr, which round-trips every 64-bit value."""
    return json.dumps(estimate.model_dump(mode="json"))


def exit_on_error(command):
    """Map domain errors of a click command onto the documented exit codes."""

    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except DiscrepancyException as e:
            logger.error(f"{command.__name__} failed: {e.detail}")
            click.echo(f"error: {e.detail}", err=True)
            sys.exit(e.exit_code)
        except ValidationError as e:
            detail = describe_validation_error(e)
            logger.error(f"{command.__name__} rejected its arguments: {detail}")
            click.echo(f"error: {detail}", err=True)
            sys.exit(InvalidArgumentError.exit_code)

    return wrapper
