"""
Shared CLI plumbing — error-to-exit-code mapping and option parsing.
"""

from contextlib import contextmanager
from pathlib import Path

import typer
from pydantic import ValidationError
from rich.markup import escape

from tomokit.core.quantum import make_density_matrix
from tomokit.core.states import BatchSpec, StateFamily
from tomokit.errors import InvalidInput, IoError, TomokitError, exit_code_for
from tomokit.utils.display import error
from tomokit.utils.io import read_matrix

EXIT_INPUT = 2


@contextmanager
def exit_on_error():
    """Turn engine errors into the exit-code contract (2 input, 3 numerical)."""
    try:
        yield
    except typer.Exit:
        raise
    except ValidationError as exc:
        error(f"ValidationError: {exc.error_count()} invalid field(s)\n{escape(str(exc))}")
        raise typer.Exit(EXIT_INPUT)
    except TomokitError as exc:
        error(f"{type(exc).__name__}: {escape(str(exc))}")
        raise typer.Exit(exit_code_for(exc))
    except OSError as exc:
        # missing files, permissions, full disks
        error(f"IoError: {escape(str(exc))}")
        raise typer.Exit(EXIT_INPUT)


def parse_value(raw):
    """'2' -> 2, '0.5' -> 0.5, anything else stays a string."""
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    return raw


def parse_params(items):
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise InvalidInput(f"expected KEY=VALUE, got '{item}'")
        params[key.strip()] = parse_value(value.strip())
    return params


def parse_range(raw):
    """'low:high' -> (low, high)."""
    low, sep, high = str(raw).partition(":")
    try:
        if not sep:
            value = float(low)
            return value, value
        return float(low), float(high)
    except ValueError as exc:
        raise InvalidInput(f"expected LOW:HIGH, got '{raw}'") from exc


def parse_ranges(items):
    ranges = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise InvalidInput(f"expected KEY=LOW:HIGH, got '{item}'")
        ranges[key.strip()] = parse_range(value)
    return ranges


def batch_spec(family, params, ranges):
    return BatchSpec(family=StateFamily(family), ranges=ranges, params=params)


def require_file(path, what):
    path = Path(path)
    if not path.is_file():
        raise IoError(f"{what} not found: {path}")
    return path


def load_state_file(path):
    """A validated density matrix from a rho.bin blob."""
    return make_density_matrix(read_matrix(require_file(path, "state file")))
