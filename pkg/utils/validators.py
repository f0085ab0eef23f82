"""
Input Validation Utilities
Provides validation functions for network files, model parameters and command line input
"""

import re
import math
from typing import List, Optional, Tuple
from pathlib import Path


class ValidationError(Exception):
    """Custom exception for validation errors"""
    def __init__(self, field: str, value: str, reason: str):
        self.field = field
        self.value = value
        self.reason = reason
        super().__init__(f"Validation failed for '{field}': {reason}")


class NetworkValidator:
    """Validates pipe network data"""

    ID_PATTERN = re.compile(r'^[A-Za-z0-9_\-.]+$')

    @staticmethod
    def validate_identifier(name: str, kind: str = "Identifier") -> Tuple[bool, Optional[str]]:
        """
        Validate a vertex or edge id
        Returns (is_valid, error_message)
        """
        if not name or not name.strip():
            return False, f"{kind} cannot be empty"

        if not NetworkValidator.ID_PATTERN.match(name.strip()):
            return False, f"{kind} '{name}' contains invalid characters (only letters, numbers, -, _, . allowed)"

        return True, None

    @staticmethod
    def validate_length(length: float) -> Tuple[bool, Optional[str]]:
        """
        Validate a pipe length
        Returns (is_valid, error_message)
        """
        try:
            value = float(length)
        except (TypeError, ValueError):
            return False, f"Pipe length must be a number, got '{length}'"

        if not math.isfinite(value) or value <= 0.0:
            return False, f"Pipe length must be positive, got {length}"

        return True, None

    @staticmethod
    def validate_edge(tail: str, head: str, length: float) -> Tuple[bool, Optional[str]]:
        """
        Validate a single directed edge
        Returns (is_valid, error_message)
        """
        for vertex in (tail, head):
            is_valid, error = NetworkValidator.validate_identifier(vertex, "Vertex id")
            if not is_valid:
                return False, error

        if tail == head:
            return False, f"Edge from '{tail}' to itself is a self-loop"

        return NetworkValidator.validate_length(length)


class ParameterValidator:
    """Validates model and discretization parameters"""

    @staticmethod
    def validate_positive(name: str, value: float) -> Tuple[bool, Optional[str]]:
        """
        Validate a strictly positive finite number
        Returns (is_valid, error_message)
        """
        try:
            number = float(value)
        except (TypeError, ValueError):
            return False, f"{name} must be a number, got '{value}'"

        if not math.isfinite(number) or number <= 0.0:
            return False, f"{name} must be positive, got {value}"

        return True, None

    @staticmethod
    def validate_nonnegative(name: str, value: float) -> Tuple[bool, Optional[str]]:
        """
        Validate a nonnegative finite number
        Returns (is_valid, error_message)
        """
        try:
            number = float(value)
        except (TypeError, ValueError):
            return False, f"{name} must be a number, got '{value}'"

        if not math.isfinite(number) or number < 0.0:
            return False, f"{name} must be nonnegative, got {value}"

        return True, None

    @staticmethod
    def validate_degree(degree: int) -> Tuple[bool, Optional[str]]:
        """
        Validate the polynomial degree of the trial space
        Returns (is_valid, error_message)
        """
        if isinstance(degree, bool) or not isinstance(degree, int):
            return False, "Polynomial degree must be an integer"

        if degree < 1:
            return False, f"Polynomial degree must be at least 1, got {degree}"

        return True, None

    @staticmethod
    def validate_breakpoints(breakpoints, length: float) -> Tuple[bool, Optional[str]]:
        """
        Validate mesh breakpoints on [0, length]
        Returns (is_valid, error_message)
        """
        if len(breakpoints) < 2:
            return False, "A mesh needs at least two breakpoints"

        if any(b <= a for a, b in zip(breakpoints[:-1], breakpoints[1:])):
            return False, "Mesh breakpoints must be strictly increasing"

        if breakpoints[0] != 0.0:
            return False, f"Mesh must start at 0, got {breakpoints[0]}"

        if not math.isclose(breakpoints[-1], length, rel_tol=1e-12, abs_tol=1e-14):
            return False, f"Mesh must end at the edge length {length}, got {breakpoints[-1]}"

        return True, None


class InputValidator:
    """Validates command line input"""

    @staticmethod
    def validate_choice(choice: str, valid_choices: List[str]) -> Tuple[bool, Optional[str]]:
        """
        Validate an enumerated option
        Returns (is_valid, error_message)
        """
        if not choice:
            return False, "Choice cannot be empty"

        if choice.strip().lower() in valid_choices:
            return True, None

        return False, f"Choice must be one of: {valid_choices}"

    @staticmethod
    def validate_on_off(response: str) -> Tuple[bool, bool, Optional[str]]:
        """
        Validate an on/off switch
        Returns (is_valid, is_on, error_message)
        """
        response = (response or "").strip().lower()

        if response in ['on', 'yes', 'true', '1']:
            return True, True, None
        elif response in ['off', 'no', 'false', '0']:
            return True, False, None
        else:
            return False, False, "Please use 'on' or 'off'"

    @staticmethod
    def validate_file_path(path: str) -> Tuple[bool, Optional[str]]:
        """
        Validate that an input file exists
        Returns (is_valid, error_message)
        """
        if not path or not str(path).strip():
            return False, "File path cannot be empty"

        path_obj = Path(str(path).strip())

        if not path_obj.exists():
            return False, f"File does not exist: {path}"

        if not path_obj.is_file():
            return False, f"Path is not a file: {path}"

        return True, None
