"""Numerical certification of adapted complex tubes over pseudo-Hermitian manifolds."""

__version__ = "0.1.0"

from .contact import DegenerateContact, ManifoldSpec, SingularContact, reeb_field, validate_spec  # noqa: E402
from .dsl import parse  # noqa: E402
from .registry import get_example, list_examples  # noqa: E402
from .sympl import SympPoint  # noqa: E402
from .tube import HolomorphyFailure, build_tube_by_flow, build_tube_closed_form  # noqa: E402

__all__ = [
    "__version__",
    "DegenerateContact",
    "HolomorphyFailure",
    "ManifoldSpec",
    "SingularContact",
    "SympPoint",
    "build_tube_by_flow",
    "build_tube_closed_form",
    "get_example",
    "list_examples",
    "parse",
    "reeb_field",
    "validate_spec",
]
