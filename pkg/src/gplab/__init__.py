"""Verification laboratory for Gross-Pitaevskii hierarchy uniqueness machinery."""

from __future__ import annotations

__version__ = "0.1.0"

from ._backend import NAME as BACKEND

__all__ = ["BACKEND", "__version__"]
