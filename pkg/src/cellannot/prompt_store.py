"""Loader for the versioned prompt templates shipped with the package.

Templates live under ``cellannot/prompts/*.txt`` and use ``str.format``
placeholders. They are frozen under test: workflows depend on their exact
wording for determinism with recorded mock scripts.
"""
from __future__ import annotations

from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=None)
def load_prompt(name: str) -> str:
    """Return the template text for ``prompts/<name>.txt``."""
    return (resources.files("cellannot") / "prompts" / f"{name}.txt").read_text(encoding="utf-8")
