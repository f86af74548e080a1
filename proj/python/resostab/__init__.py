"""Python interface to the resostab library.

``run`` mirrors the command-line tool: it takes a command name and a config
(a dict or a path to a JSON file) and returns a :class:`Result`.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from ._core import (
    ConfigError,
    DomainError,
    Series,
    convexity_constants,
    homological_solve,
    integrate_restricted,
    majorant_norm,
    nf_recursion,
    poisson_bracket,
    resonant_split,
    run_json,
    sample_norm,
)

SUCCESS, INFEASIBLE, CONFIG_ERROR = 0, 1, 2


@dataclass
class Result:
    exit_code: int
    message: str
    report: dict
    files: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.exit_code == SUCCESS


def run(command, config, base_dir=None, seed=None, preliminary_averaging=None) -> Result:
    if isinstance(config, (str, os.PathLike)):
        path = os.fspath(config)
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        if base_dir is None:
            base_dir = os.path.dirname(os.path.abspath(path))
    else:
        text = json.dumps(config)
    code, message, report, files = run_json(command, text, base_dir or ".", seed, preliminary_averaging)
    return Result(code, message, json.loads(report), dict(files))


__all__ = [
    "CONFIG_ERROR",
    "ConfigError",
    "DomainError",
    "INFEASIBLE",
    "Result",
    "SUCCESS",
    "Series",
    "convexity_constants",
    "homological_solve",
    "integrate_restricted",
    "majorant_norm",
    "nf_recursion",
    "poisson_bracket",
    "resonant_split",
    "run",
    "sample_norm",
]
