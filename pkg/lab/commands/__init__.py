"""
Command pipelines behind the command-line subcommands
"""
from dataclasses import dataclass, field
from typing import Dict


@dataclass
class CommandResult:
    """One-line summary plus exit code of a finished pipeline"""

    summary: str
    exit_code: int = 0
    files: Dict[str, str] = field(default_factory=dict)
