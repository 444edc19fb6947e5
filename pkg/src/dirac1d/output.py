"""CSV tables with '#' metadata headers and flat key=value run manifests."""
from __future__ import annotations

import csv
import platform
from pathlib import Path

import numpy as np

from . import __version__


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if not np.isfinite(v) else f"{float(v):.12e}"
    if v is None:
        return ""
    return str(v)


class RunWriter:
    def __init__(self, directory: str | Path, command: str, config: dict[str, str]):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.config = config
        self.results: dict[str, str] = {}
        self.checks: dict[str, bool] = {}
        self.tolerances: dict[str, str] = {}
        self.files: list[str] = []

    def _meta_lines(self) -> list[str]:
        lines = [f"# dirac1d {__version__} command={self.command}"]
        lines += [f"# {k} = {v}" for k, v in self.config.items()]
        return lines

    def table(self, name: str, columns: list[str], rows, note: str = "") -> Path:
        path = self.dir / f"{name}.csv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            for line in self._meta_lines():
                fh.write(line + "\n")
            if note:
                fh.write(f"# {note}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([fmt(x) for x in row])
        self.files.append(path.name)
        return path

    def result(self, key: str, value) -> None:
        self.results[key] = fmt(value)

    def check(self, key: str, passed: bool, tolerance: str) -> bool:
        self.checks[key] = bool(passed)
        self.tolerances[key] = tolerance
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def manifest(self, warnings: list[str] | None = None) -> Path:
        path = self.dir / "manifest.txt"
        lines = [
            f"command = {self.command}",
            f"code_version = {__version__}",
            f"python = {platform.python_version()}",
            f"numpy = {np.__version__}",
        ]
        lines += [f"config.{k} = {v}" for k, v in self.config.items()]
        lines += [f"tolerance.{k} = {v}" for k, v in self.tolerances.items()]
        lines += [f"result.{k} = {v}" for k, v in self.results.items()]
        lines += [f"check.{k} = {'PASS' if v else 'FAIL'}" for k, v in self.checks.items()]
        lines += [f"warning.{i} = {w}" for i, w in enumerate(warnings or [])]
        lines += [f"files = {','.join(self.files)}", f"status = {'PASS' if self.passed else 'FAIL'}"]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path
