"""Access to the fixtures shipped inside the package."""

from __future__ import annotations

import json
from pathlib import Path

from .armodel import load_markov
from .biaslab import Instance
from .constraints import compile_constraint, parse_constraint


def fixture_path(*parts: str) -> Path:
    return Path(__file__).parent.joinpath("fixtures", *parts)


def corpus() -> list[Path]:
    """The DIMACS corpus, sorted by file name."""
    return sorted(fixture_path("cnf").glob("*.cnf"))


def load_instances(manifest: str | Path | None = None) -> list[Instance]:
    manifest = Path(manifest) if manifest else fixture_path("instances.json")
    base = manifest.parent
    out = []
    for entry in json.loads(manifest.read_text())["instances"]:
        model = load_markov((base / entry["model"]).read_text())
        con = parse_constraint((base / entry["constraint"]).read_text(), model.vocab)
        out.append(Instance(entry["name"], model, compile_constraint(con, model.vocab), entry.get("horizon")))
    return out
