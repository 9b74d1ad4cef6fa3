"""Result tables: aligned text for reading, CSV for round-tripping."""

from __future__ import annotations

import csv
import io
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .datasets import DATASET_ORDER, Dataset
from .errors import AllZero
from .trace import (
    CommandClass,
    StrategyStats,
    format_percent_diff,
    normalize_across_datasets,
    percent_diff,
)

MISSING = "--"


@dataclass
class Table:
    title: str
    columns: list[str]
    rows: list[list[str]] = field(default_factory=list)

    def add(self, row: Sequence) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} cells, table has {len(self.columns)} columns")
        self.rows.append([str(c) for c in row])

    def to_text(self) -> str:
        widths = [max(len(self.columns[i]), *(len(r[i]) for r in self.rows)) for i in range(len(self.columns))]
        fmt = lambda cells: "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths)))  # noqa: E731
        rule = "-" * (sum(widths) + 2 * (len(widths) - 1))
        lines = [self.title, rule, fmt(self.columns), rule, *(fmt(r) for r in self.rows), rule]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        w.writerows(self.rows)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, title: str = "") -> Table:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty CSV")
        return cls(title, rows[0], [list(r) for r in rows[1:]])

    def save(self, directory: str | Path, stem: str) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path, txt_path = directory / f"{stem}.csv", directory / f"{stem}.txt"
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        txt_path.write_text(self.to_text(), encoding="utf-8")
        return csv_path, txt_path


def _ordered(labels: Sequence[str]) -> list[str]:
    return list(dict.fromkeys(labels))


def _datasets_present(keys) -> list[Dataset]:
    present = {d for _, d in keys}
    return [d for d in DATASET_ORDER if d in present]


def results_table(scores: Mapping[tuple[str, Dataset], float], title: str = "Benchmark results") -> Table:
    """Method rows by dataset columns; cells are metric values in percent."""
    datasets = _datasets_present(scores)
    table = Table(title, ["Method", *(d.title for d in datasets)])
    for label in _ordered([m for m, _ in scores]):
        table.add([label, *(f"{scores[(label, d)]:.2f}" if (label, d) in scores else MISSING for d in datasets)])
    return table


def cost_table(costs: Mapping[tuple[str, Dataset], float], title: str = "Average cost per query (USD)") -> Table:
    datasets = _datasets_present(costs)
    table = Table(title, ["Method", *(d.title for d in datasets)])
    for label in _ordered([m for m, _ in costs]):
        table.add([label, *(f"${costs[(label, d)]:.3f}" if (label, d) in costs else MISSING for d in datasets)])
    return table


COMMAND_COLUMNS = [
    (CommandClass.SEARCH, "Search"),
    (CommandClass.EXTRACT, "Extract"),
    (CommandClass.INDEX, "Index"),
    (CommandClass.RETRIEVER_TOOL, "Retriever"),
    (CommandClass.SCRIPT, "Script"),
    (CommandClass.OTHER, "Other"),
]


def command_usage_table(usage: Mapping[str, Mapping[CommandClass, float]], title: str = "Average command usage per query") -> Table:
    """Rows per configuration; with exactly two, a Diff (%) row of the second against the first."""
    table = Table(title, ["Configuration", *(name for _, name in COMMAND_COLUMNS)])
    for label, means in usage.items():
        table.add([label, *(f"{means[c]:.2f}" for c, _ in COMMAND_COLUMNS)])
    if len(usage) == 2:
        base, variant = usage.values()
        cells = []
        for c, _ in COMMAND_COLUMNS:
            cells.append(format_percent_diff(percent_diff(base[c], variant[c])) if base[c] else MISSING)
        table.add(["Diff (%)", *cells])
    return table


def native_search_table(means: Mapping[str, float], title: str = "Native search commands per query") -> Table:
    table = Table(title, ["Configuration", "Native Search"])
    for label, v in means.items():
        table.add([label, f"{v:.2f}"])
    return table


METRICS = ("search_intensity", "read_volume", "code_volume")


def strategy_table(stats: Mapping[tuple[str, Dataset], StrategyStats], title: str = "Strategy metrics (normalized across datasets)") -> Table:
    """Long-format rows (model, metric, dataset, raw, normalized); normalized values sum to 1 per model and metric."""
    table = Table(title, ["Model", "Metric", "Dataset", "Raw", "Normalized"])
    for model in _ordered([m for m, _ in stats]):
        datasets = [d for d in DATASET_ORDER if (model, d) in stats]
        for metric in METRICS:
            raw = {d.title: getattr(stats[(model, d)], metric) for d in datasets}
            try:
                norm = normalize_across_datasets(raw)
            except AllZero:
                norm = None
            for d in datasets:
                # Full precision so the CSV itself sums to 1.
                cell = MISSING if norm is None else repr(norm[d.title])
                table.add([model, metric, d.title, f"{raw[d.title]:.4f}", cell])
    return table
