"""Evaluation reports: per-generator ACC/AP plus the unweighted average,
rendered as JSON and as a one-line-per-model text table."""
import json
import os
from dataclasses import dataclass, field

TOTAL = "Total Avg."


@dataclass(frozen=True)
class ReportRow:
    generator: str
    acc: float
    ap: float
    n: int


@dataclass
class EvalReport:
    rows: list
    provenance: dict = field(default_factory=dict)

    @property
    def total_acc(self):
        return sum(r.acc for r in self.rows) / len(self.rows) if self.rows else float("nan")

    @property
    def total_ap(self):
        return sum(r.ap for r in self.rows) / len(self.rows) if self.rows else float("nan")

    def row(self, generator):
        for r in self.rows:
            if r.generator == generator:
                return r
        raise KeyError(generator)

    def to_dict(self):
        return {
            "rows": [
                {"generator": r.generator, "acc": r.acc, "ap": r.ap, "n": r.n} for r in self.rows
            ] + [{"generator": TOTAL, "acc": self.total_acc, "ap": self.total_ap,
                  "n": sum(r.n for r in self.rows)}],
            "provenance": self.provenance,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, d):
        rows = [ReportRow(r["generator"], r["acc"], r["ap"], r["n"])
                for r in d["rows"] if r["generator"] != TOTAL]
        return cls(rows, d.get("provenance", {}))

    def to_text(self, name="DeCoF"):
        """Percentages in the layout: one column pair (ACC, AP) per generator
        followed by the overall average."""
        groups = [r.generator for r in self.rows] + [TOTAL]
        values = [(r.acc, r.ap) for r in self.rows] + [(self.total_acc, self.total_ap)]
        widths = [max(len(g), 15) for g in groups]
        name_w = max(len(name), 8)
        line1 = " " * name_w + " | " + " | ".join(g.center(w) for g, w in zip(groups, widths))
        line2 = "Method".ljust(name_w) + " | " + " | ".join(
            ("ACC".rjust(w // 2) + "AP".rjust(w - w // 2)) for w in widths)
        line3 = name.ljust(name_w) + " | " + " | ".join(
            (f"{100 * a:.2f}".rjust(w // 2) + f"{100 * p:.2f}".rjust(w - w // 2))
            for (a, p), w in zip(values, widths))
        rule = "-" * len(line1)
        return "\n".join([line1, line2, rule, line3]) + "\n"


def write_report(report, out_dir, stem, name="DeCoF"):
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, stem + ".json")
    text_path = os.path.join(out_dir, stem + ".txt")
    with open(json_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_text(name))
    return json_path, text_path
