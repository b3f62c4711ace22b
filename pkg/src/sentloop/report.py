"""Static HTML/Markdown report assembled from earlier run outputs."""

from __future__ import annotations

import csv
import hashlib
import html
import json
import os
import re
from datetime import datetime, timezone
from pathlib import Path

from sentloop import __version__
from sentloop.errors import DataError

REQUIRED = ("fit.json", "parties.csv", "diagram.csv")
_STAMP = re.compile(r"^.*generated-at.*$\n?", re.MULTILINE)


class MissingInputs(DataError):
    def __init__(self, missing: list[str]):
        super().__init__("missing report inputs: " + ", ".join(missing))
        self.missing = missing


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


def content_hash(text: str) -> str:
    """SHA-256 of a report with its generation timestamp line removed."""
    return hashlib.sha256(_STAMP.sub("", text).encode("utf-8")).hexdigest()


def _rows(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _inline_svg(path: Path) -> str:
    text = path.read_text(encoding="utf-8")
    start = text.find("<svg")
    return text[start:] if start >= 0 else ""


def _table(header: list[str], rows: list[list[object]], markdown: bool) -> str:
    if markdown:
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    head = "".join(f"<th>{html.escape(h)}</th>" for h in header)
    body = "".join("<tr>" + "".join(f"<td>{html.escape(str(c))}</td>" for c in row) + "</tr>" for row in rows)
    return f"<table><thead><tr>{head}</tr></thead><tbody>{body}</tbody></table>\n"


def _num(x) -> str:
    return "n/a" if x is None else f"{float(x):.4g}"


def build_report(source: Path, markdown: bool = False) -> str:
    source = Path(source)
    missing = [name for name in REQUIRED if not (source / name).is_file()]
    if missing:
        raise MissingInputs(missing)

    fit = json.loads((source / "fit.json").read_text(encoding="utf-8"))
    parties = _rows(source / "parties.csv")
    diagram = _rows(source / "diagram.csv")
    counts: dict[str, int] = {}
    for row in diagram:
        counts[row["class"]] = counts.get(row["class"], 0) + 1

    sections: list[tuple[str, str]] = []
    fit_rows = [
        ["alpha (persistence)", _num(fit["alpha"])],
        ["beta (positive engagement)", _num(fit["beta"])],
        ["gamma (negative engagement)", _num(fit["gamma"])],
        ["intercept", _num(fit.get("intercept"))],
        ["observations", fit["n_obs"]],
        ["condition number", _num(fit["condition_number"])],
        ["RMSE, model", _num(fit["rmse_model"])],
        ["RMSE, persistence baseline", _num(fit["rmse_naive"])],
    ]
    body = _table(["quantity", "value"], fit_rows, markdown)
    diag_rows = [[name, _num(fit["pearson"][name]), _num(fit["vif"][name])] for name in fit["pearson"]]
    body += _table(["regressor", "Pearson r with next S", "VIF"], diag_rows, markdown)
    sections.append(("Sentiment feedback fit", body + _figure(source, "predictions.svg")))

    party_rows = [[p["party"], p["n"], _num(p["mean_z"]), _num(p["median_z"]), _num(p["iqr_z"])] for p in parties]
    body = _table(["party", "n", "mean z", "median z", "IQR z"], party_rows, markdown)
    if (source / "roles.csv").is_file():
        roles = _rows(source / "roles.csv")
        body += _table(
            ["role", "n", "mean z", "median z", "IQR z"],
            [[r["role"], r["n"], _num(r["mean_z"]), _num(r["median_z"]), _num(r["iqr_z"])] for r in roles],
            markdown,
        )
    sections.append(("Feedback asymmetry by party", body + _figure(source, "parties.svg")))

    count_rows = [[cls, n] for cls, n in sorted(counts.items())]
    body = _table(["class", "cells"], count_rows, markdown)
    sections.append(("Closed-loop stability diagram", body + _figure(source, "diagram.svg")))

    if (source / "equilibrium.json").is_file():
        eq = json.loads((source / "equilibrium.json").read_text(encoding="utf-8"))
        rows = [
            ["class", eq["class"]],
            ["k", _num(eq["k"])],
            ["c", _num(eq["c"])],
            ["equilibrium", f"{eq['equilibrium']['kind']} {_num(eq['equilibrium']['value'])}"],
            ["terminal", eq["terminal"]["kind"]],
            ["cycle period", eq["cycle"]["period"] if eq.get("cycle") else "none"],
        ]
        body = _table(["quantity", "value"], rows, markdown)
        sections.append(("Closed-loop simulation", body + _figure(source, "trace.svg")))

    stamp = _timestamp()
    if markdown:
        out = [f"# sentloop report\n\n<!-- generated-at: {stamp} -->\n"]
        out += [f"\n## {title}\n\n{body}" for title, body in sections]
        return "".join(out)
    parts = [
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n",
        f"<meta name=\"generator\" content=\"sentloop {__version__}\">\n",
        f"<meta name=\"generated-at\" content=\"{stamp}\">\n",
        "<title>sentloop report</title>\n<style>body{font-family:sans-serif;max-width:60em;margin:auto}"
        "table{border-collapse:collapse;margin:0.5em 0}td,th{border:1px solid #ccc;padding:2px 8px}</style>\n",
        "</head><body>\n<h1>sentloop report</h1>\n",
    ]
    for title, body in sections:
        parts.append(f"<section><h2>{html.escape(title)}</h2>\n{body}</section>\n")
    parts.append("</body></html>\n")
    return "".join(parts)


def _figure(source: Path, name: str) -> str:
    path = source / name
    if not path.is_file():
        return ""
    # markdown renderers pass raw HTML through, so both formats inline the SVG
    return f"\n<figure>{_inline_svg(path)}</figure>\n"
