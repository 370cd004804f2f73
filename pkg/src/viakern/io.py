"""Species parameter files, observed series, and report/table/SVG writers.

Input formats (UTF-8, LF):

* scalars: ``key = value`` lines, ``#`` comments. Required keys are
  ``A alpha beta M pi lambda_min lambda_max sexes``; optional keys are
  ``name``, ``recruit_sex_split`` and ``ssb_convention``.
* per-age: CSV with header ``age,weight_gr,maturity,fishing_mortality``,
  preceded by a ``sex`` column (``male``/``female``) for two-sex species.
  Decimal separator is ``.``.
* series: CSV with header ``year,value_tons``.

Writers are deterministic: identical inputs give identical bytes.
"""
from __future__ import annotations

import csv
import io as _io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .ageclass import AgeClassParams, SSBConvention, ThresholdReport, TwoSexParams
from .viability import SliceGrid


class ParseError(ValueError):
    """Malformed input; ``line`` is 1-based within the parsed text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


REQUIRED_SCALARS = ("A", "alpha", "beta", "M", "pi", "lambda_min", "lambda_max", "sexes")
OPTIONAL_SCALARS = ("name", "recruit_sex_split", "ssb_convention")
_INT_KEYS = {"A", "pi", "sexes"}
_STR_KEYS = {"name", "ssb_convention"}

AGE_COLUMNS = ("age", "weight_gr", "maturity", "fishing_mortality")
SERIES_KINDS = ("landings", "ssb")


def _number(text: str, key: str, line: int, integer: bool = False):
    try:
        if integer:
            value = float(text)
            if not value.is_integer():
                raise ValueError
            return int(value)
        value = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {key} value {text!r} as a number", line) from None
    if not math.isfinite(value):
        raise ParseError(f"{key} must be finite", line)
    return value


def parse_scalars(text: str) -> dict:
    out: dict = {}
    where: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in REQUIRED_SCALARS and key not in OPTIONAL_SCALARS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", lineno)
        if key in _STR_KEYS:
            out[key] = value
        else:
            out[key] = _number(value, key, lineno, integer=key in _INT_KEYS)
        where[key] = lineno
    missing = [k for k in REQUIRED_SCALARS if k not in out]
    if missing:
        raise ParseError(f"missing required key {missing[0]!r}")
    if out["pi"] not in (0, 1):
        raise ParseError("pi must be 0 or 1", where["pi"])
    if out["sexes"] not in (1, 2):
        raise ParseError("sexes must be 1 or 2", where["sexes"])
    if out["A"] < 2:
        raise ParseError("A must be at least 2", where["A"])
    if out["lambda_min"] < 0:
        raise ParseError("lambda_min must be nonnegative", where["lambda_min"])
    if out["lambda_min"] > out["lambda_max"]:
        raise ParseError("lambda_min exceeds lambda_max", where["lambda_max"])
    for key in ("alpha", "beta"):
        if out[key] < 0:
            raise ParseError(f"{key} must be nonnegative", where[key])
    if out["M"] <= 0:
        raise ParseError("M must be positive", where["M"])
    if "recruit_sex_split" in out and not 0 <= out["recruit_sex_split"] <= 1:
        raise ParseError("recruit_sex_split must lie in [0, 1]", where["recruit_sex_split"])
    if "ssb_convention" in out:
        try:
            SSBConvention(out["ssb_convention"])
        except ValueError:
            raise ParseError(f"unknown ssb_convention {out['ssb_convention']!r}", where["ssb_convention"]) from None
    return out


def write_scalars(scalars: dict) -> str:
    lines = []
    for key in OPTIONAL_SCALARS[:1] + REQUIRED_SCALARS + OPTIONAL_SCALARS[1:]:
        if key in scalars:
            value = scalars[key]
            lines.append(f"{key} = {value if isinstance(value, str) else repr(value)}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class AgeTable:
    age: np.ndarray
    weight_gr: np.ndarray
    maturity: np.ndarray
    fishing_mortality: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, AgeTable):
            return NotImplemented
        return all(np.array_equal(getattr(self, c), getattr(other, c)) for c in AGE_COLUMNS)


def parse_per_age(text: str, sexes: int = 1, A: int | None = None) -> dict[str, AgeTable]:
    """Parse a per-age table; keys are ``"all"`` (one sex) or ``"male"``/``"female"``."""
    if sexes not in (1, 2):
        raise ParseError("sexes must be 1 or 2")
    header = (("sex",) if sexes == 2 else ()) + AGE_COLUMNS
    reader = csv.reader(_io.StringIO(text))
    rows = [(n, r) for n, r in enumerate(reader, start=1) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty per-age file")
    first_line, first = rows[0]
    if tuple(c.strip() for c in first) != header:
        raise ParseError(f"expected header {','.join(header)}", first_line)
    groups: dict[str, list[tuple[int, list[float]]]] = {}
    for lineno, row in rows[1:]:
        cells = [c.strip() for c in row]
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(cells)}", lineno)
        sex = "all"
        if sexes == 2:
            sex, cells = cells[0], cells[1:]
            if sex not in ("male", "female"):
                raise ParseError(f"sex must be male or female, got {sex!r}", lineno)
        age = _number(cells[0], "age", lineno, integer=True)
        w = _number(cells[1], "weight_gr", lineno)
        g = _number(cells[2], "maturity", lineno)
        F = _number(cells[3], "fishing_mortality", lineno)
        if w <= 0:
            raise ParseError("weight must be positive", lineno)
        if not 0 <= g <= 1:
            raise ParseError(f"maturity {g} outside [0, 1]", lineno)
        if F < 0:
            raise ParseError("fishing mortality must be nonnegative", lineno)
        group = groups.setdefault(sex, [])
        expected = len(group) + 1
        if age != expected:
            kind = "duplicate" if age < expected else "gap in"
            raise ParseError(f"{kind} ages: expected age {expected}, got {age}", lineno)
        group.append((lineno, [age, w, g, F]))
    wanted = ("male", "female") if sexes == 2 else ("all",)
    out = {}
    for sex in wanted:
        group = groups.get(sex, [])
        if A is not None and len(group) != A:
            line = group[-1][0] if group else None
            raise ParseError(f"{sex} table has {len(group)} ages, expected A = {A}", line)
        data = np.array([vals for _, vals in group], dtype=float).reshape(-1, 4)
        out[sex] = AgeTable(data[:, 0].astype(int), data[:, 1], data[:, 2], data[:, 3])
    return out


def write_per_age(tables: dict[str, AgeTable]) -> str:
    two = set(tables) == {"male", "female"}
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow((("sex",) if two else ()) + AGE_COLUMNS)
    for sex in (("male", "female") if two else ("all",)):
        t = tables[sex]
        for i in range(t.age.size):
            row = [int(t.age[i]), repr(float(t.weight_gr[i])), repr(float(t.maturity[i])),
                   repr(float(t.fishing_mortality[i]))]
            writer.writerow(([sex] if two else []) + row)
    return buf.getvalue()


def build_params(scalars: dict, tables: dict[str, AgeTable]) -> AgeClassParams | TwoSexParams:
    def single(t: AgeTable, name: str) -> AgeClassParams:
        return AgeClassParams(
            A=scalars["A"], alpha=scalars["alpha"], beta=scalars["beta"], M=scalars["M"],
            F=t.fishing_mortality, w=t.weight_gr, gamma=t.maturity, pi=scalars["pi"],
            lambda_min=scalars["lambda_min"], lambda_max=scalars["lambda_max"], name=name,
        )

    name = scalars.get("name", "")
    if scalars["sexes"] == 1:
        return single(tables["all"], name)
    return TwoSexParams(
        male=single(tables["male"], f"{name}_male"),
        female=single(tables["female"], f"{name}_female"),
        recruit_sex_split=scalars.get("recruit_sex_split", 0.5),
        ssb_convention=scalars.get("ssb_convention", SSBConvention.BOTH_SEXES.value),
        name=name,
    )


def load_species(scalars_path: str | Path, ages_path: str | Path) -> AgeClassParams | TwoSexParams:
    scalars = parse_scalars(Path(scalars_path).read_text(encoding="utf-8"))
    tables = parse_per_age(Path(ages_path).read_text(encoding="utf-8"), scalars["sexes"], scalars["A"])
    return build_params(scalars, tables)


@dataclass(frozen=True)
class ObservedSeries:
    years: tuple[int, ...]
    values: tuple[float, ...]
    kind: str = "landings"

    def __iter__(self):
        return iter(zip(self.years, self.values))

    def __len__(self):
        return len(self.years)


def parse_series(text: str, kind: str = "landings") -> ObservedSeries:
    if kind not in SERIES_KINDS:
        raise ParseError(f"series kind must be one of {SERIES_KINDS}")
    reader = csv.reader(_io.StringIO(text))
    rows = [(n, r) for n, r in enumerate(reader, start=1) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError("missing header year,value_tons", 1)
    if tuple(c.strip() for c in rows[0][1]) != ("year", "value_tons"):
        raise ParseError("expected header year,value_tons", rows[0][0])
    years: list[int] = []
    values: list[float] = []
    for lineno, row in rows[1:]:
        if len(row) != 2:
            raise ParseError(f"expected 2 columns, got {len(row)}", lineno)
        year = _number(row[0].strip(), "year", lineno, integer=True)
        value = _number(row[1].strip(), "value_tons", lineno)
        if value < 0:
            raise ParseError("series values must be nonnegative", lineno)
        if years and year <= years[-1]:
            raise ParseError("years must be strictly increasing", lineno)
        years.append(year)
        values.append(value)
    return ObservedSeries(tuple(years), tuple(values), kind)


def write_series(series: ObservedSeries) -> str:
    lines = ["year,value_tons"] + [f"{y},{v!r}" for y, v in series]
    return "\n".join(lines) + "\n"


def fmt(value: float) -> str:
    """Six significant digits."""
    return f"{value:.6g}"


def write_report(report: ThresholdReport) -> str:
    rows = [
        ("species", report.species),
        ("convention", report.convention),
        ("max_yield_tons", str(round(report.max_yield))),
        ("max_ssb_tons", str(round(report.max_ssb))),
        ("phi_g", fmt(report.phi_g)),
        ("contraction_valid", "true" if report.contraction_valid else "false"),
        ("max_yield_tons_full", repr(float(report.max_yield))),
        ("max_ssb_tons_full", repr(float(report.max_ssb))),
        ("phi_g_full", repr(float(report.phi_g))),
    ]
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("key", "value"))
    writer.writerows(rows)
    return buf.getvalue()


def parse_report(text: str) -> dict[str, str]:
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or rows[0] != ["key", "value"]:
        raise ParseError("expected header key,value", 1)
    return {k: v for k, v in rows[1:]}


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if value is None:
        return "undetermined"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt(float(value))
    return str(getattr(value, "value", value))


def write_tsv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = ["\t".join(header)]
    lines += ["\t".join(_cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_grid(grid: SliceGrid | None, axis_names: Sequence[str] | None = None) -> str:
    """One row per grid cell: coordinates, lower/upper membership, conclusion."""
    if grid is None:
        names = list(axis_names or ["x"])
        return write_tsv(names + ["lower", "upper", "conclusion"], [])
    names = list(axis_names or [f"x{a + 1}" for a in grid.axes])
    rows = [
        list(coords) + [v.lower_member, v.upper_member, v.conclusion]
        for coords, v in grid.rows()
    ]
    return write_tsv(names + ["lower", "upper", "conclusion"], rows)


def write_trajectory(
    lambdas: Sequence[float],
    states: Sequence[np.ndarray],
    ssb_tons: Sequence[float],
    yield_tons: Sequence[float],
) -> str:
    """Per-step table; ``lambdas[t]`` is the effort applied during step ``t``."""
    dim = len(states[0]) if states else 0
    header = ["step", "lambda", "ssb_tons", "yield_tons"] + [f"N{a + 1}" for a in range(dim)]
    rows = [
        [t, lambdas[t], ssb_tons[t], yield_tons[t], *states[t]]
        for t in range(len(states))
    ]
    return write_tsv(header, rows)


def write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


# -- SVG ---------------------------------------------------------------------

_W, _H, _PAD = 640, 360, 48


def _scale(v, lo, hi, a, b):
    if hi == lo:
        return (a + b) / 2
    return a + (v - lo) * (b - a) / (hi - lo)


def svg_series(series: ObservedSeries, threshold: float, title: str = "") -> str:
    """Line chart of an observed series with a horizontal threshold line."""
    xs = list(series.years) or [0, 1]
    ys = list(series.values) + [threshold, 0.0]
    x0, x1 = min(xs), max(xs)
    y1 = max(ys) * 1.05 or 1.0
    px = lambda x: _scale(x, x0, x1, _PAD, _W - _PAD)  # noqa: E731
    py = lambda y: _scale(y, 0.0, y1, _H - _PAD, _PAD)  # noqa: E731
    pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in series)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{py(threshold):.2f}" x2="{_W - _PAD}" y2="{py(threshold):.2f}" '
        f'stroke="red" stroke-dasharray="6,4"/>',
        f'<text x="{_W - _PAD}" y="{py(threshold) - 4:.2f}" text-anchor="end" font-size="11" fill="red">'
        f'{fmt(threshold)} t</text>',
    ]
    if pts:
        out.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>')
        for x, y in series:
            colour = "red" if y > threshold else "steelblue"
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{colour}"/>')
    for x in (x0, x1):
        out.append(f'<text x="{px(x):.2f}" y="{_H - _PAD + 16}" text-anchor="middle" font-size="11">{x}</text>')
    out.append(f'<text x="{_PAD - 4}" y="{_PAD}" text-anchor="end" font-size="11">{fmt(y1)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


_COLOURS = {"in_kernel": "#2b8a3e", "not_in_kernel": "#c92a2a", "unknown": "#adb5bd"}


def svg_grid(grid: SliceGrid, title: str = "") -> str:
    """Heat map of grid conclusions (green in, red out, grey unknown)."""
    shape = grid.verdicts.shape
    nx = shape[0]
    ny = shape[1] if len(shape) == 2 else 1
    cw = (_W - 2 * _PAD) / nx
    ch = (_H - 2 * _PAD) / ny
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    for idx in np.ndindex(shape):
        i = idx[0]
        j = idx[1] if len(idx) == 2 else 0
        colour = _COLOURS[grid.verdicts[idx].conclusion.value]
        x = _PAD + i * cw
        y = _H - _PAD - (j + 1) * ch
        out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw:.2f}" height="{ch:.2f}" fill="{colour}"/>')
    lo, hi = grid.coords[0][0], grid.coords[0][-1]
    out.append(f'<text x="{_PAD}" y="{_H - _PAD + 16}" font-size="11">{fmt(lo)}</text>')
    out.append(f'<text x="{_W - _PAD}" y="{_H - _PAD + 16}" text-anchor="end" font-size="11">{fmt(hi)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
