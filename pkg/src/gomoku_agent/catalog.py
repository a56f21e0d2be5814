"""Strategy / analytical-logic catalog and the flat action space.

The agent's action is not a board cell: it is a (strategy, logic) pair
drawn from a catalog document. The shipped default has 52 strategies in
four categories and 9 logics, giving a 468-action space; smaller catalogs
are fine for tests.

Catalog file format (UTF-8, line oriented):

    # comment
    [strategies:<category>]     category: basic tactics | defensive |
    name | description                     offensive | opening
    ...
    [logics]
    name | description
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

CATEGORIES = ("basic tactics", "defensive", "offensive", "opening")

DEFAULT_STRATEGY_COUNT = 52
DEFAULT_LOGIC_COUNT = 9


class CatalogError(Exception):
    code = "catalog_error"


class ParseError(CatalogError):
    code = "parse_error"


class DuplicateNameError(CatalogError):
    code = "duplicate_name"


class UnknownCategoryError(CatalogError):
    code = "unknown_category"


class IndexOutOfRangeError(CatalogError):
    code = "index_out_of_range"


@dataclass(frozen=True)
class Strategy:
    id: int
    name: str
    category: str
    description: str


@dataclass(frozen=True)
class Logic:
    id: int
    name: str
    description: str


@dataclass(frozen=True)
class Catalog:
    strategies: tuple[Strategy, ...]
    logics: tuple[Logic, ...]

    @property
    def action_space_size(self) -> int:
        return len(self.strategies) * len(self.logics)


def load_catalog(source: str) -> Catalog:
    """Parse catalog text. Ordering in the document fixes the dense ids."""
    strategies: list[Strategy] = []
    logics: list[Logic] = []
    seen_s: set[str] = set()
    seen_l: set[str] = set()
    section: str | None = None  # current category, or "logics"

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"line {lineno}: unterminated section header")
            header = line[1:-1].strip()
            if header == "logics":
                section = "logics"
            elif header.startswith("strategies:"):
                category = header.split(":", 1)[1].strip()
                if category not in CATEGORIES:
                    raise UnknownCategoryError(
                        f"line {lineno}: unknown category {category!r}"
                    )
                section = category
            else:
                raise ParseError(f"line {lineno}: unknown section {header!r}")
            continue
        if section is None:
            raise ParseError(f"line {lineno}: entry before any section header")
        if "|" not in line:
            raise ParseError(f"line {lineno}: expected 'name | description'")
        name, description = (part.strip() for part in line.split("|", 1))
        if not name or not description:
            raise ParseError(f"line {lineno}: empty name or description")
        if section == "logics":
            if name in seen_l:
                raise DuplicateNameError(f"line {lineno}: duplicate logic {name!r}")
            seen_l.add(name)
            logics.append(Logic(len(logics), name, description))
        else:
            if name in seen_s:
                raise DuplicateNameError(f"line {lineno}: duplicate strategy {name!r}")
            seen_s.add(name)
            strategies.append(Strategy(len(strategies), name, section, description))

    if not strategies or not logics:
        raise ParseError("catalog needs at least one strategy and one logic")
    return Catalog(tuple(strategies), tuple(logics))


def load_catalog_file(path: str | Path) -> Catalog:
    return load_catalog(Path(path).read_text(encoding="utf-8"))


def default_catalog() -> Catalog:
    text = resources.files("gomoku_agent").joinpath("data/catalog.txt").read_text("utf-8")
    return load_catalog(text)


def encode_action(s_idx: int, l_idx: int, catalog: Catalog) -> int:
    if not 0 <= s_idx < len(catalog.strategies):
        raise IndexOutOfRangeError(f"strategy index {s_idx} out of range")
    if not 0 <= l_idx < len(catalog.logics):
        raise IndexOutOfRangeError(f"logic index {l_idx} out of range")
    return s_idx * len(catalog.logics) + l_idx


def decode_action(action: int, catalog: Catalog) -> tuple[Strategy, Logic]:
    if not 0 <= action < catalog.action_space_size:
        raise IndexOutOfRangeError(
            f"action {action} out of range [0, {catalog.action_space_size})"
        )
    n_logics = len(catalog.logics)
    return catalog.strategies[action // n_logics], catalog.logics[action % n_logics]
