"""JSON loading with line/column tracking and presentation (de)serialization.

Presentation files look like::

    {"name": "su_q_2",
     "generators": [{"name": "c", "grade": 0, "star": "c*"}, ...],
     "relations": [[[["a", "c"], "1"], [["c", "a"], "-q"]], ...]}

Each relation is a list of terms ``[word-as-name-list, scalar-string]``; the
empty word is the unit.  Polynomials elsewhere may also be given as
poly-strings such as ``"a c - q c a"``.
"""

from __future__ import annotations

import json
import re
from json.decoder import scanstring

from ..errors import PresentationError, ScalarParseError
from .poly import Generator, NCPoly, Presentation, add_term
from .scalar import Scalar

_WS = re.compile(r"[ \t\n\r]*")
_NUMBER = re.compile(r"-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][-+]?\d+)?")


class Located:
    """Parsed JSON value plus a map from paths to (line, column)."""

    def __init__(self, value, positions: dict, text: str):
        self.value = value
        self.positions = positions
        self.text = text

    def where(self, path) -> tuple:
        path = tuple(path)
        while path not in self.positions and path:
            path = path[:-1]
        return self.positions.get(path, (1, 1))

    def error(self, path, message) -> PresentationError:
        line, col = self.where(path)
        return PresentationError(f"{message} (at {_fmt_path(path)})", line=line, column=col,
                                 path=tuple(path))


def _fmt_path(path) -> str:
    return "$" + "".join(f"[{p!r}]" if isinstance(p, str) else f"[{p}]" for p in path)


def _linecol(text: str, pos: int):
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def loads_located(text: str) -> Located:
    positions: dict = {}

    def skip(i):
        return _WS.match(text, i).end()

    def fail(i, msg):
        line, col = _linecol(text, i)
        raise PresentationError(f"invalid JSON: {msg}", line=line, column=col)

    def value(i, path):
        i = skip(i)
        positions[path] = _linecol(text, i)
        if i >= len(text):
            fail(i, "unexpected end of input")
        ch = text[i]
        if ch == "{":
            obj = {}
            i = skip(i + 1)
            if text.startswith("}", i):
                return obj, i + 1
            while True:
                i = skip(i)
                if not text.startswith('"', i):
                    fail(i, "expected a string key")
                key, i = scanstring(text, i + 1)
                i = skip(i)
                if not text.startswith(":", i):
                    fail(i, "expected ':'")
                v, i = value(i + 1, path + (key,))
                obj[key] = v
                i = skip(i)
                if text.startswith(",", i):
                    i += 1
                    continue
                if text.startswith("}", i):
                    return obj, i + 1
                fail(i, "expected ',' or '}'")
        if ch == "[":
            arr = []
            i = skip(i + 1)
            if text.startswith("]", i):
                return arr, i + 1
            while True:
                v, i = value(i, path + (len(arr),))
                arr.append(v)
                i = skip(i)
                if text.startswith(",", i):
                    i += 1
                    continue
                if text.startswith("]", i):
                    return arr, i + 1
                fail(i, "expected ',' or ']'")
        if ch == '"':
            try:
                return scanstring(text, i + 1)
            except json.JSONDecodeError as exc:
                fail(exc.pos, exc.msg)
        for lit, val in (("true", True), ("false", False), ("null", None)):
            if text.startswith(lit, i):
                return val, i + len(lit)
        m = _NUMBER.match(text, i)
        if m:
            s = m.group(0)
            return (json.loads(s), m.end())
        fail(i, f"unexpected character {ch!r}")

    v, end = value(0, ())
    end = skip(end)
    if end != len(text):
        fail(end, "trailing data")
    return Located(v, positions, text)


def load_located(path) -> Located:
    with open(path, encoding="utf-8") as fh:
        return loads_located(fh.read())


# -- presentations --------------------------------------------------------------

def _expect(doc: Located, path, cond, msg):
    if not cond:
        raise doc.error(path, msg)


def parse_scalar_at(doc: Located, path, value) -> Scalar:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise doc.error(path, "expected a scalar string or integer")
    try:
        return Scalar.parse(str(value))
    except ScalarParseError as exc:
        raise doc.error(path, str(exc)) from None


def parse_poly_at(doc: Located, path, value, pres: Presentation) -> NCPoly:
    """A polynomial given as a poly-string, a scalar, or a list of terms."""
    if isinstance(value, str):
        try:
            return pres.parse_poly(value)
        except PresentationError as exc:
            raise doc.error(path, str(exc)) from None
    if isinstance(value, int) and not isinstance(value, bool):
        return NCPoly.scalar(value)
    _expect(doc, path, isinstance(value, list), "expected a polynomial (string or term list)")
    out: dict = {}
    for t, term in enumerate(value):
        tp = path + (t,)
        _expect(doc, tp, isinstance(term, list) and len(term) == 2,
                "a term is [word-as-name-list, scalar-string]")
        names, coeff = term
        _expect(doc, tp + (0,), isinstance(names, list) and all(isinstance(n, str) for n in names),
                "a word is a list of generator names")
        word = []
        for k, n in enumerate(names):
            if n not in pres.index:
                raise doc.error(tp + (0, k), f"unknown generator {n!r}")
            word.append(pres.index[n])
        add_term(out, tuple(word), parse_scalar_at(doc, tp + (1,), coeff))
    return NCPoly._raw(out)


def presentation_from_doc(doc: Located, base: tuple = (), extra_generators=()) -> Presentation:
    data = doc.value
    for p in base:
        data = data[p]
    _expect(doc, base, isinstance(data, dict), "a presentation is a JSON object")
    gens_raw = data.get("generators")
    _expect(doc, base + ("generators",), isinstance(gens_raw, list) and gens_raw,
            "'generators' must be a nonempty list")
    gens = list(extra_generators)
    for i, g in enumerate(gens_raw):
        gp = base + ("generators", i)
        _expect(doc, gp, isinstance(g, dict) and isinstance(g.get("name"), str),
                "each generator needs a string 'name'")
        grade = g.get("grade", 0)
        _expect(doc, gp + ("grade",), isinstance(grade, int) and grade >= 0,
                "'grade' must be a non-negative integer")
        star = g.get("star", g["name"])
        _expect(doc, gp + ("star",), isinstance(star, str), "'star' must be a generator name")
        coeff = parse_scalar_at(doc, gp + ("star_coeff",), g.get("star_coeff", "1"))
        gens.append(Generator(g["name"], grade, star, coeff))
    graded = bool(data.get("graded", any(g.grade for g in gens)))
    try:
        pres = Presentation(gens, [], graded=graded, name=str(data.get("name", "")))
    except PresentationError as exc:
        raise doc.error(base + ("generators",), str(exc)) from None
    rels = []
    for i, r in enumerate(data.get("relations", [])):
        rels.append(parse_poly_at(doc, base + ("relations", i), r, pres))
    pres.relations = [r for r in rels if not r.is_zero()]
    return pres


def poly_to_json(p: NCPoly, pres: Presentation) -> list:
    items = sorted(p.terms.items(), key=lambda t: (len(t[0]), t[0]), reverse=True)
    return [[[pres.generators[x].name for x in w], str(c)] for w, c in items]


def presentation_to_json(pres: Presentation) -> dict:
    gens = []
    for i, g in enumerate(pres.generators):
        entry = {"name": g.name, "grade": g.grade, "star": pres.generators[pres.star_id[i]].name}
        if not pres.star_coeff[i].is_one():
            entry["star_coeff"] = str(pres.star_coeff[i])
        gens.append(entry)
    return {"name": pres.name, "generators": gens,
            "relations": [poly_to_json(r, pres) for r in pres.relations]}
