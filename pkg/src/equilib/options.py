"""Options files in the style of ``jams.opt``.

One setting per line, ``key = value`` or a bare key for a boolean switch::

    SharedEqu
    ImplVarModel = Replication
    tolerance = 1e-10

Keys are case-insensitive; unknown keys are errors.
"""

from dataclasses import dataclass

from .errors import ParseError

_TRUE = {"1", "yes", "true", "on"}
_FALSE = {"0", "no", "false", "off"}


@dataclass(frozen=True)
class Options:
    shared_equ: bool = False
    strategy: str = "Switching"
    tolerance: float | None = None
    max_iterations: int | None = None


def _bool(value, line):
    v = value.lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ParseError(f"expected a boolean, found {value!r}", line, 1)


def parse_options(text):
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, _, value = line.partition(" ")
        key, value = key.strip().lower(), value.strip()
        if key == "sharedequ":
            fields["shared_equ"] = _bool(value, lineno) if value else True
        elif key == "implvarmodel":
            match = {s.lower(): s for s in ("Replication", "Switching", "Substitution")}
            if value.lower() not in match:
                raise ParseError(f"unknown ImplVarModel {value!r}", lineno, 1)
            fields["strategy"] = match[value.lower()]
        elif key == "tolerance":
            try:
                tol = float(value)
            except ValueError:
                raise ParseError(f"bad tolerance {value!r}", lineno, 1) from None
            if not tol > 0:
                raise ParseError("tolerance must be positive", lineno, 1)
            fields["tolerance"] = tol
        elif key in ("max_iterations", "maxiterations", "iterlim"):
            try:
                it = int(value)
            except ValueError:
                raise ParseError(f"bad iteration limit {value!r}", lineno, 1) from None
            if it < 1:
                raise ParseError("iteration limit must be at least 1", lineno, 1)
            fields["max_iterations"] = it
        else:
            raise ParseError(f"unknown option {key!r}", lineno, 1)
    return Options(**fields)
