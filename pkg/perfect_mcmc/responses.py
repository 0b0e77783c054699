import csv
import enum
import io
import json
import logging
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel

from .chain import Dist


logger = logging.getLogger(__name__)


class ResultJSONEncoder(json.JSONEncoder):
    def __init__(
        self,
        *,
        skipkeys: bool = False,
        ensure_ascii: bool = True,
        check_circular: bool = True,
        allow_nan: bool = True,
        sort_keys: bool = True,
        indent: Optional[int] = 2,
        separators: Optional[Tuple[str, str]] = None,
        default: Callable[..., Any] = None
    ) -> None:
        super().__init__(
            skipkeys=skipkeys,
            ensure_ascii=ensure_ascii,
            check_circular=check_circular,
            allow_nan=allow_nan,
            sort_keys=sort_keys,
            indent=indent,
            separators=separators,
            default=default,
        )

    def default(self, o: Any) -> Any:
        if isinstance(o, BaseModel):
            return o.model_dump()
        if isinstance(o, enum.Enum):
            return o.value
        if isinstance(o, Fraction):
            return f"{o.numerator}/{o.denominator}"
        if isinstance(o, Dist):
            return list(o.weights)
        if isinstance(o, (set, frozenset)):
            return sorted(o)
        return super().default(o)


def render_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, (list, tuple)):
        return " ".join(render_cell(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


class JSONResult():
    """Result document, rendered with sorted keys and exact rationals as "p/q" """
    def __init__(self, payload: Any) -> None:
        self.payload = payload

    def render(self) -> str:
        return json.dumps(self.payload, cls=ResultJSONEncoder) + "\n"


class CSVResult():
    """One row per replication

    :param columns: column order of the header
    :param rows: one mapping per row, missing cells are left empty
    """
    def __init__(self, columns: Sequence[str], rows: List[Dict[str, Any]]) -> None:
        self.columns = list(columns)
        self.rows = rows

    def render(self) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=self.columns, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({c: render_cell(row.get(c)) for c in self.columns})
        return buffer.getvalue()


def write_result(result: Any, out: Optional[str] = None, stream: Optional[io.TextIOBase] = None) -> None:
    """Write to the file `out`, or to `stream` when no file is given"""
    text = result.render()
    if out is None:
        stream.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    logger.info("wrote %s", out)
