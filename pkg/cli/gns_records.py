"""Line records: tab-separated key=value pairs.

A value is written bare when it is an integer or a plain token. Anything
else (lists, mappings, booleans, None, strings with whitespace or that
would read back as a number) is written as a JSON string literal whose
content is the canonical JSON of the value.
"""

import json
import re
from typing import Any, Dict, Iterable, List, Tuple

_INT = re.compile(r"^[+-]?\d+$")
_PLAIN = re.compile(r"^[^\s\"=][^\s\"]*$")


def canonical(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def encode_value(value: Any) -> str:
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    if isinstance(value, str) and _PLAIN.match(value) and not _INT.match(value):
        return value
    return json.dumps(canonical(value))


def decode_value(text: str) -> Any:
    if text.startswith('"'):
        return json.loads(json.loads(text))
    if _INT.match(text):
        return int(text)
    return text


def format_record(fields: Iterable[Tuple[str, Any]]) -> str:
    parts = []
    for key, value in fields:
        if not key or "=" in key or any(c.isspace() for c in key):
            raise ValueError(f"invalid record key {key!r}")
        parts.append(f"{key}={encode_value(value)}")
    return "\t".join(parts)


def parse_record(line: str) -> Dict[str, Any]:
    record: Dict[str, Any] = {}
    for part in line.rstrip("\n").split("\t"):
        if not part:
            continue
        key, sep, value = part.partition("=")
        if not sep:
            raise ValueError(f"record field {part!r} has no '='")
        record[key] = decode_value(value)
    return record


def parse_records(text: str) -> List[Dict[str, Any]]:
    return [parse_record(line) for line in text.splitlines() if line.strip()]
