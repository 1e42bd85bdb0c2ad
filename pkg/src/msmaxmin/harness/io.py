"""JSON-lines horizon files, trace output and CSV reports.

A horizon file is UTF-8 JSON lines with sorted keys and integers only.  The
first line is a header::

    {"delta":1,"entities":["e1","e2"],"m":2,"n":2,"players":["p1","p2"],"tau":3}

followed by one line per step::

    {"allowed":{"e1":["p1","p2"],"e2":[]},"t":1,"values":{"e1":{"p1":3}}}

Allowed lists follow the header's player order; zero values are omitted.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import IO, Iterable

from ..model import Horizon, Instance, ValidationError


class HorizonFormatError(ValidationError):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _reject_float(text):
    raise HorizonFormatError(f"non-integer number {text} in horizon file")


def header_dict(h: Horizon) -> dict:
    return {"delta": h.delta, "entities": list(h.entities), "m": h.m, "n": h.n, "players": list(h.players), "tau": h.tau}


def instance_dict(inst: Instance, players, entities) -> dict:
    allowed = {e: [p for p in players if p in inst.allowed_players(e)] for e in entities}
    values = {}
    for e in entities:
        row = {p: inst.value(e, p) for p in players if inst.value(e, p)}
        if row:
            values[e] = row
    return {"allowed": allowed, "t": inst.t, "values": values}


def dumps_horizon(h: Horizon) -> str:
    lines = [_dump(header_dict(h))]
    lines += [_dump(instance_dict(inst, h.players, h.entities)) for inst in h.instances]
    return "\n".join(lines) + "\n"


def save_horizon(h: Horizon, dest) -> None:
    text = dumps_horizon(h)
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text, encoding="utf-8")
    else:
        dest.write(text)


def _int(obj, what, lineno):
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise HorizonFormatError(f"line {lineno}: {what} must be an integer, got {obj!r}")
    return obj


def parse_instance_line(obj: dict, lineno: int) -> Instance:
    if not isinstance(obj, dict) or set(obj) - {"t", "allowed", "values"} or "t" not in obj:
        raise HorizonFormatError(f"line {lineno}: expected an object with keys t, allowed, values")
    t = _int(obj["t"], "t", lineno)
    allowed = obj.get("allowed", {})
    values = obj.get("values", {})
    if not isinstance(allowed, dict) or not isinstance(values, dict):
        raise HorizonFormatError(f"line {lineno}: allowed and values must be objects")
    flat = {}
    for e, row in values.items():
        if not isinstance(row, dict):
            raise HorizonFormatError(f"line {lineno}: values[{e!r}] must be an object")
        for p, v in row.items():
            flat[(e, p)] = _int(v, f"values[{e!r}][{p!r}]", lineno)
    for e, ps in allowed.items():
        if not isinstance(ps, list) or not all(isinstance(p, str) for p in ps):
            raise HorizonFormatError(f"line {lineno}: allowed[{e!r}] must be a list of player ids")
    try:
        return Instance(t, {e: frozenset(ps) for e, ps in allowed.items()}, flat)
    except ValidationError as exc:
        raise HorizonFormatError(f"line {lineno}: {exc}") from exc


def iter_lines(lines: Iterable[str]):
    """Yield ``(lineno, parsed_object)`` for the non-blank lines of a horizon file."""
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            yield lineno, json.loads(line, parse_float=_reject_float, parse_constant=_reject_float)
        except json.JSONDecodeError as exc:
            raise HorizonFormatError(f"line {lineno}: {exc}") from exc


def loads_horizon(text: str) -> Horizon:
    return _load(io.StringIO(text))


def load_horizon(src) -> Horizon:
    if isinstance(src, (str, Path)):
        with open(src, encoding="utf-8") as f:
            return _load(f)
    return _load(src)


def _load(f: IO[str]) -> Horizon:
    rows = iter_lines(f)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise HorizonFormatError("empty horizon file") from None
    need = {"delta", "entities", "m", "n", "players", "tau"}
    if not isinstance(header, dict) or not need <= set(header):
        raise HorizonFormatError(f"line {lineno}: header must carry {sorted(need)}")
    players, entities = header["players"], header["entities"]
    if len(players) != _int(header["n"], "n", lineno) or len(entities) != _int(header["m"], "m", lineno):
        raise HorizonFormatError(f"line {lineno}: n/m disagree with the player/entity tables")
    tau = _int(header["tau"], "tau", lineno)
    instances = [parse_instance_line(obj, k) for k, obj in rows]
    if len(instances) != tau:
        raise HorizonFormatError(f"header announces tau={tau} but the file has {len(instances)} steps")
    try:
        return Horizon(tuple(players), tuple(entities), _int(header["delta"], "delta", lineno), tuple(instances))
    except ValidationError as exc:
        raise HorizonFormatError(str(exc)) from exc


def dumps_trace(trace) -> str:
    return json.dumps(trace.to_dict(), sort_keys=True, indent=1) + "\n"


def allocation_rows(trace) -> list:
    rows = []
    for alloc in trace.allocations:
        branch = trace.choice_at(alloc.t).value
        for e in trace.entities:
            if e in alloc.assign:
                rows.append({"t": alloc.t, "entity": e, "player": alloc.assign[e], "branch": branch})
    return rows


def dumps_csv(rows: list, columns: list) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: row.get(c, "") for c in columns})
    return buf.getvalue()
