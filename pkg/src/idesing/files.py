"""Model, map and constraint files (JSON) and trajectory CSV."""

from __future__ import annotations

import io
import json
import sys
from pathlib import Path
from typing import IO, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .desingularization import DesingMap, LiftedSystem
from .ide import ConstraintSet, IdeSystem, make_system
from .parsing import PolynomialSyntaxError, parse_polynomial, parse_rational
from .polynomial import PolynomialMap, format_polynomial
from .solver import Trajectory, TrajectorySegment

PathLike = Union[str, Path]


class ModelFileError(ValueError):
    pass


def _read_json(path: PathLike) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise ModelFileError(f"{path}: top level must be an object")
    return data


def _parameters(data: Mapping, where: str) -> dict:
    raw = data.get("parameters", {}) or {}
    if not isinstance(raw, dict):
        raise ModelFileError(f"{where}: 'parameters' must be an object")
    try:
        return {str(k): parse_rational(v) if isinstance(v, (str, int)) else parse_rational(repr(v)) for k, v in raw.items()}
    except (ValueError, TypeError) as exc:
        raise ModelFileError(f"{where}: bad parameter value ({exc})") from None


def _string_list(data: Mapping, key: str, where: str) -> list[str]:
    value = data.get(key)
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ModelFileError(f"{where}: '{key}' must be a list of strings")
    return value


def model_from_dict(data: Mapping, where: str = "model") -> IdeSystem:
    for key in ("variables", "a", "f"):
        if key not in data:
            raise ModelFileError(f"{where}: missing '{key}'")
    variables = _string_list(data, "variables", where)
    params = _parameters(data, where)
    a = data["a"]
    if not isinstance(a, list) or not all(isinstance(r, list) for r in a):
        raise ModelFileError(f"{where}: 'a' must be a list of rows")
    f = _string_list(data, "f", where)
    try:
        rows = [[parse_polynomial(str(e), variables, params) for e in row] for row in a]
        fs = [parse_polynomial(e, variables, params) for e in f]
        return make_system(variables, rows, fs, str(data.get("name", "model")))
    except (PolynomialSyntaxError, ValueError) as exc:
        raise ModelFileError(f"{where}: {exc}") from None


def load_model(path: PathLike) -> IdeSystem:
    return model_from_dict(_read_json(path), str(path))


def model_to_dict(s: IdeSystem, lineage: Optional[dict] = None) -> dict:
    out = {
        "name": s.name,
        "variables": list(s.variables),
        "parameters": {},
        "a": [[format_polynomial(e) for e in s.a.row(i)] for i in range(s.m)],
        "f": [format_polynomial(p) for p in s.f],
    }
    if lineage is not None:
        out["lineage"] = lineage
    return out


def lifted_to_dict(l: LiftedSystem) -> dict:
    return model_to_dict(l.system, l.lineage)


def constraints_from_list(items: Sequence, variables: Sequence[str], params: Mapping, where: str) -> ConstraintSet:
    if not isinstance(items, list) or not all(isinstance(v, str) for v in items):
        raise ModelFileError(f"{where}: constraints must be a list of strings")
    try:
        return ConstraintSet(tuple(parse_polynomial(t, variables, params) for t in items), tuple(variables))
    except (PolynomialSyntaxError, ValueError) as exc:
        raise ModelFileError(f"{where}: {exc}") from None


def load_constraints(path: PathLike, variables: Sequence[str]) -> ConstraintSet:
    """``{"constraints": [poly-string], "parameters": {...}}`` over the given variables."""
    data = _read_json(path)
    if "variables" in data and list(data["variables"]) != list(variables):
        raise ModelFileError(f"{path}: constraint variables {data['variables']} differ from {list(variables)}")
    return constraints_from_list(data.get("constraints"), variables, _parameters(data, str(path)), str(path))


def map_from_dict(data: Mapping, where: str = "map") -> DesingMap:
    y = _string_list(data, "domain_variables", where)
    comps = _string_list(data, "components", where)
    params = _parameters(data, where)
    try:
        components = [parse_polynomial(c, y, params) for c in comps]
        mapping = PolynomialMap(y, components)
    except (PolynomialSyntaxError, ValueError) as exc:
        raise ModelFileError(f"{where}: {exc}") from None
    constraints = None
    if data.get("constraints"):
        constraints = constraints_from_list(data["constraints"], y, params, where)
    return DesingMap(mapping, constraints, str(data.get("name", "map")))


def load_map(path: PathLike) -> DesingMap:
    return map_from_dict(_read_json(path), str(path))


def map_to_dict(m: DesingMap) -> dict:
    out = {
        "name": m.name,
        "domain_variables": list(m.domain_variables),
        "components": [format_polynomial(c) for c in m.map.components],
    }
    if m.source_constraints is not None and len(m.source_constraints):
        out["constraints"] = [format_polynomial(g) for g in m.source_constraints]
    return out


# ---------------------------------------------------------------------------
# output


def open_output(path: Optional[PathLike]) -> IO[str]:
    if path is None or str(path) == "-":
        return sys.stdout
    return open(path, "w", newline="")


def write_json(obj, path: Optional[PathLike] = None) -> None:
    out = open_output(path)
    try:
        json.dump(obj, out, indent=2, default=_json_default)
        out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    return str(o)


def _fmt(v: float) -> str:
    return "%.17g" % v


def format_trajectory_csv(traj: Trajectory, extra: Optional[Sequence[Mapping[str, np.ndarray]]] = None) -> str:
    """CSV text: one header per variable set, a ``# segment <id> <termination>`` line after each segment.

    ``extra`` holds, per segment, additional named columns appended after
    ``rank_af``.
    """
    buf = io.StringIO()
    header = None
    for k, seg in enumerate(traj.segments):
        cols = dict(extra[k]) if extra else {}
        h = ["t", *seg.variables, "residual", "constraint_norm", "rank_a", "rank_af", *cols]
        if h != header:
            buf.write(",".join(h) + "\n")
            header = h
        extra_vals = [np.asarray(v, dtype=float) for v in cols.values()]
        for i in range(len(seg)):
            row = [_fmt(seg.times[i]), *(_fmt(v) for v in seg.states[i])]
            row += [_fmt(seg.residual[i]), _fmt(seg.constraint_norm[i]), str(int(seg.rank_a[i])), str(int(seg.rank_af[i]))]
            row += [_fmt(v[i]) for v in extra_vals]
            buf.write(",".join(row) + "\n")
        buf.write(f"# segment {seg.system_id} {seg.termination}\n")
    return buf.getvalue()


def write_trajectory_csv(traj: Trajectory, path: Optional[PathLike] = None, extra=None) -> None:
    out = open_output(path)
    try:
        out.write(format_trajectory_csv(traj, extra))
    finally:
        if out is not sys.stdout:
            out.close()


def read_trajectory_csv(source: Union[PathLike, Iterable[str]]) -> Trajectory:
    """Inverse of :func:`format_trajectory_csv` (extra columns are dropped)."""
    lines = Path(source).read_text().splitlines() if isinstance(source, (str, Path)) else list(source)
    segments = []
    header: list[str] = []
    rows: list[list[str]] = []
    for line in lines:
        line = line.rstrip("\n")
        if not line:
            continue
        if line.startswith("# segment"):
            _, _, system_id, termination = line.split(" ", 3)
            segments.append(_segment(header, rows, system_id, termination))
            rows = []
        elif line.startswith("t,"):
            header = line.split(",")
        else:
            rows.append(line.split(","))
    if rows:
        segments.append(_segment(header, rows, "unnamed", "completed"))
    return Trajectory(segments)


def _segment(header: list[str], rows: list[list[str]], system_id: str, termination: str) -> TrajectorySegment:
    k = header.index("residual")
    variables = tuple(header[1:k])
    data = np.array([[float(v) for v in r] for r in rows]).reshape(len(rows), len(header))
    return TrajectorySegment(
        system_id, variables, data[:, 0], data[:, 1:k], data[:, k], data[:, k + 1],
        data[:, k + 2].astype(int), data[:, k + 3].astype(int), termination,
    )
