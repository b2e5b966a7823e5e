"""Scenario files: TOML-style sections, validated at load time.

Grammar (every key is ``name = value`` on one line)::

    name = "table1"                 # optional, defaults to the file stem
    note = "free text"              # provenance, e.g. assumed parameters
    reproduces = "reference orbit 1" # optional; makes M, a, E mandatory

    [params]        M (default 1), a (required)
    [conserved]     E (default 1), Phi (required), kappa (required)
    [initial]       t (0), r (required), theta (required), phi (0),
                    sign_r (-1), sign_theta (+1)
    [polarization]  c1 (1), c2 (0)
    [run]           s_max (required), tol (1e-10), sample_count (2000),
                    r_escape (1000 M), eps_horizon (1e-6 r+)

Unknown sections or keys are rejected.  Validation errors carry the file
and line of the offending key.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import DomainError
from .geodesic import ConservedSet, GeodesicState, potentials, REGION_TOL
from .geometry import KerrParams, SpacetimePoint
from .ppframe import KAPPA_MIN

__all__ = ["Scenario", "ScenarioError", "load", "loads", "dump", "dumps", "DEFAULTS", "bundled"]

DEFAULTS = {"M": 1.0, "E": 1.0, "tol": 1e-10, "sample_count": 2000}

_SCHEMA = {
    "": {"name": str, "note": str, "reproduces": str},
    "params": {"M": float, "a": float},
    "conserved": {"E": float, "Phi": float, "kappa": float},
    "initial": {"t": float, "r": float, "theta": float, "phi": float, "sign_r": int, "sign_theta": int},
    "polarization": {"c1": float, "c2": float},
    "run": {"s_max": float, "tol": float, "sample_count": int, "r_escape": float, "eps_horizon": float},
}
_REQUIRED = {("params", "a"), ("conserved", "Phi"), ("conserved", "kappa"), ("initial", "r"),
             ("initial", "theta"), ("run", "s_max")}
_REPRODUCTION_REQUIRED = {("params", "M"), ("params", "a"), ("conserved", "E")}


class ScenarioError(DomainError):
    """Invalid scenario file; ``line`` points at the offending key when known."""

    def __init__(self, message, path=None, line=None, key=None):
        where = f"{path}:{line}: " if path and line else f"{path}: " if path else ""
        super().__init__(where + message)
        self.path = str(path) if path else None
        self.line = line
        self.key = key
        self.detail = message


@dataclass(frozen=True)
class Scenario:
    name: str
    M: float
    a: float
    E: float
    Phi: float
    kappa: float
    r: float
    theta: float
    s_max: float
    t: float = 0.0
    phi: float = 0.0
    sign_r: int = -1
    sign_theta: int = 1
    c1: float = 1.0
    c2: float = 0.0
    tol: float = 1e-10
    sample_count: int = 2000
    r_escape: float | None = None
    eps_horizon: float | None = None
    note: str = ""
    reproduces: str = ""

    @property
    def params(self) -> KerrParams:
        return KerrParams(self.M, self.a)

    @property
    def conserved(self) -> ConservedSet:
        return ConservedSet(self.E, self.Phi, self.kappa)

    @property
    def initial(self) -> GeodesicState:
        return GeodesicState(SpacetimePoint(self.t, self.r, self.theta, self.phi), self.sign_r, self.sign_theta)

    @property
    def axial(self) -> bool:
        return self.Phi == 0.0 and self.kappa == 0.0 and self.theta in (0.0, math.pi)

    def resolved(self) -> dict:
        """Run controls with defaults filled in, for provenance records."""
        r_plus = self.params.r_plus
        return {
            "M": self.M,
            "E": self.E,
            "tol": self.tol,
            "sample_count": self.sample_count,
            "s_max": self.s_max,
            "r_escape": 1e3 * self.M if self.r_escape is None else self.r_escape,
            "eps_horizon": 1e-6 * r_plus if self.eps_horizon is None else self.eps_horizon,
        }

    def replace(self, **changes) -> "Scenario":
        d = asdict(self)
        d.update({k: v for k, v in changes.items() if v is not None})
        return _validated(d, {}, None)


# Maps "section.key" to the line it was written on.
def _key_lines(text: str) -> dict:
    lines, section = {}, ""
    for no, raw in enumerate(text.splitlines(), start=1):
        m = re.match(r"^\[\s*([A-Za-z0-9_]+)\s*\]$", raw.split("#", 1)[0].strip())
        if m:
            section = m.group(1)
            lines.setdefault(section, no)
            continue
        m = re.match(r"^([A-Za-z0-9_]+)\s*=", raw.strip())
        if m:
            lines[f"{section}.{m.group(1)}"] = no
    return lines


def loads(text: str, path=None) -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ScenarioError(f"syntax error: {exc}", path, int(m.group(1)) if m else None) from exc
    lines = _key_lines(text)
    flat = {}
    for section, body in doc.items():
        if isinstance(body, dict):
            if section not in _SCHEMA or section == "":
                raise ScenarioError(f"unknown section [{section}]", path, lines.get(section), section)
            items = [(section, k, v) for k, v in body.items()]
        else:
            items = [("", section, body)]
        for sec, key, value in items:
            where = f"{sec}.{key}"
            kinds = _SCHEMA[sec]
            if key not in kinds:
                raise ScenarioError(f"unknown key '{key}'" + (f" in [{sec}]" if sec else ""),
                                    path, lines.get(where), where)
            flat[key] = _coerce(value, kinds[key], path, lines.get(where), where)
            flat.setdefault("_lines", {})[key] = lines.get(where)
    key_lines = flat.pop("_lines", {})
    present = {(sec, k) for sec, kinds in _SCHEMA.items() for k in kinds if k in flat}
    required = _REQUIRED | (_REPRODUCTION_REQUIRED if flat.get("reproduces") else set())
    for sec, key in sorted(required - present):
        raise ScenarioError(f"missing required key '{key}' in [{sec}]" +
                            (" (mandatory for reproduction scenarios)" if (sec, key) in _REPRODUCTION_REQUIRED
                             and (sec, key) not in _REQUIRED else ""),
                            path, lines.get(sec), f"{sec}.{key}")
    if "name" not in flat:
        flat["name"] = Path(path).stem if path else "scenario"
    flat.setdefault("M", DEFAULTS["M"])
    flat.setdefault("E", DEFAULTS["E"])
    return _validated(flat, key_lines, path)


def _coerce(value, kind, path, line, where):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"'{where}' must be a number, got {value!r}", path, line, where)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"'{where}' must be an integer, got {value!r}", path, line, where)
        return value
    if not isinstance(value, str):
        raise ScenarioError(f"'{where}' must be a string, got {value!r}", path, line, where)
    return value


def _validated(flat: dict, lines: dict, path) -> Scenario:
    """Build a Scenario and check every downstream precondition."""

    def fail(key, message):
        raise ScenarioError(message, path, lines.get(key), key)

    for key in ("M", "a", "E", "Phi", "kappa", "r", "theta", "s_max", "t", "phi", "c1", "c2", "tol"):
        if key in flat and not math.isfinite(flat[key]):
            fail(key, f"{key} must be finite")
    sc = Scenario(**{f.name: flat[f.name] for f in fields(Scenario) if f.name in flat})
    try:
        params = sc.params
    except DomainError as exc:
        fail("a" if sc.M > 0 else "M", str(exc))
    try:
        cons = sc.conserved
    except DomainError as exc:
        fail("kappa" if sc.kappa < 0 else "E", str(exc))
    if sc.sign_r not in (-1, 1):
        fail("sign_r", "sign_r must be +1 or -1")
    if sc.sign_theta not in (-1, 1):
        fail("sign_theta", "sign_theta must be +1 or -1")
    if not 0.0 <= sc.theta <= math.pi:
        fail("theta", f"theta={sc.theta} outside [0, pi]")
    res = sc.resolved()
    if not sc.tol > 0:
        fail("tol", f"tol must be positive, got {sc.tol}")
    if not sc.s_max >= 0:
        fail("s_max", f"s_max must be non-negative, got {sc.s_max}")
    if sc.sample_count < 2:
        fail("sample_count", f"sample_count must be at least 2, got {sc.sample_count}")
    if not res["eps_horizon"] > 0:
        fail("eps_horizon", "eps_horizon must be positive")
    if not sc.r > params.r_plus + res["eps_horizon"]:
        fail("r", f"r={sc.r} is not outside the horizon cut r+ + eps = {params.r_plus + res['eps_horizon']}")
    if not res["r_escape"] >= sc.r:
        fail("r_escape", f"r_escape={res['r_escape']} is below the initial radius {sc.r}")
    if math.sin(sc.theta) == 0.0 and sc.Phi != 0.0:
        fail("Phi", "a photon on the symmetry axis must have Phi = 0")
    pot = potentials(cons, params, sc.r, sc.theta)
    if pot.R < -REGION_TOL * max(1.0, pot.P * pot.P):
        fail("r", f"initial radius outside the allowed region (R={pot.R:.6g} < 0)")
    if pot.Theta < -REGION_TOL * max(1.0, pot.D * pot.D, cons.kappa):
        fail("theta", f"initial polar angle outside the allowed region (Theta={pot.Theta:.6g} < 0)")
    if sc.c1 == 0.0 and sc.c2 == 0.0:
        fail("c1", "polarization coefficients c1, c2 must not both vanish")
    if not sc.axial and sc.kappa < KAPPA_MIN:
        fail("kappa", f"kappa={sc.kappa} < {KAPPA_MIN}: the measurement basis is undefined "
                      "(only axial photons may have kappa = 0)")
    if pot.P <= 0.0:
        fail("E", "the photon must be future directed (P > 0) at emission")
    return sc


def load(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", path) from exc
    return loads(text, path)


def _num(x) -> str:
    return repr(float(x))


def dumps(sc: Scenario) -> str:
    """Canonical text form; loads(dumps(sc)) == sc."""
    out = [f"name = {_quote(sc.name)}"]
    if sc.note:
        out.append(f"note = {_quote(sc.note)}")
    if sc.reproduces:
        out.append(f"reproduces = {_quote(sc.reproduces)}")
    out += ["", "[params]", f"M = {_num(sc.M)}", f"a = {_num(sc.a)}",
            "", "[conserved]", f"E = {_num(sc.E)}", f"Phi = {_num(sc.Phi)}", f"kappa = {_num(sc.kappa)}",
            "", "[initial]", f"t = {_num(sc.t)}", f"r = {_num(sc.r)}", f"theta = {_num(sc.theta)}",
            f"phi = {_num(sc.phi)}", f"sign_r = {sc.sign_r}", f"sign_theta = {sc.sign_theta}",
            "", "[polarization]", f"c1 = {_num(sc.c1)}", f"c2 = {_num(sc.c2)}",
            "", "[run]", f"s_max = {_num(sc.s_max)}", f"tol = {_num(sc.tol)}",
            f"sample_count = {sc.sample_count}"]
    if sc.r_escape is not None:
        out.append(f"r_escape = {_num(sc.r_escape)}")
    if sc.eps_horizon is not None:
        out.append(f"eps_horizon = {_num(sc.eps_horizon)}")
    return "\n".join(out) + "\n"


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def dump(sc: Scenario, path) -> None:
    Path(path).write_text(dumps(sc), encoding="utf-8")


def bundled() -> dict[str, Path]:
    """Scenario files shipped with the package, by name."""
    root = Path(__file__).parent / "scenarios"
    return {p.stem: p for p in sorted(root.glob("*.toml"))}
