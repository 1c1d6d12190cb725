"""Flat key=value run-configuration files.

Format: ``[section]`` headers, one ``key = value`` per line, ``#`` comments.
Repeated keys (``coupling``, ``axis``) accumulate in order.  Example::

    [model]
    levels = 0, 0.25, 1
    modes = 0.25, 0.75
    particles = 4
    coupling = 1 2 1 x 1.0     # j k mode kind(x|mu) strength
    coupling = 2 3 2 x 1.0

    [run]
    err = 1e-10
    kind = dicke               # dicke | tc
    sectors = all              # or space-separated labels: ee oe
    orders = 0,0 1,1 2,2
    workers = 1
    restriction = excitation   # excitation | photon
    policy = region            # region | sector

    [grid]
    axis = 1 2 : 0 4 9         # coupling j k : min max steps
    axis = 2 3 : 0 4 9

    [point]
    x = 2 4                    # one strength per coupling, for `solve`
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError
from .model import CouplingSpec, ModelConfig, ValidatedModel, validate


def parse_sections(text: str) -> dict[str, list[tuple[str, str]]]:
    sections: dict[str, list[tuple[str, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            sections.setdefault(current, [])
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        sections[current].append((key.lower(), value))
    return sections


def _single(entries: list[tuple[str, str]], key: str, default=None, required=False):
    vals = [v for k, v in entries if k == key]
    if not vals:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    if len(vals) > 1:
        raise ConfigError(f"key {key!r} given {len(vals)} times")
    return vals[0]


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"expected numbers, got {text!r}") from exc


def _parse_coupling(value: str) -> CouplingSpec:
    toks = value.split()
    if len(toks) not in (3, 5):
        raise ConfigError(f"coupling needs 'j k mode [x|mu strength]', got {value!r}")
    j, k, mode = (int(t) for t in toks[:3])
    if len(toks) == 3:
        return CouplingSpec(j, k, mode, 1.0, True)
    kind = toks[3].lower()
    if kind not in ("x", "mu"):
        raise ConfigError(f"coupling kind must be 'x' or 'mu', got {toks[3]!r}")
    return CouplingSpec(j, k, mode, float(toks[4]), kind == "x")


@dataclass(frozen=True)
class AxisSpec:
    j: int
    k: int
    lo: float
    hi: float
    steps: int

    def values(self) -> list[float]:
        if self.steps == 1:
            return [self.lo]
        return [self.lo + (self.hi - self.lo) * i / (self.steps - 1)
                for i in range(self.steps)]


def _parse_axis(value: str) -> AxisSpec:
    try:
        target, rng = value.split(":", 1)
        j, k = (int(t) for t in target.split())
        lo, hi, steps = rng.split()
        ax = AxisSpec(j=j, k=k, lo=float(lo), hi=float(hi), steps=int(steps))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"axis needs 'j k : min max steps', got {value!r}") from exc
    if ax.steps < 1 or ax.lo > ax.hi:
        raise ConfigError(f"axis range invalid: {value!r}")
    return ax


@dataclass(frozen=True)
class RunSettings:
    err: float = 1e-10
    kind: str = "dicke"
    sectors: str | tuple[str, ...] = "all"
    orders: tuple[tuple[int, int], ...] = ()
    workers: int = 1
    restriction: str = "excitation"
    policy: str = "region"


@dataclass(frozen=True)
class RunConfig:
    model: ValidatedModel
    run: RunSettings = field(default_factory=RunSettings)
    axes: tuple[AxisSpec, ...] = ()
    point: tuple[float, ...] | None = None


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def parse_config(text: str) -> RunConfig:
    sec = parse_sections(text)
    if "model" not in sec:
        raise ConfigError("missing [model] section")
    m = sec["model"]
    levels = _floats(_single(m, "levels", required=True))
    modes = _floats(_single(m, "modes", required=True))
    particles = int(_single(m, "particles", required=True))
    couplings = tuple(_parse_coupling(v) for k, v in m if k == "coupling")
    if not couplings:
        raise ConfigError("at least one coupling required")
    subsys = _single(m, "subsystems")
    rescale = (_single(m, "rescale", "no") or "no").lower() in ("yes", "true", "1")
    cfg = ModelConfig(n=len(levels), ell=len(modes), n_atoms=particles,
                      omega=tuple(levels), Omega=tuple(modes), couplings=couplings,
                      subsystem_count=int(subsys) if subsys else None)
    try:
        model = validate(cfg, rescale=rescale)
    except Exception as exc:
        raise ConfigError(f"invalid model: {exc}") from exc

    r = sec.get("run", [])
    orders_txt = _single(r, "orders", "")
    orders = []
    for tok in orders_txt.split():
        parts = tok.split(",")
        if len(parts) != 2:
            raise ConfigError(f"order must be 'o1,o2', got {tok!r}")
        orders.append((int(parts[0]), int(parts[1])))
    sectors_txt = (_single(r, "sectors", "all") or "all").strip()
    sectors = "all" if sectors_txt.lower() == "all" else tuple(sectors_txt.split())
    kind = (_single(r, "kind", "dicke") or "dicke").lower()
    if kind not in ("dicke", "tc"):
        raise ConfigError(f"kind must be dicke or tc, got {kind!r}")
    restriction = (_single(r, "restriction", "excitation") or "excitation").lower()
    if restriction not in ("excitation", "photon"):
        raise ConfigError(f"restriction must be excitation or photon, got {restriction!r}")
    policy = (_single(r, "policy", "region") or "region").lower()
    if policy not in ("region", "sector"):
        raise ConfigError(f"policy must be region or sector, got {policy!r}")
    run = RunSettings(err=float(_single(r, "err", "1e-10")),
                      kind=kind, sectors=sectors, orders=tuple(orders),
                      workers=int(_single(r, "workers", "1")),
                      restriction=restriction, policy=policy)

    axes = tuple(_parse_axis(v) for k, v in sec.get("grid", []) if k == "axis")
    if len(axes) > 2:
        raise ConfigError("at most two grid axes supported")
    for ax in axes:
        try:
            model.coupling_index(ax.j, ax.k)
        except Exception as exc:
            raise ConfigError(f"grid axis references unknown coupling: {exc}") from exc

    point = None
    p = sec.get("point", [])
    if p:
        point = tuple(_floats(_single(p, "x", required=True)))
        if len(point) != len(model.couplings):
            raise ConfigError("point needs one strength per coupling")
    return RunConfig(model=model, run=run, axes=axes, point=point)
