"""Convergence studies on the corner benchmark and their tables."""

import argparse
import configparser
import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .analysis import ERROR_DEGREE, ConvergenceRecord, error_report
from .errors import ConfigError, PrStokesError
from .exact import SingularSolution
from .fespace import ElementKind
from .mesh import load_mesh, lshape_mesh, red_refine
from .solver import StokesDiscretization

ELEMENTS = {"bernardi-raugel": ElementKind.BR, "crouzeix-raviart": ElementKind.CR}
MODES = ("classical", "pressure-robust")
RECONSTRUCTIONS = {"auto": "auto", "bdm1": ElementKind.BDM1, "rt0": ElementKind.RT0}
FORMATS = ("markdown", "csv", "json")
PROJECTORS = ("hodge", "gradient")
BUILTIN_MESH = "builtin-lshape"
CSV_COLUMNS = ("element", "mode", "nu", "level", "ndof", "h1_error", "h1_order",
               "proj_dist", "proj_order")


@dataclass
class StudyConfig:
    """Everything that determines a study; there is no randomness.

    ``levels`` counts meshes, starting at refinement level ``start_level``
    (level 0 is the 12-triangle builtin mesh or the mesh file as read).
    ``assembly_degree = None`` picks the per-element default.
    ``projector`` selects the data of the discrete Stokes projector:
    ``"hodge"`` tests the Helmholtz-Hodge part of ``-lap v`` against the
    reconstructed basis, ``"gradient"`` uses ``(grad v, grad_h phi_i)``.
    """

    element: str = "bernardi-raugel"
    modes: tuple = MODES
    reconstruction: str = "auto"
    nus: tuple = (1.0, 1e-2, 1e-4)
    levels: int = 4
    start_level: int = 1
    mesh: str = BUILTIN_MESH
    assembly_degree: int = None
    error_degree: int = ERROR_DEGREE
    projector: str = "hodge"
    output: str = "markdown"
    out: str = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.element not in ELEMENTS:
            raise ConfigError("element", f"unknown element {self.element!r}; "
                              f"choose from {', '.join(ELEMENTS)}")
        self.modes = tuple(self.modes)
        if not self.modes:
            raise ConfigError("mode", "at least one mode is required")
        for m in self.modes:
            if m not in MODES:
                raise ConfigError("mode", f"unknown mode {m!r}")
        if self.reconstruction not in RECONSTRUCTIONS:
            raise ConfigError("reconstruction", f"unknown reconstruction {self.reconstruction!r}")
        self.nus = tuple(float(n) for n in self.nus)
        if not self.nus:
            raise ConfigError("nu", "at least one viscosity is required")
        if any(not n > 0 for n in self.nus):
            raise ConfigError("nu", "viscosities must be positive")
        if int(self.levels) != self.levels or self.levels < 1:
            raise ConfigError("levels", "levels must be an integer >= 1")
        if int(self.start_level) != self.start_level or self.start_level < 0:
            raise ConfigError("start_level", "start_level must be an integer >= 0")
        for name in ("assembly_degree", "error_degree"):
            d = getattr(self, name)
            if d is not None and (int(d) != d or not 1 <= d <= 20):
                raise ConfigError(name, "quadrature degree must lie in 1..20")
        if self.projector not in PROJECTORS:
            raise ConfigError("projector", f"unknown projector data {self.projector!r}")
        if self.output not in FORMATS:
            raise ConfigError("format", f"unknown output format {self.output!r}")

    @property
    def element_kind(self):
        return ELEMENTS[self.element]

    @property
    def reconstruction_kind(self):
        return RECONSTRUCTIONS[self.reconstruction]

    @property
    def level_range(self):
        return range(self.start_level, self.start_level + self.levels)


@dataclass
class StudyResult:
    config: StudyConfig
    records: dict = field(default_factory=dict)      # (nu, mode) -> ConvergenceRecord
    ndofs: list = field(default_factory=list)
    wall_clock: list = field(default_factory=list)   # seconds per level

    def record(self, nu, mode):
        return self.records[(float(nu), mode)]

    def to_dict(self):
        cfg = asdict(self.config)
        cfg["modes"], cfg["nus"] = list(cfg["modes"]), list(cfg["nus"])
        return {"config": cfg,
                "levels": list(self.config.level_range),
                "ndof": self.ndofs,
                "wall_clock": self.wall_clock,
                "records": [rec.to_dict() for rec in self.records.values()]}


def _mesh_at(config, level, base_cache):
    if config.mesh == BUILTIN_MESH:
        return lshape_mesh(level)
    if "base" not in base_cache:
        try:
            base_cache["base"] = load_mesh(config.mesh)
        except OSError as exc:
            raise ConfigError("mesh", f"cannot read {config.mesh}: {exc}") from None
    return red_refine(base_cache["base"], level)


def _with_context(exc, context):
    exc.args = (f"{context}: {exc}",) + exc.args[1:]
    return exc


def run_study(config):
    """Solve every (level, nu, mode) case of ``config``.

    Per level the mesh is built, the operators are assembled and factored
    once, the discrete Stokes projector of the exact velocity is computed,
    and each (nu, mode) solve is reduced to an :class:`ErrorReport`.
    """
    config.validate()
    exact = SingularSolution()
    result = StudyResult(config)
    for nu in config.nus:
        for mode in config.modes:
            result.records[(nu, mode)] = ConvergenceRecord(config.element, mode, nu)
    cache = {}
    for level in config.level_range:
        t0 = time.perf_counter()
        try:
            mesh = _mesh_at(config, level, cache)
            disc = StokesDiscretization(mesh, config.element_kind,
                                        config.reconstruction_kind,
                                        config.assembly_degree, level=level)
            s_h = disc.stokes_projector(exact.velocity, exact.velocity_gradient,
                                        rhs=config.projector,
                                        degree=config.error_degree)
        except PrStokesError as exc:
            raise _with_context(exc, f"level {level}")
        result.ndofs.append(disc.n_dofs)
        for nu in config.nus:
            # the exact velocity does not depend on nu, only p0 does
            for mode in config.modes:
                try:
                    sol = disc.solve(nu, exact.forcing, mode, exact.velocity)
                    report = error_report(sol.velocity, s_h, exact.velocity,
                                          exact.velocity_gradient, level,
                                          config.error_degree, stiffness=disc.A)
                except PrStokesError as exc:
                    raise _with_context(exc, f"level {level}, nu={nu:g}, {mode}")
                result.records[(nu, mode)].reports.append(report)
        result.wall_clock.append(time.perf_counter() - t0)
    return result


def _fmt_order(x):
    return "-" if x is None else f"{x:.3f}"


def _markdown(result):
    lines = []
    for rec in result.records.values():
        lines.append(f"### {rec.element}, {rec.mode}, nu = {rec.nu:g}")
        lines.append("")
        lines.append("| ndof | h1_error | order | proj_dist | order |")
        lines.append("|---:|---:|---:|---:|---:|")
        h1o = [None] + rec.h1_orders
        pdo = [None] + rec.projector_orders
        for r, a, b in zip(rec.reports, h1o, pdo):
            lines.append(f"| {r.dofs} | {r.h1_error:.4e} | {_fmt_order(a)} | "
                         f"{r.projector_distance:.4e} | {_fmt_order(b)} |")
        lines.append("")
    return "\n".join(lines)


def _csv(result):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    g = "{:.17g}".format
    for rec in result.records.values():
        h1o = [None] + rec.h1_orders
        pdo = [None] + rec.projector_orders
        for r, a, b in zip(rec.reports, h1o, pdo):
            writer.writerow([rec.element, rec.mode, g(rec.nu), r.level, r.dofs,
                             g(r.h1_error), "" if a is None else g(a),
                             g(r.projector_distance), "" if b is None else g(b)])
    return buf.getvalue()


def emit_table(result, fmt="markdown", path=None):
    """Render ``result`` as markdown, csv or json; write it to ``path`` if given.

    Returns the rendered text. Orders sit on the row of the finer level of
    each pair, so the first row of every table has none.
    """
    if fmt == "markdown":
        text = _markdown(result)
    elif fmt == "csv":
        text = _csv(result)
    elif fmt == "json":
        text = json.dumps(result.to_dict(), indent=2)
    else:
        raise ConfigError("format", f"unknown output format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


# --- configuration -----------------------------------------------------------

CONFIG_KEYS = ("element", "mode", "reconstruction", "nu", "levels", "start_level",
               "mesh", "assembly_degree", "error_degree", "projector", "format", "out")


def _split_list(text):
    return [t for t in text.replace(",", " ").split() if t]


def _parse_value(key, raw):
    raw = raw.strip()
    try:
        if key == "nu":
            return tuple(float(t) for t in _split_list(raw))
        if key == "mode":
            items = _split_list(raw)
            return MODES if items == ["both"] else tuple(items)
        if key in ("levels", "start_level", "assembly_degree", "error_degree"):
            if key == "assembly_degree" and raw == "auto":
                return None
            return int(raw)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r}") from None
    return raw


def read_config_file(path):
    """Flat ``key = value`` file (``#`` comments) as a dict of parsed values."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",))
    try:
        parser.read_string("[study]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("config", f"malformed file {path}: {exc.message}") from None
    if parser.sections() != ["study"]:
        raise ConfigError("config", f"{path}: sections are not allowed in a flat file")
    values = {}
    for key, raw in parser["study"].items():
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ConfigError(key, "unknown configuration key")
        values[key] = _parse_value(key, raw)
    return values


def build_parser():
    p = argparse.ArgumentParser(
        prog="stokes-bench",
        description="Convergence study of classical and pressure-robust "
                    "Stokes discretizations on the L-shaped corner benchmark.")
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--element", help="bernardi-raugel or crouzeix-raviart")
    p.add_argument("--mode", help="classical, pressure-robust or both")
    p.add_argument("--reconstruction", help="auto, bdm1 or rt0")
    p.add_argument("--nu", help="viscosities, comma or space separated")
    p.add_argument("--levels", help="number of meshes")
    p.add_argument("--start-level", dest="start_level", help="first refinement level")
    p.add_argument("--mesh", help=f"{BUILTIN_MESH} or a mesh file")
    p.add_argument("--assembly-degree", dest="assembly_degree",
                   help="load-vector quadrature degree or auto")
    p.add_argument("--error-degree", dest="error_degree")
    p.add_argument("--projector", help="hodge or gradient")
    p.add_argument("--format", help="markdown, csv or json")
    p.add_argument("--out", help="output file (default: stdout)")
    return p


def parse_config(argv=None):
    """Build a :class:`StudyConfig` from an optional file plus CLI flags.

    Flags override file values; unspecified keys keep their defaults.
    """
    args = build_parser().parse_args(argv)
    values = read_config_file(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        raw = getattr(args, key, None)
        if raw is not None:
            values[key] = _parse_value(key, raw)
    kwargs = {}
    rename = {"mode": "modes", "nu": "nus", "format": "output"}
    for key, val in values.items():
        kwargs[rename.get(key, key)] = val
    return StudyConfig(**kwargs)
