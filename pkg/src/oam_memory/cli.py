"""Command-line front end: config parsing, scan orchestration, file emission.

Commands
--------
  scan-chi        overlap scans chi_{l,m}(z_S) -> CSV
  kernel          full-cycle kernel -> binary + JSON sidecar (or CSV)
  cycle           one write-store-read cycle -> JSON report
  simulate        PDE integrator run -> output pulse CSV
  check-geometry  paraxial validity report -> text
  optimize        (L~, T_W) grid search -> JSON

Configuration is a flat key-value file with dotted section keys
(``memory.r = 50``); unknown keys are rejected.  All output is
deterministic: identical config produces byte-identical files.  Exit codes:
0 ok, 2 config error, 3 numerical-convergence failure, 4 engine
disagreement.
"""

from __future__ import annotations

import argparse
import hashlib
import sys

from .dynamics import SimGrids, StageError, apply_storage, evolve_read, \
    evolve_write, gaussian_pulse
from .kernels import MemoryParams, StepSizeError, full_cycle_kernel
from .memory_cycle import Engine, discretize_and_decompose, \
    optimize_parameters, run_cycle
from .modes import AreaConvention, BeamGeometry, CellGeometry, GeometryError, \
    check_paraxial_constraints
from .overlap import ChiNormalization, QuadratureConvergenceError, \
    QuadratureSpec, chi as chi_overlap, scan_chi, scan_peaks

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_DISAGREEMENT = 4


class ConfigError(ValueError):
    pass


# Every recognized key with its default (as a string, parsed on access).
DEFAULTS = {
    "geometry.w0": "1.0",
    "geometry.wavelength": "1e-3",
    "geometry.zs_ratio": "0.0",
    "cell.length": "",             # empty -> z_R / 100
    "cell.cross_section": "",      # empty -> pi w0^2
    "conventions.area": "half",
    "conventions.chi_norm": "appendix",
    "memory.r": "50.0",
    "memory.l_tilde": "20.0",
    "memory.t_w": "4.0",
    "memory.t_r": "",              # empty -> t_w
    "memory.epsilon2": "0.5",
    "grids.nt": "201",
    "grids.nz": "201",
    "grids.substeps": "0",         # 0 -> automatic from r
    "quad.order": "96",
    "scan.l": "0,1,2,3,4,5",
    "scan.m": "0",
    "scan.zs_start": "0.0",
    "scan.zs_stop": "5.0",
    "scan.zs_points": "100",
    "cycle.l": "0",
    "cycle.j": "plane",
    "cycle.i": "plane",
    "cycle.engine": "kernel",
    "cycle.pulse_width_fraction": "0.16666666666666666",
    "optimize.l_values": "10,20,50",
    "optimize.t_values": "2,4,8",
}


def parse_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in DEFAULTS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = val
    return values


class Config:
    def __init__(self, overrides: dict):
        self.values = dict(DEFAULTS)
        self.values.update(overrides)

    def _get(self, key):
        return self.values[key]

    def get_float(self, key):
        try:
            return float(self._get(key))
        except ValueError:
            raise ConfigError(f"key {key!r}: not a number: {self._get(key)!r}")

    def get_int(self, key):
        try:
            return int(self._get(key))
        except ValueError:
            raise ConfigError(f"key {key!r}: not an integer: {self._get(key)!r}")

    def get_int_list(self, key):
        raw = self._get(key).strip()
        if not raw:
            return []
        try:
            return [int(s) for s in raw.split(",")]
        except ValueError:
            raise ConfigError(f"key {key!r}: not a comma list of integers")

    def get_float_list(self, key):
        raw = self._get(key).strip()
        if not raw:
            return []
        try:
            return [float(s) for s in raw.split(",")]
        except ValueError:
            raise ConfigError(f"key {key!r}: not a comma list of numbers")

    def get_choice(self, key, choices):
        v = self._get(key).strip().lower()
        if v not in choices:
            raise ConfigError(f"key {key!r}: expected one of {sorted(choices)}, "
                              f"got {v!r}")
        return v

    def get_drive_index(self, key):
        v = self._get(key).strip().lower()
        if v in ("plane", "none", ""):
            return None
        try:
            return int(v)
        except ValueError:
            raise ConfigError(f"key {key!r}: expected an integer or 'plane'")

    # -- assembled objects --------------------------------------------------

    def geometry(self) -> BeamGeometry:
        w0 = self.get_float("geometry.w0")
        lam = self.get_float("geometry.wavelength")
        try:
            geom = BeamGeometry(w0=w0, wavelength=lam)
        except GeometryError as exc:
            raise ConfigError(f"geometry: {exc}")
        return geom.with_offset(self.get_float("geometry.zs_ratio") * geom.z_r)

    def cell(self, geom: BeamGeometry) -> CellGeometry:
        import math
        length = self.values["cell.length"].strip()
        area = self.values["cell.cross_section"].strip()
        try:
            return CellGeometry(
                length=float(length) if length else geom.z_r / 100.0,
                cross_section=float(area) if area else math.pi * geom.w0**2,
            )
        except (ValueError, GeometryError) as exc:
            raise ConfigError(f"cell: {exc}")

    def convention(self) -> AreaConvention:
        return {"half": AreaConvention.HALF,
                "quarter": AreaConvention.QUARTER}[
            self.get_choice("conventions.area", {"half", "quarter"})]

    def chi_norm(self) -> str:
        return {"appendix": ChiNormalization.APPENDIX,
                "maintext": ChiNormalization.MAINTEXT}[
            self.get_choice("conventions.chi_norm", {"appendix", "maintext"})]

    def memory_params(self) -> MemoryParams:
        t_w = self.get_float("memory.t_w")
        t_r_raw = self.values["memory.t_r"].strip()
        try:
            return MemoryParams(
                r=self.get_float("memory.r"),
                L_tilde=self.get_float("memory.l_tilde"),
                T_W=t_w,
                T_R=float(t_r_raw) if t_r_raw else t_w,
                epsilon2=self.get_float("memory.epsilon2"),
            )
        except ValueError as exc:
            raise ConfigError(f"memory: {exc}")

    def quad(self) -> QuadratureSpec:
        try:
            return QuadratureSpec(order=self.get_int("quad.order"))
        except ValueError as exc:
            raise ConfigError(f"quad: {exc}")

    def sha256(self) -> str:
        blob = "\n".join(f"{k}={self.values[k]}" for k in sorted(self.values))
        return hashlib.sha256(blob.encode()).hexdigest()

    def preamble(self) -> list:
        return [
            f"# config_sha256 = {self.sha256()}",
            f"# convention = {self.get_choice('conventions.area', {'half', 'quarter'})}",
            f"# chi_norm = {self.get_choice('conventions.chi_norm', {'appendix', 'maintext'})}",
        ]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_lines(out_path, lines):
    text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_scan_chi(cfg: Config, out_path):
    import numpy as np

    geom = cfg.geometry()
    conv = cfg.convention()
    quad = cfg.quad()
    l_set = cfg.get_int_list("scan.l")
    m = cfg.get_int("scan.m")
    zs = np.linspace(cfg.get_float("scan.zs_start"),
                     cfg.get_float("scan.zs_stop"),
                     cfg.get_int("scan.zs_points"))
    records = scan_chi(l_set, m, zs, geom, conv, quad) if l_set else []
    peaks = scan_peaks(records) if records else {}

    lines = cfg.preamble()
    lines.append("l,m,zs_ratio,re_chi,im_chi,abs_chi_tilde,abs_chi_over_s,"
                 "convention,quad_order,is_peak")
    for rec in records:
        is_peak = int(peaks.get(rec.l, (None,))[0] == rec.zs_ratio)
        lines.append(",".join([
            str(rec.l), str(rec.m), _fmt(rec.zs_ratio),
            _fmt(rec.chi.real), _fmt(rec.chi.imag),
            _fmt(abs(rec.chi_tilde)), _fmt(abs(rec.chi_over_s)),
            rec.convention.name.lower(), str(rec.quad_order), str(is_peak),
        ]))
    _write_lines(out_path, lines)
    return EXIT_OK


def _cycle_chis(cfg, geom, conv, quad):
    l_in = cfg.get_int("cycle.l")
    J = cfg.get_drive_index("cycle.j")
    I = cfg.get_drive_index("cycle.i")
    return l_in, J, I


def cmd_kernel(cfg: Config, out_path):
    if out_path is None:
        raise ConfigError("kernel command requires --out")
    geom = cfg.geometry()
    conv = cfg.convention()
    quad = cfg.quad()
    norm = cfg.chi_norm()
    params = cfg.memory_params()
    l_in, J, I = _cycle_chis(cfg, geom, conv, quad)
    l_out = l_in + (0 if I is None else I) - (0 if J is None else J)
    chi_w = (1.0 + 0j if J is None
             else chi_overlap(l_in, J, geom, conv, quad).normalized(norm))
    chi_r = (1.0 + 0j if I is None
             else chi_overlap(l_out, I, geom, conv, quad).normalized(norm))
    kernel = full_cycle_kernel(
        params, nt=cfg.get_int("grids.nt"), nz=cfg.get_int("grids.nz"),
        chi_write=chi_w, chi_read=chi_r,
        mode_labels={"l": l_in, "J": "plane" if J is None else J,
                     "I": "plane" if I is None else I, "l_out": l_out,
                     "convention": conv.name.lower(), "chi_norm": norm,
                     "config_sha256": cfg.sha256()},
    )
    if out_path.endswith(".csv"):
        kernel.save_csv(out_path)
    else:
        base = out_path[:-4] if out_path.endswith(".bin") else out_path
        kernel.save(base)
    return EXIT_OK


def cmd_cycle(cfg: Config, out_path, engine_flag=None):
    geom = cfg.geometry()
    cell = cfg.cell(geom)
    report_geom = check_paraxial_constraints(geom, cell)
    if not report_geom.passed:
        failed = "; ".join(l for l in report_geom.lines() if l.startswith("FAIL"))
        raise ConfigError(f"geometry outside the model's validity: {failed}")

    conv = cfg.convention()
    quad = cfg.quad()
    params = cfg.memory_params()
    engine_name = engine_flag or cfg.get_choice(
        "cycle.engine", {"kernel", "pde", "both"})
    engine = Engine(engine_name)
    l_in, J, I = _cycle_chis(cfg, geom, conv, quad)
    nt = cfg.get_int("grids.nt")
    nz = cfg.get_int("grids.nz")
    sub = cfg.get_int("grids.substeps")
    sim = SimGrids(nz=nz, nt=nt, substeps=sub) if sub > 0 else None

    pulse = gaussian_pulse(
        params.T_W, nt, width_fraction=cfg.get_float("cycle.pulse_width_fraction"))
    _, report = run_cycle(
        pulse, l_in, J, I, geom=geom, conv=conv, params=params, engine=engine,
        chi_norm=cfg.chi_norm(), quad=quad, nt=nt, nz=nz, sim_grids=sim,
    )
    import json
    payload = json.loads(report.to_json())
    payload["config_sha256"] = cfg.sha256()
    _write_lines(out_path, [json.dumps(payload, indent=2, sort_keys=True)])
    return EXIT_DISAGREEMENT if report.flagged else EXIT_OK


def cmd_simulate(cfg: Config, out_path):
    cfg_geom = cfg.geometry()
    conv = cfg.convention()
    quad = cfg.quad()
    norm = cfg.chi_norm()
    params = cfg.memory_params()
    l_in, J, I = _cycle_chis(cfg, cfg_geom, conv, quad)
    nt = cfg.get_int("grids.nt")
    nz = cfg.get_int("grids.nz")
    sub = cfg.get_int("grids.substeps")
    if sub <= 0:
        sub = max(1, int((params.T_W / (nt - 1)) / (0.00625 / max(1.0, abs(params.r)))) + 1)
    grids = SimGrids(nz=nz, nt=nt, substeps=sub)

    chi_w = (1.0 + 0j if J is None
             else chi_overlap(l_in, J, cfg_geom, conv, quad).normalized(norm))
    l_out = l_in + (0 if I is None else I) - (0 if J is None else J)
    chi_r = (1.0 + 0j if I is None
             else chi_overlap(l_out, I, cfg_geom, conv, quad).normalized(norm))

    pulse = gaussian_pulse(
        params.T_W, nt, width_fraction=cfg.get_float("cycle.pulse_width_fraction"))
    written = evolve_write(pulse, l_in, J, chi_w, params, grids)
    stored = apply_storage(written)
    out_pulse, _ = evolve_read(stored, I, chi_r, params, grids)

    lines = cfg.preamble()
    lines.append(f"# oam_out = {out_pulse.oam}")
    lines.append("t,re_a,im_a")
    for t, a in zip(out_pulse.times, out_pulse.samples):
        lines.append(f"{_fmt(t)},{_fmt(a.real)},{_fmt(a.imag)}")
    _write_lines(out_path, lines)
    return EXIT_OK


def cmd_check_geometry(cfg: Config, out_path):
    geom = cfg.geometry()
    cell = cfg.cell(geom)
    report = check_paraxial_constraints(geom, cell)
    lines = cfg.preamble() + report.lines()
    lines.append("OVERALL " + ("PASS" if report.passed else "FAIL"))
    _write_lines(out_path, lines)
    return EXIT_OK


def cmd_optimize(cfg: Config, out_path):
    params = cfg.memory_params()
    result = optimize_parameters(
        cfg.get_float_list("optimize.l_values"),
        cfg.get_float_list("optimize.t_values"),
        params,
        nt=cfg.get_int("grids.nt"),
        nz=cfg.get_int("grids.nz"),
    )
    import json
    payload = {
        "config_sha256": cfg.sha256(),
        "best": {"L_tilde": result.params.L_tilde,
                 "T_W": result.params.T_W,
                 "sigma1": result.sigma1},
        "table": [{"L_tilde": L, "T_W": T, "sigma1": s}
                  for (L, T, s) in result.table],
    }
    _write_lines(out_path, [json.dumps(payload, indent=2, sort_keys=True)])
    return EXIT_OK


COMMANDS = {
    "scan-chi": cmd_scan_chi,
    "kernel": cmd_kernel,
    "cycle": cmd_cycle,
    "simulate": cmd_simulate,
    "check-geometry": cmd_check_geometry,
    "optimize": cmd_optimize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oam-memory",
        description="Raman quantum-memory simulator for OAM-carrying light",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--convention", choices=["quarter", "half"],
                       help="mode-area convention override")
        p.add_argument("--chi-norm", choices=["appendix", "maintext"],
                       help="chi normalization override")
        p.add_argument("--engine", choices=["kernel", "pde", "both"],
                       help="cycle engine override")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved; all computation is deterministic")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = parse_config_file(args.config) if args.config else {}
        if args.convention:
            overrides["conventions.area"] = args.convention
        if args.chi_norm:
            overrides["conventions.chi_norm"] = args.chi_norm
        cfg = Config(overrides)
        if args.command == "cycle":
            code = cmd_cycle(cfg, args.out, engine_flag=args.engine)
        else:
            code = COMMANDS[args.command](cfg, args.out)
    except (ConfigError, FileNotFoundError, GeometryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureConvergenceError, StepSizeError, StageError) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return code


if __name__ == "__main__":
    sys.exit(main())
