"""Command-line front end: JSON scenario in, CSV trajectories / JSON reports out.

Exit codes: 0 ok, 1 verification failed, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import pictures as pic
from .errors import ConfigError, HipdynError, NoConvergence, SingularMatrix, StepLimitExceeded
from .evolution import DP54, RK4, IntegratorSpec, evolve_ket, map_initial_state
from .matrix_core import HERMITIAN_TOL, eigenvalues, hermiticity_residual, fro_norm
from .pictures import DysonFactorization, PictureModel, PictureTag
from .polytime import PolyMatrix
from .toy_model import DEFAULT_GRID, ToyParams, toy_model, toy_printed
from . import verify

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3

BUILTINS = ("toy2",)


def fmt(x: float) -> str:
    return f"{x:.17g}"


# -- JSON encodings -----------------------------------------------------------

def complex_to_json(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def complex_from_json(v, where: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if (isinstance(v, (list, tuple)) and len(v) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        return complex(v[0], v[1])
    raise ConfigError(where, f"expected [re, im] pair, got {v!r}")


def matrix_to_json(m) -> list:
    return [[complex_to_json(z) for z in row] for row in np.asarray(m)]


def matrix_from_json(v, where: str) -> np.ndarray:
    if not isinstance(v, list) or not v or not all(isinstance(row, list) for row in v):
        raise ConfigError(where, "expected a nested list of [re, im] pairs")
    n = len(v)
    if any(len(row) != n for row in v):
        raise ConfigError(where, "matrix must be square")
    return np.array([[complex_from_json(z, where) for z in row] for row in v], dtype=np.complex128)


def poly_matrix_to_json(pm: PolyMatrix) -> list:
    n = pm.dim
    return [[[complex_to_json(c) for c in pm.entry(i, j).coeffs] for j in range(n)]
            for i in range(n)]


def poly_matrix_from_json(v, where: str) -> PolyMatrix:
    if not isinstance(v, list) or not v:
        raise ConfigError(where, "expected rows -> columns -> coefficient lists")
    n = len(v)
    rows = []
    for i, row in enumerate(v):
        if not isinstance(row, list) or len(row) != n:
            raise ConfigError(where, f"row {i} must have {n} entries")
        cells = []
        for j, coeffs in enumerate(row):
            if not isinstance(coeffs, list) or not coeffs:
                raise ConfigError(f"{where}[{i}][{j}]", "expected a non-empty coefficient list")
            cells.append([complex_from_json(c, f"{where}[{i}][{j}]") for c in coeffs])
        rows.append(cells)
    k = max(len(c) for row in rows for c in row)
    cube = np.zeros((n, n, k), dtype=np.complex128)
    for i, row in enumerate(rows):
        for j, c in enumerate(row):
            cube[i, j, : len(c)] = c
    return PolyMatrix(cube)


# -- scenario config ----------------------------------------------------------

@dataclass
class ScenarioConfig:
    model: dict
    picture: PictureTag
    initial_state: np.ndarray
    observables: list
    window: tuple
    integrator: IntegratorSpec
    sample_times: list
    grid: dict = field(default_factory=dict)

    @property
    def is_toy(self) -> bool:
        return self.model.get("builtin") == "toy2"

    def toy_params(self, **override) -> ToyParams:
        p = dict(self.model.get("params", {}))
        p.update(override)
        return ToyParams(p.get("r", 0.5), p.get("a", 1.0), p.get("b", 0.5), self.window)

    def build_model(self) -> PictureModel:
        if self.is_toy:
            return toy_model(self.toy_params())
        d = DysonFactorization(self.model["omega1"], self.model["omega2"])
        return PictureModel(d, self.model["hamiltonian"], window=self.window)

    def to_json(self) -> dict:
        if self.is_toy:
            model = {"builtin": "toy2", "params": dict(self.model.get("params", {}))}
        else:
            model = {k: poly_matrix_to_json(self.model[k]) for k in ("omega1", "omega2", "hamiltonian")}
        spec = self.integrator
        if spec.method == RK4:
            integ = {"method": RK4, "step": spec.step, "max_steps": spec.max_steps}
        else:
            integ = {"method": DP54, "rtol": spec.rtol, "atol": spec.atol, "max_steps": spec.max_steps}
        out = {
            "model": model,
            "picture": self.picture.value,
            "initial_state": [complex_to_json(z) for z in self.initial_state],
            "observables": [matrix_to_json(a) for a in self.observables],
            "window": list(self.window),
            "integrator": integ,
            "outputs": {"sample_times": list(self.sample_times)},
        }
        if self.grid:
            out["grid"] = {k: list(v) for k, v in self.grid.items()}
        return out

    def __eq__(self, other):
        if not isinstance(other, ScenarioConfig):
            return NotImplemented
        return json.dumps(self.to_json(), sort_keys=True) == json.dumps(other.to_json(), sort_keys=True)


def _number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(where, f"expected a finite number, got {v!r}")
    return float(v)


def _number_list(v, where: str) -> list:
    if not isinstance(v, list) or not v:
        raise ConfigError(where, "expected a non-empty list of numbers")
    return [_number(x, f"{where}[{i}]") for i, x in enumerate(v)]


def _parse_model(raw) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("model", "expected an object")
    if "builtin" in raw:
        if raw["builtin"] not in BUILTINS:
            raise ConfigError("model.builtin", f"unknown builtin {raw['builtin']!r}")
        params = raw.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("model.params", "expected an object")
        unknown = set(params) - {"r", "a", "b"}
        if unknown:
            raise ConfigError("model.params", f"unknown keys {sorted(unknown)}")
        return {"builtin": raw["builtin"],
                "params": {k: _number(v, f"model.params.{k}") for k, v in params.items()}}
    out = {}
    for key in ("omega1", "omega2", "hamiltonian"):
        if key not in raw:
            raise ConfigError(f"model.{key}", "missing (or give model.builtin)")
        out[key] = poly_matrix_from_json(raw[key], f"model.{key}")
    dims = {k: v.dim for k, v in out.items()}
    if len(set(dims.values())) != 1:
        raise ConfigError("model", f"dimension mismatch {dims}")
    return out


def _parse_integrator(raw) -> IntegratorSpec:
    if raw is None:
        return IntegratorSpec.rk4(1e-3)
    if not isinstance(raw, dict):
        raise ConfigError("integrator", "expected an object")
    method = raw.get("method", RK4)
    max_steps = raw.get("max_steps", 10_000_000)
    if isinstance(max_steps, bool) or not isinstance(max_steps, int) or max_steps < 1:
        raise ConfigError("integrator.max_steps", "expected a positive integer")
    if method == RK4:
        step = _number(raw.get("step"), "integrator.step")
        if not step > 0:
            raise ConfigError("integrator.step", "must be positive")
        return IntegratorSpec.rk4(step, max_steps)
    if method == DP54:
        rtol = _number(raw.get("rtol"), "integrator.rtol")
        atol = _number(raw.get("atol"), "integrator.atol")
        if not (rtol > 0 and atol > 0):
            raise ConfigError("integrator", "rtol and atol must be positive")
        return IntegratorSpec.dp54(rtol, atol, max_steps)
    raise ConfigError("integrator.method", f"unknown method {method!r}")


def parse_config(raw) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    model = _parse_model(raw.get("model"))
    n = 2 if "builtin" in model else model["omega1"].dim

    try:
        picture = PictureTag.parse(raw.get("picture", PictureTag.HIP_Kphysical.value))
    except ValueError as exc:
        raise ConfigError("picture", str(exc)) from None

    window = raw.get("window", [0.0, 1.0])
    if not isinstance(window, list) or len(window) != 2:
        raise ConfigError("window", "expected [t_min, t_max]")
    window = (_number(window[0], "window[0]"), _number(window[1], "window[1]"))
    if not window[1] > window[0]:
        raise ConfigError("window", f"t_min < t_max required, got {list(window)}")

    psi = raw.get("initial_state", [[1.0, 0.0]] + [[0.0, 0.0]] * (n - 1))
    if not isinstance(psi, list) or len(psi) != n:
        raise ConfigError("initial_state", f"expected {n} components")
    psi = np.array([complex_from_json(z, f"initial_state[{i}]") for i, z in enumerate(psi)])
    if not np.linalg.norm(psi) > 0:
        raise ConfigError("initial_state", "must be nonzero")

    obs_raw = raw.get("observables", [])
    if not isinstance(obs_raw, list):
        raise ConfigError("observables", "expected a list of matrices")
    observables = []
    for i, o in enumerate(obs_raw):
        m = matrix_from_json(o, f"observables[{i}]")
        if m.shape[0] != n:
            raise ConfigError(f"observables[{i}]", f"expected {n}x{n}")
        if hermiticity_residual(m) > HERMITIAN_TOL * max(1.0, fro_norm(m)):
            raise ConfigError(f"observables[{i}]", "observable is not Hermitian")
        observables.append(m)

    integrator = _parse_integrator(raw.get("integrator"))

    outputs = raw.get("outputs", {})
    if not isinstance(outputs, dict):
        raise ConfigError("outputs", "expected an object")
    if "sample_times" in outputs:
        times = _number_list(outputs["sample_times"], "outputs.sample_times")
    else:
        count = outputs.get("num_samples", 11)
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ConfigError("outputs.num_samples", "expected a positive integer")
        times = np.linspace(window[0], window[1], count).tolist()
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigError("outputs.sample_times", "must be strictly increasing")
    if times[0] < window[0] or times[-1] > window[1]:
        raise ConfigError("outputs.sample_times", "must lie within the window")

    grid = {}
    raw_grid = raw.get("grid", {})
    if not isinstance(raw_grid, dict):
        raise ConfigError("grid", "expected an object")
    for key, vals in raw_grid.items():
        if key not in ("r", "a", "b", "t"):
            raise ConfigError(f"grid.{key}", "unknown grid axis")
        grid[key] = _number_list(vals, f"grid.{key}")
    if any(not window[0] <= t <= window[1] for t in grid.get("t", [])):
        raise ConfigError("grid.t", "probe times must lie within the window")

    return ScenarioConfig(model, picture, psi, observables, window, integrator, times, grid)


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", f"parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_config(raw)


def default_config(name: str) -> dict:
    if name != "toy2":
        raise ConfigError("--dump-default", f"unknown scenario {name!r}; known: {', '.join(BUILTINS)}")
    diag10 = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
    return {
        "model": {"builtin": "toy2", "params": {"r": 0.5, "a": 1.0, "b": 0.5}},
        "picture": PictureTag.HIP_Kphysical.value,
        "initial_state": [[1.0, 0.0], [0.0, 0.0]],
        "observables": [diag10],
        "window": [0.0, 1.0],
        "integrator": {"method": RK4, "step": 1e-3, "max_steps": 10_000_000},
        "outputs": {"sample_times": np.linspace(0.0, 1.0, 11).tolist()},
        "grid": {k: list(v) for k, v in DEFAULT_GRID.items()},
    }


# -- commands -------------------------------------------------------------------

def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    model = cfg.build_model()
    psi0 = map_initial_state(model, cfg.picture, cfg.initial_state)
    traj = evolve_ket(model, cfg.picture, psi0, cfg.integrator, cfg.sample_times,
                      observables=cfg.observables)
    n = model.dim
    header = ["t"]
    for i in range(n):
        header += [f"re_psi{i}", f"im_psi{i}"]
    header.append("physical_norm")
    for j in range(len(cfg.observables)):
        header += [f"re_exp{j}", f"im_exp{j}"]
    path = _out_dir(args) / "trajectory.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k, t in enumerate(traj.times):
            row = [fmt(t)]
            for z in traj.kets[k]:
                row += [fmt(z.real), fmt(z.imag)]
            row.append(fmt(traj.physical_norms[k]))
            if traj.expectations is not None:
                for z in traj.expectations[k]:
                    row += [fmt(z.real), fmt(z.imag)]
            w.writerow(row)
    print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def run_verify(cfg: ScenarioConfig, parallel: int = 1) -> verify.VerificationReport:
    observables = cfg.observables or None
    times = cfg.grid.get("t")
    if cfg.is_toy:
        base = ToyParams(**cfg.model.get("params", {}), window=cfg.window)
        axes = {k: cfg.grid.get(k, [getattr(base, k)]) for k in ("r", "a", "b")}
        kwargs = dict(times=times, window=cfg.window, spec=cfg.integrator,
                      observables=observables, psi0_aux=cfg.initial_state)
        if parallel > 1:
            with ProcessPoolExecutor(max_workers=parallel) as ex:
                return verify.run_toy_suite(axes["r"], axes["a"], axes["b"], executor=ex, **kwargs)
        return verify.run_toy_suite(axes["r"], axes["a"], axes["b"], **kwargs)
    model = cfg.build_model()
    return verify.run_identity_suite(model, times, observables=observables,
                                     psi0_aux=cfg.initial_state, spec=cfg.integrator)


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    report = run_verify(cfg, args.parallel)
    text = json.dumps(report.to_dict(), indent=2)
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
        print(json.dumps(report.summary), file=sys.stderr)
    else:
        print(text)
    return EXIT_OK if report.ok else EXIT_VERIFY_FAILED


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    times = np.linspace(cfg.window[0], cfg.window[1], args.points)
    if cfg.is_toy:
        report = verify.toy_conditioning(cfg.toy_params(), cfg.integrator, times)
    else:
        report = verify.conditioning_compare(cfg.build_model(), cfg.integrator, times)
    out = _out_dir(args)
    n = max(len(s.spectra[0]) for s in report.series.values())
    with (out / "spectra.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        header = ["picture", "t"]
        for i in range(n):
            header += [f"re_lambda{i}", f"im_lambda{i}"]
        w.writerow(header)
        for label, s in report.series.items():
            for t, spec in zip(s.times, s.spectra):
                row = [label, fmt(t)]
                for z in spec:
                    row += [fmt(z.real), fmt(z.imag)]
                w.writerow(row)
    with (out / "propagator_norms.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["picture", "t", "fro_norm", "op_norm"])
        for label, s in report.series.items():
            for t, f, o in zip(s.times, s.fro_norms, s.op_norms):
                w.writerow([label, fmt(t), fmt(f), fmt(o)])
    (out / "growth.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    print(f"wrote {out}/spectra.csv, propagator_norms.csv, growth.json", file=sys.stderr)
    return EXIT_OK


OPERATORS = {
    "H": lambda m: m.hamiltonian,
    "H1": pic.hamiltonian_h1,
    "HS": pic.hamiltonian_textbook,
    "G": lambda m: pic.generator(m, PictureTag.NIP_auxiliary),
    "G1": lambda m: pic.generator(m, PictureTag.HIP_Kphysical),
    "Sigma": pic.sigma,
    "Sigma2": pic.sigma2,
    "Theta": pic.theta,
    "Theta2": pic.theta2,
}


def cmd_spectrum(args) -> int:
    cfg = load_config(args.config)
    if args.operator not in OPERATORS and args.operator != "G_printed":
        raise ConfigError("operator", f"unknown operator {args.operator!r}; "
                          f"choose from {', '.join(OPERATORS)}, G_printed")
    if args.operator == "G_printed":
        if not cfg.is_toy:
            raise ConfigError("operator", "G_printed exists only for the toy2 model")
        op = toy_printed(cfg.toy_params()).g
    else:
        op = OPERATORS[args.operator](cfg.build_model())
    spec = eigenvalues(op(args.t))
    print(f"# eigenvalues of {args.operator} at t={fmt(args.t)}")
    print("index\tre\tim")
    for i, z in enumerate(spec):
        print(f"{i}\t{fmt(z.real)}\t{fmt(z.imag)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hipdyn", description=__doc__.splitlines()[0])
    ap.add_argument("--dump-default", metavar="NAME",
                    help="print the default config of a builtin scenario and exit")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("simulate", help="integrate a ket and write trajectory.csv")
    p.add_argument("config")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the identity suite and emit a JSON report")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="report path (default: stdout)")
    p.add_argument("--parallel", type=int, default=1, metavar="N",
                   help="fan toy grid points over N worker processes")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="NIP vs HIP generator spectra and propagator growth")
    p.add_argument("config")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--points", type=int, default=21, help="time grid size")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("spectrum", help="eigenvalues of a derived operator at time t")
    p.add_argument("config")
    p.add_argument("operator", help=", ".join(OPERATORS) + ", G_printed")
    p.add_argument("t", type=float)
    p.set_defaults(func=cmd_spectrum)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        if args.dump_default:
            print(json.dumps(default_config(args.dump_default), indent=2))
            return EXIT_OK
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_INVALID
        return args.func(args)
    except ConfigError as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SingularMatrix, NoConvergence, StepLimitExceeded, HipdynError, ArithmeticError) as exc:
        print(f"error: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
