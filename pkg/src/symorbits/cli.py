"""Command-line interface: ``symorbits <command> ...``.

Every command prints a short summary and writes a JSON document under the
output directory (``--out-dir``, else ``$SYMORBITS_OUT``, else
``./symorbits_out``).  Exit codes: 0 success, 1 validation error,
2 numerical failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import logging
import os
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import configs, frames, shooting, variational
from .configs import ConvergenceError
from .dynamics import CollisionError, PotentialLaw, SystemState
from .integrate import IntegratorConfig, StepSizeError

log = logging.getLogger("symorbits")

SCHEMA_VERSION = 1
OUT_ENV = "SYMORBITS_OUT"
DEFAULT_OUT = "symorbits_out"

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class ValidationError(ValueError):
    pass


NUMERICAL_ERRORS = (ConvergenceError, shooting.ShootingError, CollisionError, StepSizeError,
                    frames.DegenerateFitError)


# --- symbolic multiples of pi -------------------------------------------------------

_PI_RE = re.compile(r"^\s*(?P<num>[0-9]+(?:/[0-9]+)?)?\s*\*?\s*pi\s*(?:/\s*(?P<den>[0-9]+))?\s*$")


def parse_pi(text: str) -> Fraction:
    """``'2pi'``, ``'pi/4'``, ``'3pi/2'``, ``'2*pi'`` or a plain number, as a multiple of pi."""
    s = str(text).strip().lower().replace("π", "pi")
    m = _PI_RE.match(s)
    if m:
        num = Fraction(m.group("num")) if m.group("num") else Fraction(1)
        den = int(m.group("den")) if m.group("den") else 1
        if den == 0:
            raise ValidationError(f"zero denominator in {text!r}")
        return num / den
    try:
        value = float(s)
    except ValueError:
        raise ValidationError(f"cannot parse {text!r} as a multiple of pi") from None
    frac = Fraction(value / np.pi).limit_denominator(64)
    if abs(float(frac) * np.pi - value) > 1e-12 * max(1.0, abs(value)):
        raise ValidationError(f"{text!r} is not a rational multiple of pi")
    return frac


def parse_pi_list(text: str) -> list[Fraction]:
    """Comma list of values, each optionally a ``start:stop:step`` range (stop inclusive)."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            pieces = part.split(":")
            if len(pieces) != 3:
                raise ValidationError(f"range {part!r} must be start:stop:step")
            start, stop, step = (parse_pi(p) for p in pieces)
            if step <= 0 or stop < start:
                raise ValidationError(f"range {part!r} needs step > 0 and stop >= start")
            k = start
            while k <= stop:
                out.append(k)
                k += step
        else:
            out.append(parse_pi(part))
    if not out:
        raise ValidationError("empty T0 list")
    return out


def half_period(frac: Fraction) -> float:
    """Validated ``T0`` in time units from a multiple of pi."""
    T0 = float(frac) * np.pi
    if frac <= 0 or (frac * 4).denominator != 1:
        raise ValidationError(f"T0 = {frac}pi is not a positive multiple of pi/4")
    return T0


def parse_rows(text) -> tuple[int, ...] | None:
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        rows = tuple(int(r) for r in text)
    else:
        try:
            rows = tuple(int(r) for r in str(text).split(",") if r.strip())
        except ValueError:
            raise ValidationError(f"--rows expects comma-separated integers, got {text!r}") from None
    valid = {r.row for r in shooting.TABLE1}
    bad = [r for r in rows if r not in valid]
    if bad or not rows:
        raise ValidationError(f"unknown Table 1 rows {bad or rows}; valid rows are {sorted(valid)}")
    return rows


# --- configuration ---------------------------------------------------------------------

@dataclass
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    seed_tolerance: float = 1e-10
    max_iter: int = 20
    out_dir: str | None = None
    rows: list[int] | None = None
    alpha: float = 2.0
    verbose: bool = False

    def validate(self) -> "RunConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ValidationError(f"unsupported schema_version {self.schema_version}")
        for name in ("rel_tol", "abs_tol", "seed_tolerance"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be positive")
        if self.alpha < 1:
            raise ValidationError("alpha must be >= 1")
        return self

    @property
    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol)

    @property
    def newton(self) -> shooting.NewtonConfig:
        return shooting.NewtonConfig(tol=self.seed_tolerance, max_iter=self.max_iter)

    @property
    def output(self) -> Path:
        return Path(self.out_dir or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def load_config(path: str | None, overrides: dict) -> RunConfig:
    data = {}
    if path:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("config file must hold a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    if "rows" in data:
        rows = parse_rows(data["rows"])
        data["rows"] = list(rows) if rows else None
    try:
        cfg = RunConfig(**data)
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc
    return cfg.validate()


# --- persistence -------------------------------------------------------------------------

def dumps(obj) -> str:
    """Deterministic JSON text; dict insertion order is kept."""
    return json.dumps(_plain(obj), indent=2, ensure_ascii=False) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def record_id(record: shooting.OrbitRecord) -> str:
    label = record.T0_label.replace("/", "_")
    return f"{record.family}-{record.target}-{label}"


@dataclass
class OrbitStore:
    """``records/<id>.json`` plus an ``index.json`` manifest with content hashes."""

    root: Path
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        self.root = Path(self.root)
        if self.index_path.exists():
            doc = json.loads(self.index_path.read_text(encoding="utf-8"))
            self.entries = {e["id"]: e for e in doc.get("orbits", [])}

    @property
    def index_path(self) -> Path:
        return self.root / "index.json"

    def path(self, rid: str) -> Path:
        return self.root / "records" / f"{rid}.json"

    def put(self, record: shooting.OrbitRecord) -> str:
        rid = record_id(record)
        text = dumps(record.to_dict())
        target = self.path(rid)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
        self.entries[rid] = {
            "id": rid,
            "classification": record.classification,
            "family": record.family,
            "T0": record.T0,
            "T0_label": record.T0_label,
            "residual_norm": record.residual_norm,
            "closure_residual": record.closure_residual,
            "sha256": sha256(text),
        }
        self._write_index()
        return rid

    def _write_index(self):
        doc = {"schema_version": SCHEMA_VERSION,
               "orbits": [self.entries[k] for k in sorted(self.entries)]}
        self.root.mkdir(parents=True, exist_ok=True)
        self.index_path.write_text(dumps(doc), encoding="utf-8")

    def get(self, rid: str) -> shooting.OrbitRecord:
        if rid not in self.entries:
            raise KeyError(f"no orbit {rid!r} in {self.root}")
        text = self.path(rid).read_text(encoding="utf-8")
        if sha256(text) != self.entries[rid]["sha256"]:
            raise ValidationError(f"content hash mismatch for {rid}")
        return shooting.OrbitRecord.from_dict(json.loads(text))

    def verify(self) -> list[str]:
        """Ids whose record file is missing or whose hash differs."""
        bad = []
        for rid, entry in self.entries.items():
            p = self.path(rid)
            if not p.exists() or sha256(p.read_text(encoding="utf-8")) != entry["sha256"]:
                bad.append(rid)
        return bad


CSV_BODIES = (4, 0, 1, 2, 3)


def csv_header() -> list[str]:
    cols = ["t"]
    for b in CSV_BODIES:
        k = b + 1
        cols += [f"q{k}x", f"q{k}y", f"v{k}x", f"v{k}y"]
    return cols


def trajectory_csv(record: shooting.OrbitRecord, samples: int) -> str:
    """Full-period samples in body order 5, 1, 2, 3, 4 (endpoint included)."""
    if samples < 2:
        raise ValidationError("need at least 2 samples")
    problem = record.problem
    traj = shooting.propagate_restricted(dataclasses.replace(problem, primaries_mode=record.verify_mode),
                                         record.a, record.b, record.period)
    times = np.linspace(0.0, record.period, samples)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_header())
    for t in times:
        u = traj.vector_at(t)
        row = [t]
        for b in CSV_BODIES:
            row += [u[2 * b], u[2 * b + 1], u[10 + 2 * b], u[10 + 2 * b + 1]]
        writer.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def write_report(cfg: RunConfig, name: str, doc: dict) -> Path:
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.json"
    path.write_text(dumps({"schema_version": SCHEMA_VERSION, **doc}), encoding="utf-8")
    return path


# --- commands ----------------------------------------------------------------------------

def cmd_choreo_verify(args, cfg: RunConfig) -> int:
    labels = ("isosceles", "orthogonal") if args.family == "both" else (args.family,)
    reports, ok = [], True
    for label in labels:
        ic = configs._ic(label)
        if args.perturb_ic:
            q = ic.state.positions.copy()
            q[0, 0] += args.perturb_ic
            ic = dataclasses.replace(ic, state=SystemState(ic.state.t, q, ic.state.velocities))
        rep = configs.verify_choreography(ic, cfg.integrator)
        passed = rep.passed(allow_relabeling=not args.strict)
        ok &= passed
        reports.append({**dataclasses.asdict(rep), "passed": passed})
        print(f"{label:10s} period {rep.period_residual:.2e}  quarter {rep.quarter_match:.2e} "
              f"(relabelled {rep.quarter_match_relabeled:.2e})  symmetry {rep.symmetry_residual:.2e}  "
              f"{'ok' if passed else 'FAIL'}")
    write_report(cfg, "choreo_verify", {"strict": args.strict, "reports": reports})
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_spectrum(args, cfg: RunConfig) -> int:
    if args.l_max < 1:
        raise ValidationError("--l-max must be >= 1")
    if args.p < 1 or args.m < 1:
        raise ValidationError("--p and --m must be positive")
    alpha = args.alpha if args.alpha is not None else cfg.alpha
    rep = variational.spectrum_report(alpha, args.p, args.m, args.l_max)
    path = write_report(cfg, f"spectrum_a{alpha:g}_p{args.p}_m{args.m}", rep)
    print(f"alpha={alpha:g} p={args.p} m={args.m}: margin {rep['margin']:.4g}, "
          f"degenerate modes {rep['degenerate_modes']}, symmetric-subspace margin {rep['restricted_margin']}")
    print(f"wrote {path}")
    return EXIT_OK


def _summary(rec: shooting.OrbitRecord) -> str:
    return (f"{rec.family} T0={rec.T0_label}: a={rec.a:.15f} b={rec.b:.15f} "
            f"|res|={rec.residual_norm:.1e} closure={rec.closure_residual:.1e} {rec.classification}")


def _guess(args, problem):
    if args.seed in ("kepler", "comet"):
        return shooting.seed(problem, "comet")
    if args.seed == "moon":
        if args.windings is None:
            raise ValidationError("--seed moon needs --windings")
        try:
            windings = float(Fraction(args.windings))
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"--windings must be a number or fraction, got {args.windings!r}") from None
        return shooting.seed(problem, "moon", windings)
    try:
        a, b = (float(x) for x in args.seed.split(","))
    except ValueError:
        raise ValidationError(f"--seed must be kepler, moon or 'a,b'; got {args.seed!r}") from None
    return np.array([a, b])


def cmd_shoot(args, cfg: RunConfig) -> int:
    T0 = half_period(parse_pi(args.t0))
    problem = shooting.ShootingProblem(args.family, T0, args.target, cfg.integrator)
    record = shooting.solve(problem, _guess(args, problem), cfg.newton)
    rid = OrbitStore(cfg.output).put(record)
    print(_summary(record))
    print(f"stored {rid}")
    return EXIT_OK


def cmd_sweep(args, cfg: RunConfig) -> int:
    values = [half_period(f) for f in parse_pi_list(args.t0)]
    items = shooting.sweep(values, "warm-start" if args.warm_start else "kepler", args.family,
                           args.target, cfg.integrator, cfg.newton)
    store = OrbitStore(cfg.output)
    summary = []
    for item in items:
        if item.record is None:
            print(f"T0={shooting.t0_label(item.T0)}: failed ({item.failure})")
            summary.append({"T0": item.T0, "id": None, "failure": item.failure})
            continue
        rid = store.put(item.record)
        print(_summary(item.record))
        summary.append({"T0": item.T0, "id": rid, "mean_radius": item.record.mean_radius,
                        "period": item.record.period})
    write_report(cfg, "sweep", {"t0": args.t0, "warm_start": args.warm_start, "items": summary})
    return EXIT_OK if all(i.record is not None for i in items) else EXIT_NUMERICAL


def cmd_table1(args, cfg: RunConfig) -> int:
    rows = tuple(cfg.rows) if cfg.rows else None
    report = shooting.reproduce_table1(cfg.integrator, rows, cfg.newton)
    store = OrbitStore(cfg.output)
    out_rows = []
    for r in report.rows:
        entry = {"row": r.row, "published": list(r.published), "error": r.error,
                 "seconds": r.seconds, "failure": r.failure, "id": None}
        if r.record is not None:
            entry["id"] = store.put(r.record)
            entry["computed"] = [r.record.a, r.record.b]
            entry["classification"] = r.record.classification
            entry["closure_residual"] = r.record.closure_residual
            print(f"row {r.row}: error {r.error:.2e}  {_summary(r.record)}  ({r.seconds:.1f}s)")
        else:
            print(f"row {r.row}: FAILED {r.failure}")
        out_rows.append(entry)
    ok = report.all_within(args.tolerance)
    write_report(cfg, "table1", {"tolerance": args.tolerance, "rows": out_rows, "passed": ok})
    print(f"{sum(1 for r in report.rows if r.ok and r.error <= args.tolerance)}/{len(report.rows)} "
          f"rows within {args.tolerance:g}")
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_export(args, cfg: RunConfig) -> int:
    store = OrbitStore(cfg.output)
    try:
        record = store.get(args.id)
    except KeyError as exc:
        raise ValidationError(str(exc)) from None
    text = trajectory_csv(record, args.samples)
    path = Path(args.output) if args.output else cfg.output / "trajectories" / f"{args.id}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path} ({args.samples} samples over period {record.period:.6f})")
    return EXIT_OK


def cmd_frames_check(args, cfg: RunConfig) -> int:
    alpha = args.alpha if args.alpha is not None else cfg.alpha
    comet = frames.comet_conjugacy_error(frames.CometFrame(args.p, args.q, alpha), config=cfg.integrator)
    cc = configs.maxwell_configuration(4, PotentialLaw(alpha))
    moon = frames.moon_conjugacy_error(frames.MoonFrame(args.r, args.moon_q, alpha), cc, config=cfg.integrator)
    ok = max(comet, moon) <= args.tolerance
    write_report(cfg, f"frames_check_a{alpha:g}", {"alpha": alpha, "comet_error": comet,
                                                    "moon_error": moon, "tolerance": args.tolerance,
                                                    "passed": ok})
    print(f"comet frame gap {comet:.2e}, moon frame gap {moon:.2e} ({'ok' if ok else 'FAIL'})")
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_perturbation_order(args, cfg: RunConfig) -> int:
    alphas = [float(a) for a in args.alpha.split(",")] if args.alpha else [cfg.alpha]
    results = []
    for a in alphas:
        slope = frames.perturbation_order(args.kind, PotentialLaw(a))
        expected = 2.0 if args.kind == "comet" else a + 1
        results.append({"alpha": a, "slope": slope, "expected": expected})
        print(f"{args.kind} alpha={a:g}: slope {slope:.4f} (expected {expected:g})")
    write_report(cfg, f"perturbation_order_{args.kind}", {"kind": args.kind, "results": results})
    return EXIT_OK


def cmd_central_config(args, cfg: RunConfig) -> int:
    alpha = args.alpha if args.alpha is not None else cfg.alpha
    if args.n < 3:
        raise ValidationError("--n must be >= 3")
    cc = configs.maxwell_configuration(args.n, PotentialLaw(alpha))
    closure = configs.relative_equilibrium_closure(cc, cfg.integrator)
    doc = {"n": args.n, "alpha": alpha, "points": cc.points, "residual": cc.residual,
           "polygon_symmetry": configs.polygon_symmetry_residual(cc), "closure": closure}
    write_report(cfg, f"central_config_n{args.n}_a{alpha:g}", doc)
    print(f"Maxwell n={args.n} alpha={alpha:g}: residual {cc.residual:.1e}, "
          f"ring radius {np.linalg.norm(cc.points[1]):.12f}, one-period closure {closure:.1e}")
    return EXIT_OK


# --- parser -------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--rel-tol", type=float, dest="rel_tol")
    common.add_argument("--abs-tol", type=float, dest="abs_tol")
    common.add_argument("--seed-tolerance", type=float, dest="seed_tolerance",
                        help="Newton convergence tolerance on the shooting residual")
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("-v", "--verbose", action="store_true", default=None)

    p = argparse.ArgumentParser(prog="symorbits", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    choreo = sub.add_parser("choreo", help="super-eight checks").add_subparsers(dest="action", required=True)
    c = choreo.add_parser("verify", parents=[common])
    c.add_argument("--family", choices=("isosceles", "orthogonal", "both"), default="both")
    c.add_argument("--strict", action="store_true", help="no body relabelling in the quarter-period check")
    c.add_argument("--perturb-ic", type=float, default=0.0, help=argparse.SUPPRESS)
    c.set_defaults(func=cmd_choreo_verify)

    c = sub.add_parser("spectrum", parents=[common])
    c.add_argument("--alpha", type=float)
    c.add_argument("--p", type=int, default=1)
    c.add_argument("--m", type=int, default=2)
    c.add_argument("--l-max", type=int, default=50, dest="l_max")
    c.set_defaults(func=cmd_spectrum)

    for name, func in (("shoot", cmd_shoot), ("sweep", cmd_sweep)):
        c = sub.add_parser(name, parents=[common])
        c.add_argument("--family", choices=shooting.FAMILIES, default="isosceles")
        c.add_argument("--target", choices=shooting.TARGETS, default="y")
        c.add_argument("--t0", required=True, help="e.g. 2pi, 5pi/2" + (", 2pi:8pi:pi" if name == "sweep" else ""))
        if name == "shoot":
            c.add_argument("--seed", default="kepler", help="kepler, moon, or 'a,b'")
            c.add_argument("--windings", help="turns about body 1 in T0 (moon seed), e.g. 39/4")
        else:
            c.add_argument("--warm-start", action="store_true", dest="warm_start")
        c.set_defaults(func=func)

    c = sub.add_parser("table1", parents=[common])
    c.add_argument("--rows", help="comma-separated row numbers, e.g. 1,6")
    c.add_argument("--tolerance", type=float, default=1e-9)
    c.set_defaults(func=cmd_table1)

    c = sub.add_parser("export", parents=[common])
    c.add_argument("id")
    c.add_argument("--samples", type=int, default=1025)
    c.add_argument("--output")
    c.set_defaults(func=cmd_export)

    fr = sub.add_parser("frames", help="rotating-frame checks").add_subparsers(dest="action", required=True)
    c = fr.add_parser("check", parents=[common])
    c.add_argument("--alpha", type=float)
    c.add_argument("--p", type=int, default=1)
    c.add_argument("--q", type=int, default=8)
    c.add_argument("--r", type=int, default=8)
    c.add_argument("--moon-q", type=int, default=1, dest="moon_q")
    c.add_argument("--tolerance", type=float, default=1e-8)
    c.set_defaults(func=cmd_frames_check)

    c = sub.add_parser("perturbation-order", parents=[common])
    c.add_argument("--kind", choices=("comet", "moon"), required=True)
    c.add_argument("--alpha", help="comma-separated exponents")
    c.set_defaults(func=cmd_perturbation_order)

    c = sub.add_parser("central-config", parents=[common])
    c.add_argument("--n", type=int, default=4)
    c.add_argument("--alpha", type=float)
    c.set_defaults(func=cmd_central_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; here 2 means a numerical failure
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    try:
        cfg = load_config(args.config, {
            "rel_tol": args.rel_tol, "abs_tol": args.abs_tol, "seed_tolerance": args.seed_tolerance,
            "out_dir": args.out_dir, "rows": getattr(args, "rows", None), "verbose": args.verbose,
        })
        logging.basicConfig(level=logging.DEBUG if cfg.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args, cfg)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
