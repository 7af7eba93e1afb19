"""Experiment runner.

``mcflab <stage> --config CFG --out DIR`` runs one pipeline stage; ``all``
runs them in order. Each stage reads what the previous ones wrote to
``DIR``, so stages can be rerun independently:

==============  ==========================================================
simulate        ``trajectory/`` (index plus one mesh file per snapshot)
diagnose        ``diagnostics.csv``
norms           ``norms.csv``
inequalities    ``certification.json``
rescale         ``blowup.csv`` (when the config lists thresholds)
report          ``summary.txt``
==============  ==========================================================

Exit codes: 0 success, 2 a certification failed, 3 numerical error,
4 invalid config, 5 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import ExperimentConfig, describe, load_config, shape_generate
from .diagnostics import diagnostics_rows, pinching_constant, write_diagnostics_csv
from .errors import ConfigInvalidError, MCFLabError, NotSubsolutionError
from .flow import evolve, load_trajectory, save_trajectory
from .geometry import validate
from .ineqlab import (
    constants_table,
    critical_smallness_check,
    data_constants,
    mean_curvature_bound_check,
    moser_ladder,
    prop32_check,
    reverse_holder_check,
    write_certification_json,
)
from .rescale import (
    contradiction_witness,
    normalize_window,
    select_blowup_sequence,
    vanishing_local_norms,
    write_blowup_csv,
)
from .spacetime import FlowTrajectory, ParabolicCylinder, append_norm_csv, spacetime_norm
from .suites import hat_series, load_pins

log = logging.getLogger("mcflab")

EXIT_OK, EXIT_CERT, EXIT_NUMERIC, EXIT_CONFIG, EXIT_IO = 0, 2, 3, 4, 5
STAGES = ("simulate", "diagnose", "norms", "inequalities", "rescale", "report")

TRAJ_DIR = "trajectory"
DIAG_FILE = "diagnostics.csv"
NORM_FILE = "norms.csv"
CERT_FILE = "certification.json"
BLOWUP_FILE = "blowup.csv"
SUMMARY_FILE = "summary.txt"


@dataclass
class Run:
    cfg: ExperimentConfig
    out: Path
    quiet: bool = False
    traj: Optional[FlowTrajectory] = None
    failures: List[str] = field(default_factory=list)

    def trajectory(self) -> FlowTrajectory:
        if self.traj is None:
            self.traj = load_trajectory(self.out / TRAJ_DIR)
        return self.traj

    def say(self, msg: str):
        if not self.quiet:
            print(msg)

    @property
    def c_n(self) -> float:
        return self.cfg.c_n if self.cfg.c_n is not None else float(load_pins()["c_n"])


# ----------------------------------------------------------------------------
# stages


def stage_simulate(run: Run):
    cfg = run.cfg
    mesh = shape_generate(cfg.shape, cfg.seed)
    validate(mesh).raise_for_violations()
    run.traj = evolve(mesh, cfg.stop, snapshot_stride=cfg.stride, safety=cfg.safety)
    save_trajectory(run.traj, run.out / TRAJ_DIR)
    t = run.traj
    run.say(f"simulate: {len(t)} snapshots, t_end = {t.times[-1]:.6g}, reason {t.reason}")


def stage_diagnose(run: Run):
    traj = run.trajectory()
    write_diagnostics_csv(run.out / DIAG_FILE, diagnostics_rows(traj, run.cfg.name))
    rep = pinching_constant(traj)
    run.say(f"diagnose: B = {rep.B:.6g}")


def _window(run: Run):
    cfg = run.cfg
    return normalize_window(run.trajectory(), cfg.window_t, cfg.window_Q, cfg.center)


def stage_norms(run: Run):
    traj = run.trajectory()
    cfg = run.cfg
    path = run.out / NORM_FILE
    path.unlink(missing_ok=True)
    reports = [spacetime_norm(traj, "H", p) for p in cfg.norm_exponents]
    reports.append(spacetime_norm(traj, 1.0, 1.0))
    append_norm_csv(path, cfg.name, reports)
    if _has_window(cfg):
        win = _window(run)
        n = traj.dim
        cyl = [spacetime_norm(win.traj, "H", n + 2.0, ParabolicCylinder(tuple(win.center), k))
               for k in range(cfg.k_max + 1)]
        cyl.append(spacetime_norm(win.traj, "H", n + 2.0, ParabolicCylinder(tuple(win.center), math.inf)))
        append_norm_csv(path, cfg.name + ":window", cyl)
    for r in reports[:-1]:
        run.say(f"norms: ||H||_L{r.p:g}(S) = {r.value:.8g}")
    run.say(f"norms: spacetime volume = {reports[-1].value:.8g}")


def _has_window(cfg: ExperimentConfig) -> bool:
    return cfg.window


def _prefixed(name: str, table) -> dict:
    return {f"{name}.{k}": v for k, v in table.as_dict().items()}


def stage_inequalities(run: Run):
    cfg = run.cfg
    records: List[dict] = []
    constants = {"c_n": run.c_n}
    if not _has_window(cfg):
        records.append(dict(check="inequalities", certified=None, note="no [window] configured"))
        write_certification_json(run.out / CERT_FILE, records, constants)
        run.say("inequalities: no window configured")
        return
    win = _window(run)
    w = win.traj
    n = w.dim
    B = cfg.B if cfg.B is not None else pinching_constant(w).B
    Hhat, f = hat_series(w, B)
    q = cfg.q if cfg.q is not None else (n + 2.0) ** 2 / (2.0 * n)
    beta = cfg.beta if cfg.beta is not None else n + 2.0
    C0, C1 = data_constants(w, f, q)
    main = constants_table(n, q, beta, C0, C1, run.c_n, cfg.mode)
    constants.update(_prefixed("main", main))
    constants.update({"window.Q": win.Q, "window.t_i": win.t_i, "window.B": B})

    try:
        rh = reverse_holder_check(w, Hhat, f, beta, 1, main, win.center)
        records.append(rh.record(constants="main"))
        ladder = moser_ladder(w, Hhat, f, beta, cfg.k_max, main, win.center)
        records.extend(dict(r, constants="main") for r in ladder.records())
        C0c, _ = data_constants(w, f, (n + 2.0) / 2.0)
        crit = constants_table(n, (n + 2.0) / 2.0, beta, C0c, C1, run.c_n, cfg.mode)
        constants.update(_prefixed("critical", crit))
        sm = critical_smallness_check(w, Hhat, f, beta, crit, win.center)
        records.append(dict(sm.record(), constants="critical"))
    except NotSubsolutionError as exc:
        records.append(dict(check="subsolution", certified=False, note=str(exc), constants="main"))

    mcb = mean_curvature_bound_check(w, B, run.c_n, win.center, cfg.mode)
    constants.update(_prefixed("mean_curvature", mcb.constants))
    records.append(dict(mcb.record(), constants="mean_curvature"))
    if n == 2:
        p32 = prop32_check(w, Hhat)
        records.append(p32.record(constants="c_n", certified=bool(p32.ratio <= run.c_n)))

    write_certification_json(run.out / CERT_FILE, records, constants)
    failed = [r["check"] for r in records if r.get("certified") is False]
    run.failures.extend(failed)
    ok = sum(r.get("certified") is True for r in records)
    run.say(f"inequalities: {ok} certified, {len(failed)} failed, {len(records) - ok - len(failed)} not applicable")


def stage_rescale(run: Run):
    cfg = run.cfg
    path = run.out / BLOWUP_FILE
    if not cfg.thresholds:
        path.unlink(missing_ok=True)
        run.say("rescale: no thresholds configured")
        return
    traj = run.trajectory()
    seq = select_blowup_sequence(traj, cfg.thresholds)
    B = cfg.B if cfg.B is not None else pinching_constant(traj).B
    van = vanishing_local_norms(seq, B)
    wit = contradiction_witness(seq, run.c_n, B, cfg.mode)
    write_blowup_csv(path, wit)
    run.say(f"rescale: {len(seq)} entries, Q = {np.array2string(seq.Q, precision=4)}, "
            f"local norm slope {van.slope:.3g}")


def _read_csv(path: Path):
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def stage_report(run: Run):
    out = run.out
    lines = [f"experiment {run.cfg.name}", describe(run.cfg)]
    if (out / TRAJ_DIR / "index.txt").exists():
        idx = (out / TRAJ_DIR / "index.txt").read_text().splitlines()
        rows = [ln.split() for ln in idx if ln and not ln.startswith("#")]
        lines.append(f"trajectory: {len(rows)} snapshots, t_end {float(rows[-1][1]):.12g}, "
                     f"{idx[0].lstrip('# ')}")
    if (out / NORM_FILE).exists():
        for r in _read_csv(out / NORM_FILE):
            k = f" k={r['k']}" if r["k"] else ""
            lines.append(f"norm {r['experiment']} {r['region']}{k} p={r['p']}: {r['value']} ({r['samples']} samples)")
    if (out / CERT_FILE).exists():
        doc = json.loads((out / CERT_FILE).read_text())
        for r in doc["records"]:
            verdict = {True: "certified", False: "FAILED", None: "n/a"}[r.get("certified")]
            lines.append(f"check {r['check']}{'' if 'k' not in r else ' k=%s' % r['k']}: {verdict}")
    if (out / BLOWUP_FILE).exists():
        for r in _read_csv(out / BLOWUP_FILE):
            lines.append(f"blowup entry {r['entry']}: Q={r['Q']} local={r['localNormSum']} "
                         f"sup={r['supHplus']} hypothesis={r['hypothesisMet']}")
    (out / SUMMARY_FILE).write_text("\n".join(lines) + "\n")
    run.say(f"report: {out / SUMMARY_FILE}")


STAGE_FUNCS = dict(
    simulate=stage_simulate,
    diagnose=stage_diagnose,
    norms=stage_norms,
    inequalities=stage_inequalities,
    rescale=stage_rescale,
    report=stage_report,
)


# ----------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mcflab", description="Mean curvature flow laboratory.")
    p.add_argument("stage", choices=STAGES + ("all",))
    p.add_argument("--config", required=True, help="config file, or a bundled name: circle-exact, sphere-moser")
    p.add_argument("--out", help="output directory (default: runs/<experiment name>)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--stride", type=int, help="override the snapshot stride")
    p.add_argument("--quiet", action="store_true", help="print nothing on success")
    return p


def run(stage: str, cfg: ExperimentConfig, out, quiet: bool = False) -> int:
    """Run one stage (or ``all``) and return the exit code."""
    r = Run(cfg, Path(out), quiet)
    try:
        r.out.mkdir(parents=True, exist_ok=True)
        for name in (STAGES if stage == "all" else (stage,)):
            STAGE_FUNCS[name](r)
    except ConfigInvalidError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (MCFLabError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if r.failures:
        print(f"certification failed: {', '.join(r.failures)}", file=sys.stderr)
        return EXIT_CERT
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config).with_overrides(args.seed, args.stride)
    except ConfigInvalidError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    out = args.out if args.out else Path("runs") / cfg.name
    return run(args.stage, cfg, out, args.quiet)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
