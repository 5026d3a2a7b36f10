"""Command-line entry point: eik <kind> --config path.json [--out path.csv] [--seed N] [--tol X]."""

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import classical, dynamics, measurement, qmaxent, weak
from .config import KINDS, ExperimentConfig, validate_config
from .errors import ConfigInvalid, EIKError
from .linalg import matrix_from_json

log = logging.getLogger("eik")


@dataclass
class ResultTable:
    headers: list
    rows: list

    def __post_init__(self):
        width = len(self.headers)
        if any(len(r) != width for r in self.rows):
            raise ValueError("result table is not rectangular")

    def to_csv(self):
        """CSV text; any column holding complex values becomes a (_re, _im) pair."""
        cplx = [any(isinstance(r[j], (complex, np.complexfloating)) for r in self.rows) for j in range(len(self.headers))]
        head = []
        for h, c in zip(self.headers, cplx):
            head.extend([f"{h}_re", f"{h}_im"] if c else [h])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(head)
        for row in self.rows:
            out = []
            for v, c in zip(row, cplx):
                out.extend([_fmt(float(np.real(v))), _fmt(float(np.imag(v)))] if c else [_fmt(v)])
            w.writerow(out)
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _complex_list(values):
    out = []
    for v in values:
        out.append(complex(v[0], v[1]) if isinstance(v, list) else complex(v))
    return np.array(out)


def _matrix_rows(label, m):
    return [[label, i, j, float(m[i, j].real), float(m[i, j].imag)] for i in range(m.shape[0]) for j in range(m.shape[1])]


_MATRIX_HEADERS = ["label", "row", "col", "re", "im"]


def _fmt_matrix(m):
    return "[" + ", ".join("[" + ", ".join(f"{v.real:.6f}{v.imag:+.6f}j" for v in row) + "]" for row in m) + "]"


def _qconstraints(items):
    return qmaxent.QuantumConstraintSet(
        [matrix_from_json(c["observable"]) for c in items], [c["target"] for c in items]
    )


def _run_classical(cfg, tol):
    inp = cfg.inputs
    cons = [classical.MomentConstraint(c["observable"], c["target"]) for c in inp["constraints"]]
    post, alpha = classical.maxent_update(inp["prior"], cons, tol=tol or 1e-10)
    prior = np.asarray(inp["prior"], dtype=float)
    rows = [[i, float(prior[i]), float(post[i])] for i in range(prior.size)]
    resid = [float(c.observable @ post - c.target) for c in cons]
    summary = f"multipliers={np.array2string(alpha, precision=8)} max_residual={max(map(abs, resid), default=0.0):.3e}"
    return ResultTable(["index", "prior", "posterior"], rows), summary


def _run_qmaxent(cfg, tol):
    inp = cfg.inputs
    prior = matrix_from_json(inp["prior"])
    cs = _qconstraints(inp["constraints"])
    post, dual = qmaxent.qmaxent_update(prior, cs, tol=tol or 1e-8)
    summary = (
        f"multipliers={np.array2string(dual.multipliers, precision=8)} "
        f"max_residual={np.max(np.abs(dual.residuals), initial=0.0):.3e} iterations={dual.iterations}"
    )
    return ResultTable(_MATRIX_HEADERS, _matrix_rows("posterior", post)), summary


def _kraus(inp):
    return measurement.KrausModel([matrix_from_json(m) for m in inp["kraus"]])


def _run_qbr(cfg, tol):
    inp = cfg.inputs
    joint = measurement.build_decohered_joint(matrix_from_json(inp["prior"]), _kraus(inp))
    if "detected" in inp:
        closed = measurement.quantum_bayes(joint, inp["detected"])
        via = measurement.quantum_bayes_maxent(joint, inp["detected"], tol=tol or 1e-10)
        rule = "bayes"
    else:
        closed = measurement.quantum_jeffreys(joint, inp["data"])
        via = measurement.quantum_jeffreys_maxent(joint, inp["data"], tol=tol or 1e-10)
        rule = "jeffreys"
    dev = float(np.max(np.abs(closed - via)))
    probs = joint.outcome_probs()
    summary = f"rule={rule} outcome_probs={np.array2string(probs, precision=8)} maxent_deviation={dev:.3e}"
    return ResultTable(_MATRIX_HEADERS, _matrix_rows("posterior", closed)), summary


def _run_spin(cfg, tol):
    inp = cfg.inputs
    alpha, post = qmaxent.spin_2x2_analytic(inp["a"], inp["b"], inp["c"], inp["target"])
    c1, cx, cy, cz = inp["c"]
    obs = c1 * np.eye(2) + cx * np.array([[0, 1], [1, 0]]) + cy * np.array([[0, -1j], [1j, 0]]) + cz * np.diag([1, -1])
    gen, dual = qmaxent.qmaxent_update(
        np.diag([inp["a"], inp["b"]]), qmaxent.QuantumConstraintSet([obs], [inp["target"]]), tol=tol or 1e-12
    )
    dev = float(np.max(np.abs(gen - post)))
    summary = (
        f"alpha={alpha:.6f} posterior={_fmt_matrix(post)} "
        f"general_alpha={dual.multipliers[0]:.6f} solver_agreement={dev:.3e}"
    )
    return ResultTable(_MATRIX_HEADERS, _matrix_rows("posterior", post)), summary


def _run_ed(cfg, tol):
    inp = cfg.inputs
    g = inp["grid"]
    grid = dynamics.LatticeGrid(g["n_points"], g["dx"], g.get("origin", -0.5 * g["n_points"] * g["dx"]))
    p = inp["params"]
    mass, hbar = p.get("mass", 1.0), p.get("hbar", 1.0)
    omega = p.get("harmonic_omega", 0.0)
    params = dynamics.EDParams(
        dt=p["dt"],
        mass=mass,
        hbar=hbar,
        potential=0.5 * mass * omega ** 2 * grid.x ** 2,
        vector_potential=np.full(grid.n_points, float(p.get("vector_potential", 0.0))),
    )
    s = inp["initial_state"]
    psi0 = dynamics.WaveState.gaussian(grid, s["x0"], s["sigma"], s.get("p0", 0.0), hbar)
    co = dynamics.co_evolve(psi0, params, inp["n_steps"])
    every = inp.get("outputs", {}).get("every", 1)
    headers = ["step", "t"] + [f"rho_{j}" for j in range(grid.n_points)]
    rows = []
    for k in range(0, inp["n_steps"] + 1, every):
        rows.append([k, float(co.times[k])] + [float(v) for v in co.rho_schrodinger[k]])
    _, var = dynamics.position_moments(grid, co.rho_schrodinger[-1])
    summary = f"fp_se_max_l1_deviation={co.max_deviation:.3e} final_variance={var:.6f}"
    if omega == 0 and p.get("vector_potential", 0.0) == 0:
        expect = dynamics.free_packet_variance(s["sigma"], co.times[-1], mass, hbar)
        summary += f" free_variance={expect:.6f}"
    return ResultTable(headers, rows), summary


def _run_weak(cfg, tol):
    inp = cfg.inputs
    sysp = weak.SystemPrep(_complex_list(inp["amplitudes"]), inp["eigenvalues"])
    post = weak.PostselectionSpec(_complex_list(inp["postselection"]))
    pointer = weak.PointerModel.for_system(sysp, inp["delta"])
    c = inp.get("c", 1.0)
    readout = weak.weak_value_pointer_distributions(sysp, post, pointer, c=c)
    rng = np.random.default_rng(cfg.seed if cfg.seed is not None else 0)
    n = inp["n_samples"]
    d_samples = weak.sample_from_pdf(readout.d_grid, readout.position_pdf, n, rng)
    q_samples = weak.sample_from_pdf(readout.q_grid, readout.momentum_pdf, n, rng)
    re_est, re_err = weak.estimate_weak_value_from_samples(d_samples, pointer)
    im_est, im_err = weak.estimate_weak_value_from_samples(q_samples, pointer, c=c)
    rows = [["position_pdf", float(x), float(v)] for x, v in zip(readout.d_grid, readout.position_pdf)]
    rows += [["momentum_pdf", float(x), float(v)] for x, v in zip(readout.q_grid, readout.momentum_pdf)]
    rows += [
        ["weak_value_re", 0.0, readout.weak_value.real],
        ["weak_value_im", 0.0, readout.weak_value.imag],
        ["estimate_re", 0.0, re_est],
        ["stderr_re", 0.0, re_err],
        ["estimate_im", 0.0, im_est],
        ["stderr_im", 0.0, im_err],
    ]
    summary = (
        f"weak_value={readout.weak_value.real:.6f}{readout.weak_value.imag:+.6f}j "
        f"estimate_re={re_est:.6f} stderr_re={re_err:.6f} estimate_im={im_est:.6f} stderr_im={im_err:.6f} "
        f"regime_ok={readout.regime_ok}"
    )
    return ResultTable(["quantity", "coordinate", "value"], rows), summary


def _run_thermal(cfg, tol):
    inp = cfg.inputs
    joint = measurement.build_decohered_joint(matrix_from_json(inp["prior"]), _kraus(inp))
    beta, post = measurement.thermal_jeffreys(joint, inp["energies"], inp["target_energy"])
    return ResultTable(_MATRIX_HEADERS, _matrix_rows("posterior", post)), f"beta={beta:.8f}"


def _run_noncommute(cfg, tol):
    inp = cfg.inputs
    rep = measurement.sequential_vs_simultaneous(
        matrix_from_json(inp["prior"]), _qconstraints(inp["cs1"]), _qconstraints(inp["cs2"]), tol=tol or 1e-10
    )
    rows = _matrix_rows("rho_12", rep.rho_12) + _matrix_rows("rho_21", rep.rho_21) + _matrix_rows("rho_3", rep.rho_3)
    res3 = max(np.max(np.abs(rep.residuals["3"]["cs1"])), np.max(np.abs(rep.residuals["3"]["cs2"])))
    dist = " ".join(f"d[{k}]={v:.6f}" for k, v in rep.distances.items())
    return ResultTable(_MATRIX_HEADERS, rows), f"{dist} simultaneous_max_residual={res3:.3e}"


RUNNERS = {
    "classical-maxent": _run_classical,
    "qmaxent": _run_qmaxent,
    "qbr": _run_qbr,
    "spin-demo": _run_spin,
    "ed-sim": _run_ed,
    "weak-demo": _run_weak,
    "thermal": _run_thermal,
    "noncommute-demo": _run_noncommute,
}


def run_experiment(config: ExperimentConfig):
    """Dispatch a validated config; returns (ResultTable, one-line summary)."""
    log.info("running %s", config.kind)
    return RUNNERS[config.kind](config, config.tol)


def _error_line(kind, exc, field=None):
    payload = {"error": kind, "type": type(exc).__name__, "message": str(exc).replace("\n", " ")}
    if field is not None:
        payload["field"] = field
    return json.dumps(payload, sort_keys=True)


def build_parser():
    p = argparse.ArgumentParser(prog="eik", description="Entropic inference experiments")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--config", required=True, help="path to the JSON experiment config")
    p.add_argument("--out", help="CSV output path (stdout when omitted)")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("--tol", type=float, help="solver tolerance")
    return p


def main(argv=None):
    logging.basicConfig(
        level=getattr(logging, os.environ.get("EIK_LOG", "error").upper(), logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            raw = fh.read()
        cfg = validate_config(raw, args.kind, args.out, args.seed, args.tol)
    except ConfigInvalid as exc:
        print(_error_line("ConfigInvalid", exc, exc.field), file=sys.stderr)
        return 2
    except OSError as exc:
        print(_error_line("ConfigInvalid", exc, "config"), file=sys.stderr)
        return 2
    try:
        table, summary = run_experiment(cfg)
    except (EIKError, ValueError, np.linalg.LinAlgError) as exc:
        print(_error_line("ComputationFailed", exc), file=sys.stderr)
        return 1
    text = table.to_csv()
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
