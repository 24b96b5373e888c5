"""Command-line front end.

Commands:
  table     render the joint-measurement outcome grid and verify it against
            an embedded reference copy (exit 1 on any mismatch)
  simulate  Monte Carlo session at one distance + finite-size analysis
  analytic  closed-form session at one distance + finite-size analysis
  sweep     rate curve over a distance grid (analytic or Monte Carlo engine)

Exit codes: 0 success, 1 verification failure, 2 config error, 3 I/O error.
Output is deterministic for a fixed config and seed, byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys

from .analysis import finite_key_rate
from .config import ConfigError, RunConfig
from .devices import transmittance
from .optics import PHASES, Window, bsm_distribution, ideal_outcome
from .protocol import run_analytic, run_monte_carlo

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_IO = 3

#: Sweep output columns, in contract order; `reason` explains rate-0 rows.
SWEEP_COLUMNS = ("distance_km", "eta", "Q_mu", "Q_nu", "E_mu", "E_nu",
                 "y1_lower", "e1_upper", "rate_asymptotic", "rate_finite",
                 "reason")

PHASE_NAMES = ("0", "pi/2", "pi", "3pi/2")

# Embedded reference grid: rows = sender phase index, columns = receiver
# phase index; an entry is (detector, outcome label) for same-basis pairs and
# None where the pair is in different bases (inconclusive, uniform outcomes).
REFERENCE_GRID_T0 = (
    ((1, "psi+"), None, (2, "psi-"), None),
    (None, (1, "psi+"), None, (2, "psi-")),
    ((2, "psi-"), None, (1, "psi+"), None),
    (None, (2, "psi-"), None, (1, "psi+")),
)
REFERENCE_GRID_T1 = (
    ((1, "phi+"), None, (2, "phi-"), None),
    (None, (2, "phi-"), None, (1, "phi+")),
    ((2, "phi-"), None, (1, "phi+"), None),
    (None, (1, "phi+"), None, (2, "phi-")),
)

_OUTCOME_LABELS = {"psi+": "Psi+", "psi-": "Psi-", "phi+": "Phi+", "phi-": "Phi-"}
_BELL_LABELS = {  # BellOutcome name -> grid label
    "PSI_PLUS": "psi+", "PSI_MINUS": "psi-", "PHI_PLUS": "phi+", "PHI_MINUS": "phi-",
}


def _live_cell(a: int, b: int, window: Window):
    """Live (detector, label) for a same-basis pair, None for cross-basis."""
    if (a ^ b) & 1:
        return None
    outcome = ideal_outcome(PHASES[a], PHASES[b], window)
    return (outcome.detector, _BELL_LABELS[outcome.name])


def _render_grid(window_name: str, cells) -> str:
    width = 9
    header = "  alpha \\ beta" + "".join(name.rjust(width) for name in PHASE_NAMES)
    lines = [f"window {window_name}:", header]
    for a in range(4):
        row = PHASE_NAMES[a].rjust(14)
        for b in range(4):
            cell = cells[a][b]
            text = "-" if cell is None else f"{_OUTCOME_LABELS[cell[1]]}@D{cell[0]}"
            row += text.rjust(width)
        lines.append(row)
    return "\n".join(lines)


def cmd_table(out=None, err=None, golden_t0=REFERENCE_GRID_T0,
              golden_t1=REFERENCE_GRID_T1) -> int:
    """Render the outcome grid computed live and verify it cell-by-cell
    against the embedded reference; nonzero exit names the first bad cell."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err

    live = {"T0": [[None] * 4 for _ in range(4)],
            "T1": [[None] * 4 for _ in range(4)]}
    for a in range(4):
        for b in range(4):
            live["T0"][a][b] = _live_cell(a, b, Window.T0)
            live["T1"][a][b] = _live_cell(a, b, Window.T1)
            if (a ^ b) & 1:
                # Cross-basis pairs must be fully inconclusive: uniform outcomes.
                dist = bsm_distribution(PHASES[a], PHASES[b])
                if any(abs(p - 0.25) > 1e-12 for p in dist.as_tuple()):
                    print(f"outcome grid mismatch: window=both alpha={PHASE_NAMES[a]} "
                          f"beta={PHASE_NAMES[b]} expected uniform outcomes, "
                          f"got {dist.as_tuple()}", file=err)
                    return EXIT_VERIFY

    for window_name, golden in (("T0", golden_t0), ("T1", golden_t1)):
        for a in range(4):
            for b in range(4):
                expected = golden[a][b]
                computed = live[window_name][a][b]
                if expected != computed:
                    print(f"outcome grid mismatch: window={window_name} "
                          f"alpha={PHASE_NAMES[a]} beta={PHASE_NAMES[b]} "
                          f"reference={expected} computed={computed}", file=err)
                    return EXIT_VERIFY

    print("joint-measurement outcome grid (computed live)", file=out)
    print("", file=out)
    print(_render_grid("T0", live["T0"]), file=out)
    print("", file=out)
    print(_render_grid("T1", live["T1"]), file=out)
    print("", file=out)
    print("all 32 cells match the embedded reference", file=out)
    return EXIT_OK


# ---- result emission -------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def _emit(text: str, path: str) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _sweep_row(distance_km: float, eta: float, report) -> dict:
    return {
        "distance_km": float(distance_km),
        "eta": float(eta),
        "Q_mu": report.gain_signal,
        "Q_nu": report.gain_decoy,
        "E_mu": report.qber_signal,
        "E_nu": report.qber_decoy,
        "y1_lower": report.y1_lower,
        "e1_upper": report.e1_upper,
        "rate_asymptotic": report.rate_asymptotic,
        "rate_finite": report.rate_per_pulse,
        "reason": report.reason,
    }


def _full_report_dict(cfg: RunConfig, engine: str, report) -> dict:
    out = {
        "command": engine,
        "distance_km": cfg.distance_km,
        "eta": float(transmittance(cfg.link())),
        "seed": cfg.seed,
        "bsm_mode": cfg.bsm_mode,
    }
    out.update(report.to_dict())
    return out


# ---- commands ---------------------------------------------------------------


def cmd_simulate(cfg: RunConfig) -> int:
    tally = run_monte_carlo(cfg.protocol_config())
    report = finite_key_rate(tally, cfg.finite_key_params(),
                             infinite_n=cfg.infinite_n)
    return _emit_report(cfg, "simulate", report)


def cmd_analytic(cfg: RunConfig) -> int:
    tally = run_analytic(cfg.protocol_config())
    report = finite_key_rate(tally, cfg.finite_key_params(),
                             infinite_n=cfg.infinite_n)
    return _emit_report(cfg, "analytic", report)


def _emit_report(cfg: RunConfig, engine: str, report) -> int:
    data = _full_report_dict(cfg, engine, report)
    if cfg.output_format == "json":
        _emit(json.dumps(data, indent=2) + "\n", cfg.output_path)
    else:
        _emit(_csv_text(tuple(data.keys()), [data]), cfg.output_path)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    rows = []
    params = cfg.finite_key_params()
    for distance in cfg.sweep_distances():
        pconfig = cfg.protocol_config(distance_km=distance)
        if cfg.sweep_engine == "monte_carlo":
            tally = run_monte_carlo(pconfig)
        else:
            tally = run_analytic(pconfig)
        report = finite_key_rate(tally, params, infinite_n=cfg.infinite_n)
        eta = transmittance(cfg.link(distance))
        rows.append(_sweep_row(distance, eta, report))
    if cfg.output_format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", cfg.output_path)
    else:
        _emit(_csv_text(SWEEP_COLUMNS, rows), cfg.output_path)
    return EXIT_OK


# ---- argument handling ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellqkd",
        description="Simulate and analyze a single-photon Bell-state-measurement "
                    "QKD link.")
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "table": "verify and print the joint-measurement outcome grid",
        "simulate": "Monte Carlo run at one distance, then finite-size analysis",
        "analytic": "closed-form run at one distance, then finite-size analysis",
        "sweep": "key-rate curve over a distance grid",
    }
    for name, helptext in descriptions.items():
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("--config", metavar="PATH",
                         help="key=value config file applied over the defaults")
        cmd.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        cmd.add_argument("--distance", type=float, metavar="KM",
                         help="link distance in km")
        cmd.add_argument("--pulses", type=lambda s: int(float(s)), metavar="N",
                         help="total emitted pulses (all intensity classes)")
        cmd.add_argument("--mode", choices=("complete", "partial"),
                         help="measurement mode (partial drops late-window outcomes)")
        cmd.add_argument("--infinite-n", action="store_true", default=None,
                         help="drop all finite-size deviation terms")
        cmd.add_argument("--format", choices=("csv", "json"), help="output format")
        cmd.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    return parser


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg.apply_text(fh.read())
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be >= 0")
        cfg.seed = args.seed
    if args.distance is not None:
        cfg.distance_km = args.distance
    if args.pulses is not None:
        cfg.n_pulses = args.pulses
    if args.mode is not None:
        cfg.bsm_mode = args.mode
    if args.infinite_n is not None:
        cfg.infinite_n = args.infinite_n
    if args.format is not None:
        cfg.output_format = args.format
    if args.out is not None:
        cfg.output_path = args.out
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "table":
        return cmd_table()
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config file: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "analytic":
            return cmd_analytic(cfg)
        return cmd_sweep(cfg)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
