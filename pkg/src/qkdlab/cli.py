"""Command-line front end.

Subcommands::

    qkdlab threshold     secure widths and squeezing for an error threshold
    qkdlab loss-sweep    maximum channel length vs source width (CSV)
    qkdlab error-curve   flip probability vs source width (CSV)
    qkdlab wigner        one-sigma ellipses of the signal states (CSV/JSON)
    qkdlab estimate      Monte-Carlo raw-bit error rates
    qkdlab run           one full protocol run; exit code 0 completed, 2 aborted, 1 error

CSV output has one header row and LF line endings.  Numbers carry 17
significant digits unless ``--pretty`` is given.  The default ``--seed`` comes
from the ``QKDLAB_SEED`` environment variable, else 0.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng as rngmod
from . import security_analysis as sa
from ._errors import ContractViolation, ParameterError, ProtocolViolation
from .gkp_code import EXACT, SQRT_PI, TAIL, WINDOW, shift_error_prob
from .protocol_sim import EveModel, ProtocolConfig, Status, estimate_error_rates, run_protocol
from .transcript import dumps as transcript_dumps

EXIT_OK, EXIT_ERROR, EXIT_ABORTED = 0, 1, 2


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    lo: float
    hi: float
    points: int
    amplified: bool = False

    def __post_init__(self):
        if self.variable not in ("tilde_delta", "kappa_d"):
            raise ParameterError(f"unknown sweep variable {self.variable!r}")
        if not self.lo < self.hi:
            raise ParameterError(f"sweep range needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.points < 2:
            raise ParameterError(f"sweep needs at least 2 points, got {self.points}")

    def grid(self) -> np.ndarray:
        return np.round(np.linspace(self.lo, self.hi, self.points), 12)


def _fmt(x, pretty=False) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.6g}" if pretty else f"{float(x):.17g}"


def _csv(header, rows, pretty=False) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v, pretty) for v in row) + "\n")
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


# --- commands ---------------------------------------------------------------------

def threshold_rows(threshold: float):
    rows = []
    for t in dict.fromkeys((threshold, 0.01, 1e-6)):
        p = sa.convert(delta=sa.solve_secure_delta(t))
        rows.append({"threshold": t, "delta": p.delta, "tilde_delta": p.tilde_delta,
                     "r": p.r, "db": p.db, "r_two_mode": p.r_two_mode})
    return rows


def cmd_threshold(args) -> int:
    rows = threshold_rows(args.threshold)
    if args.json:
        _emit(json.dumps({"rows": rows, "ebits": sa.ebits(rows[0]["delta"])}, indent=2) + "\n", args.out)
    else:
        header = ["threshold", "delta", "tilde_delta", "r", "db", "r_two_mode"]
        _emit(_csv(header, ([r[h] for h in header] for r in rows), args.pretty), args.out)
    return EXIT_OK


def loss_sweep_rows(spec: SweepSpec, tilde_delta: float = 0.5):
    if spec.variable == "tilde_delta":
        header = ["tilde_delta", "kappa_d_max_noamp", "kappa_d_max_amp"]
        rows = [(t, sa.max_distance(t, False), sa.max_distance(t, True)) for t in spec.grid()]
    else:
        header = ["kappa_d", "delta_xi", "p_window", "p_exact"]
        rows = []
        for kd in spec.grid():
            d = sa.delta_xi(tilde_delta, sa.LossScenario(kd, spec.amplified))
            rows.append((kd, d, shift_error_prob(d, WINDOW), shift_error_prob(d, EXACT)))
    return header, rows


def cmd_loss_sweep(args) -> int:
    lo = args.lo if args.lo is not None else (0.01 if args.variable == "tilde_delta" else 0.0)
    hi = args.hi if args.hi is not None else (0.74 if args.variable == "tilde_delta" else 1.0)
    spec = SweepSpec(args.variable, lo, hi, args.points, args.amplify)
    header, rows = loss_sweep_rows(spec, args.tilde_delta)
    _emit(_csv(header, rows, args.pretty), args.out)
    return EXIT_OK


def error_curve_rows(spec: SweepSpec):
    rows = []
    for t in spec.grid():
        d = sa.delta_from_tilde(t)
        rows.append((t, d, shift_error_prob(d, WINDOW), shift_error_prob(d, EXACT),
                     shift_error_prob(d, TAIL)))
    return ["tilde_delta", "delta", "p_window", "p_exact", "p_tail"], rows


def cmd_error_curve(args) -> int:
    header, rows = error_curve_rows(SweepSpec("tilde_delta", args.lo, args.hi, args.points))
    _emit(_csv(header, rows, args.pretty), args.out)
    return EXIT_OK


def wigner_ellipses(tilde_delta: float, alpha: float = 1.0):
    """One-sigma Wigner ellipses of q- and p-squeezed signals on the lattice points ``-1, 0, 1``."""
    if not 0.0 < tilde_delta <= 1.0:
        raise ParameterError(f"tilde_delta must lie in (0, 1], got {tilde_delta}")
    out = []
    for basis, scale in (("q", alpha), ("p", 1.0 / alpha)):
        narrow = tilde_delta * scale / math.sqrt(2.0)
        wide = 1.0 / (tilde_delta * scale * math.sqrt(2.0))
        for k in (-1, 0, 1):
            c = k * SQRT_PI * scale
            if basis == "q":
                out.append({"basis": basis, "center_q": c, "center_p": 0.0,
                            "semi_axis_q": narrow, "semi_axis_p": wide})
            else:
                out.append({"basis": basis, "center_q": 0.0, "center_p": c,
                            "semi_axis_q": wide, "semi_axis_p": narrow})
    return out


def cmd_wigner(args) -> int:
    rows = wigner_ellipses(args.tilde_delta, args.alpha)
    if args.json:
        _emit(json.dumps(rows, indent=2) + "\n", args.out)
    else:
        header = list(rows[0])
        _emit(_csv(header, ([r[h] for h in header] for r in rows), args.pretty), args.out)
    return EXIT_OK


def _config_from_args(args) -> ProtocolConfig:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text(encoding="utf-8"))
    overrides = {
        "n": args.n, "tilde_delta": args.tilde_delta, "alpha": args.alpha, "m_bits": args.m_bits,
        "kappa_d": args.kappa_d, "abort_threshold": args.threshold, "seed": args.seed,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    if args.amplify:
        base["amplified"] = True
    if args.eve is not None:
        base["eve"] = EveModel.parse(args.eve).to_dict()
    if args.css:
        base["css"] = json.loads(Path(args.css).read_text(encoding="utf-8"))
    base.setdefault("seed", rngmod.default_seed())
    return ProtocolConfig.from_dict(base)


def cmd_estimate(args) -> int:
    config = _config_from_args(args)
    est = estimate_error_rates(config, args.trials, workers=args.workers)
    d = sa.delta_xi(config.tilde_delta, sa.LossScenario(config.kappa_d, config.amplified))
    report = {**est._asdict(), "analytic_exact": shift_error_prob(d, EXACT), "delta_xi": d}
    _emit(json.dumps(report, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    config = _config_from_args(args)
    outcome = run_protocol(config, workers=args.workers)
    if args.out:
        Path(args.out).write_text(transcript_dumps(outcome.transcript) + "\n", encoding="utf-8")
    if args.json:
        sys.stdout.write(outcome.to_json() + "\n")
    else:
        d = outcome.to_dict()
        width = max(map(len, d))
        for key, value in d.items():
            shown = _fmt(value, args.pretty) if isinstance(value, float) else value
            sys.stdout.write(f"{key:<{width}}  {shown}\n")
    return EXIT_OK if outcome.status == Status.COMPLETED else EXIT_ABORTED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qkdlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(s):
        s.add_argument("--out", metavar="PATH", help="write output to PATH instead of stdout")
        s.add_argument("--pretty", action="store_true", help="6 significant digits")

    s = sub.add_parser("threshold", help="secure widths for an error-rate threshold")
    s.add_argument("--threshold", type=float, default=sa.DEFAULT_THRESHOLD)
    s.add_argument("--json", action="store_true")
    common(s)
    s.set_defaults(func=cmd_threshold)

    s = sub.add_parser("loss-sweep", help="maximum secure channel length (CSV)")
    s.add_argument("--variable", choices=("tilde_delta", "kappa_d"), default="tilde_delta")
    s.add_argument("--lo", type=float)
    s.add_argument("--hi", type=float)
    s.add_argument("--points", type=int, default=500)
    s.add_argument("--tilde-delta", type=float, default=0.5, help="fixed width for a kappa_d sweep")
    s.add_argument("--amplify", action="store_true", help="amplified model for a kappa_d sweep")
    common(s)
    s.set_defaults(func=cmd_loss_sweep)

    s = sub.add_parser("error-curve", help="flip probability vs source width (CSV)")
    s.add_argument("--lo", type=float, default=0.05)
    s.add_argument("--hi", type=float, default=1.0)
    s.add_argument("--points", type=int, default=20)
    common(s)
    s.set_defaults(func=cmd_error_curve)

    s = sub.add_parser("wigner", help="one-sigma Wigner ellipses of the signals")
    s.add_argument("--tilde-delta", type=float, default=0.5)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--json", action="store_true")
    common(s)
    s.set_defaults(func=cmd_wigner)

    for name, func, helptext in (("run", cmd_run, "run the protocol once"),
                                 ("estimate", cmd_estimate, "Monte-Carlo raw-bit error rates")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", metavar="FILE", help="JSON ProtocolConfig; flags override it")
        s.add_argument("--css", metavar="FILE", help="JSON CSS code pair")
        s.add_argument("--seed", type=int)
        s.add_argument("--n", type=int)
        s.add_argument("--tilde-delta", type=float)
        s.add_argument("--alpha", type=float)
        s.add_argument("--m-bits", type=int)
        s.add_argument("--kappa-d", type=float)
        s.add_argument("--amplify", action="store_true")
        s.add_argument("--eve", help="none | intercept[:WIDTH] | shift:DQ,DP")
        s.add_argument("--threshold", type=float, help="abort threshold per basis")
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--trials", type=int, default=10**6)
        s.add_argument("--json", action="store_true")
        common(s)
        s.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for bad flags, which here means "aborted"
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    try:
        return args.func(args)
    except (ParameterError, ContractViolation, ProtocolViolation, OSError, ValueError) as exc:
        print(f"qkdlab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
