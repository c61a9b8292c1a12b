"""Experiment harness: one JSON config per run, CSV/JSON/PNG out.

Subcommands: analyze, capacity, protocol, bounds, rmcheck.  Identical
(config, seed) pairs produce byte-identical CSV and JSON output; the
bounds and rmcheck commands exit nonzero when any configured check
fails its margin.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from . import fsc as fsc_mod
from . import gf2, inforate, report, rmcode
from .decoder import ProtocolParams, run_protocol
from .seeding import derive_rng

BOUNDS_CSV_FIELDS = ["exact", "coupling_bound", "certificate_bound", "margin", "pass"]


def _load_config(path: str) -> tuple[dict, Path]:
    cfg_path = Path(path)
    with open(cfg_path) as fh:
        return json.load(fh), cfg_path.parent


def _resolve_channel(cfg: dict, base_dir: Path) -> tuple[fsc_mod.FscSpec, str]:
    chan = cfg.get("channel")
    if chan is None:
        raise fsc_mod.SpecValidationError("config is missing the 'channel' section")
    if "name" in chan:
        params = chan.get("params", {})
        spec = fsc_mod.builtin(chan["name"], **params)
        rendered = ",".join(f"{k}={report.fmt(v)}" for k, v in sorted(params.items()))
        return spec, f"{chan['name']}({rendered})"
    if "kernel_path" in chan:
        path = Path(chan["kernel_path"])
        if not path.is_absolute():
            path = base_dir / path
        return fsc_mod.load_kernel(path), f"json:{chan['kernel_path']}"
    if "kernel" in chan:
        return fsc_mod.from_json(chan["kernel"]), "inline-kernel"
    raise fsc_mod.SpecValidationError(
        "channel section needs 'name', 'kernel_path', or 'kernel'"
    )


def _out_dir(args, cfg: dict) -> Path:
    out = Path(args.out or cfg.get("out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args, cfg: dict) -> int:
    if args.seed is not None:
        return args.seed
    return int(cfg.get("seed", 0))


def _jobs(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("RMFSC_JOBS")
    return max(1, int(env)) if env else 1


# ---------------------------------------------------------------------------
# analyze


def cmd_analyze(args) -> int:
    cfg, base = _load_config(args.config)
    spec, label = _resolve_channel(cfg, base)
    out = _out_dir(args, cfg)
    t_max = int(cfg.get("t_max", 100))
    l_max = int(cfg.get("l_max", 8))
    n_max = int(cfg.get("injectivity_n_max", 3))

    phi = fsc_mod.uniform_phi(spec)
    closed, transient = fsc_mod.recurrent_classes(phi)
    k = fsc_mod.is_primitive(phi)
    indec = fsc_mod.check_indecomposable(spec, l_max)
    payload = {
        "channel": label,
        "qx": spec.qx,
        "qy": spec.qy,
        "ns": spec.ns,
        "uniform_phi": phi.tolist(),
        "recurrent_classes": closed,
        "transient_states": transient,
        "primitive_k": k,
        "indecomposability": {"verdict": indec.verdict, "L": indec.L},
    }
    if len(closed) == 1:
        pi = fsc_mod.stationary(phi)
        payload["stationary"] = pi.tolist()
        injective = {}
        for n in range(1, n_max + 1):
            try:
                injective[str(n)] = bool(fsc_mod.is_injective_fsc(spec, n))
            except fsc_mod.EnumerationLimitError:
                injective[str(n)] = None
        payload["injective_at_n"] = injective
    if k is not None:
        cert = fsc_mod.mixing_certificate(phi)
        payload["mixing_certificate"] = {"k": cert.k, "alpha": cert.alpha}
        decay = bounds_mod.mixing_decay(phi, t_max, cert)
        report.write_csv(
            out / "mixing.csv",
            ["lemma", "t"] + BOUNDS_CSV_FIELDS,
            report.bound_report_rows(decay, ["t"]),
        )
        report.figure_mixing(decay, out / "mixing.png")
        payload["mixing_decay_pass"] = decay.passed
    report.write_json(out / "analyze.json", payload)
    print(f"channel: {label}")
    print(f"  recurrent classes: {closed}, transient: {transient}")
    print(f"  primitive: {'k=%d' % k if k else 'no'}")
    print(f"  indecomposable: {indec.verdict} (L={indec.L})")
    if "stationary" in payload:
        print(f"  stationary: {payload['stationary']}")
    if "mixing_certificate" in payload:
        print(f"  certificate: {payload['mixing_certificate']}")
    if "injective_at_n" in payload:
        print(f"  injective at n: {payload['injective_at_n']}")
    return 0


# ---------------------------------------------------------------------------
# capacity


def cmd_capacity(args) -> int:
    cfg, base = _load_config(args.config)
    spec, label = _resolve_channel(cfg, base)
    out = _out_dir(args, cfg)
    seed = _seed(args, cfg)
    b_max = int(cfg.get("b_max", 6))
    sir_n = int(cfg.get("sir_n", 100_000))
    sir_seeds = int(cfg.get("sir_seeds", 10))

    block_reports = [inforate.exact_block_mi(spec, b) for b in range(1, b_max + 1)]
    sir_reports = [
        inforate.sir_estimate(spec, sir_n, derive_rng(seed, i)) for i in range(sir_seeds)
    ]
    combined = inforate.combine_estimates(sir_reports) if sir_reports else None

    rows = [[label, r.horizon, r.bits, None, None] for r in block_reports]
    rows += [
        [label, r.horizon, r.bits, None, i] for i, r in enumerate(sir_reports)
    ]
    if combined is not None:
        rows.append([label, combined.horizon, combined.bits, combined.stderr, "combined"])
    report.write_csv(
        out / "capacity.csv", ["channel", "b_or_n", "rate_bits", "stderr", "seed"], rows
    )
    report.figure_capacity(block_reports, sir_reports, combined, out / "capacity.png")
    print(f"block MI (b=1..{b_max}): {[report.fmt(r.bits) for r in block_reports]}")
    if combined is not None:
        print(
            f"SIR estimate (n={sir_n}, {sir_seeds} seeds): "
            f"{report.fmt(combined.bits)} +/- {report.fmt(combined.stderr)}"
        )
    return 0


# ---------------------------------------------------------------------------
# protocol


def cmd_protocol(args) -> int:
    cfg, base = _load_config(args.config)
    spec, label = _resolve_channel(cfg, base)
    out = _out_dir(args, cfg)
    seed = _seed(args, cfg)
    params = ProtocolParams(
        r=int(cfg["r"]),
        m=int(cfg["m"]),
        h=int(cfg["h"]),
        g=int(cfg["g"]),
        channel=spec,
        trials=int(cfg.get("trials", 1000)),
        seed=seed,
    )
    summary = run_protocol(params, jobs=_jobs(args))
    payload = {
        "channel": label,
        "r": params.r,
        "m": params.m,
        "h": params.h,
        "g": params.g,
        "trials": params.trials,
        "seed": seed,
        "ber": summary.ber,
        "stderr": summary.stderr,
        "ser_per_phase": {str(z): v for z, v in summary.ser_per_phase.items()},
        "ber_per_phase": {str(z): v for z, v in summary.ber_per_phase.items()},
    }
    report.write_json(out / "protocol_summary.json", payload)
    report.write_csv(
        out / "protocol_trials.csv",
        ["trial", "phase_z", "symbol_errors", "bit_errors"],
        [
            [t, ph.z, ph.symbol_errors, ph.bit_errors]
            for t, ph in summary.trial_records
        ],
    )
    report.figure_protocol(
        [{"label": label, "ber": summary.ber, "stderr": summary.stderr}],
        out / "protocol.png",
    )
    print(
        f"BER = {report.fmt(summary.ber)} +/- {report.fmt(summary.stderr)} "
        f"over {params.trials} trials; per-phase SER "
        f"{ {z: report.fmt(v) for z, v in summary.ser_per_phase.items()} }"
    )
    return 0


# ---------------------------------------------------------------------------
# bounds


def _default_bounds_checks() -> dict:
    return {
        "mixing": {"t_max": 100},
        "doeblin": {"trials": 1000},
        "decimated": {"T": list(range(1, 9)), "n": [2, 3]},
        "blocked": {"b": [1, 2], "n": [2, 3], "d": [1, 2, 3, 4], "x_mode": "all"},
    }


def cmd_bounds(args) -> int:
    cfg, base = _load_config(args.config)
    spec, label = _resolve_channel(cfg, base)
    out = _out_dir(args, cfg)
    seed = _seed(args, cfg)
    checks = cfg.get("checks", _default_bounds_checks())
    phi = fsc_mod.uniform_phi(spec)
    all_pass = True

    if "mixing" in checks:
        rep = bounds_mod.mixing_decay(phi, int(checks["mixing"].get("t_max", 100)))
        report.write_csv(
            out / "bounds_mixing.csv",
            ["lemma", "t"] + BOUNDS_CSV_FIELDS,
            report.bound_report_rows(rep, ["t"]),
        )
        report.figure_mixing(rep, out / "bounds_mixing.png")
        all_pass &= rep.passed
        print(f"mixing_decay: {'pass' if rep.passed else 'FAIL'} "
              f"(worst margin {report.fmt(rep.worst_margin)})")

    if "doeblin" in checks:
        cert = fsc_mod.mixing_certificate(phi)
        power = np.linalg.matrix_power(phi, cert.k)
        alpha = checks["doeblin"].get("alpha")
        alpha = cert.alpha if alpha is None else float(alpha)
        rep = bounds_mod.doeblin_check(
            power, alpha, int(checks["doeblin"].get("trials", 1000)), derive_rng(seed, 0)
        )
        report.write_csv(
            out / "bounds_doeblin.csv",
            ["lemma", "pair"] + BOUNDS_CSV_FIELDS,
            report.bound_report_rows(rep, ["pair"]),
        )
        all_pass &= rep.passed
        print(f"doeblin_contraction: {'pass' if rep.passed else 'FAIL'} "
              f"(worst margin {report.fmt(rep.worst_margin)})")

    if "decimated" in checks:
        rows = []
        ok = True
        for big_t in checks["decimated"].get("T", range(1, 9)):
            for n in checks["decimated"].get("n", [2, 3]):
                rep = bounds_mod.decimated_chain_tv(phi, int(big_t), int(n))
                rows += report.bound_report_rows(rep, ["T", "n"])
                ok &= rep.passed
        report.write_csv(
            out / "bounds_decimated.csv", ["lemma", "T", "n"] + BOUNDS_CSV_FIELDS, rows
        )
        all_pass &= ok
        print(f"decimated_chain_tv: {'pass' if ok else 'FAIL'}")

    if "blocked" in checks:
        blk = checks["blocked"]
        reps = []
        ok = True
        rows = []
        for b, n, d in itertools.product(
            blk.get("b", [1, 2]), blk.get("n", [2, 3]), blk.get("d", [1, 2, 3, 4])
        ):
            rep = bounds_mod.blocked_decimated_tv(
                spec,
                int(b),
                int(d),
                int(n),
                x_mode=blk.get("x_mode", "all"),
                sample_k=int(blk.get("sample_k", 16)),
                rng=derive_rng(seed, 1),
            )
            reps.append(rep)
            rows += report.bound_report_rows(rep, ["b", "d", "n", "x"])
            ok &= rep.passed
        report.write_csv(
            out / "bounds_blocked.csv",
            ["lemma", "b", "d", "n", "x"] + BOUNDS_CSV_FIELDS,
            rows,
        )
        report.figure_blocked_tv(reps, out / "bounds_blocked.png")
        all_pass &= ok
        print(f"blocked_decimated_tv: {'pass' if ok else 'FAIL'}")

    print(f"bounds on {label}: {'ALL PASS' if all_pass else 'FAILURES PRESENT'}")
    return 0 if all_pass else 1


# ---------------------------------------------------------------------------
# rmcheck


def cmd_rmcheck(args) -> int:
    cfg, _ = _load_config(args.config)
    out = _out_dir(args, cfg)
    seed = _seed(args, cfg)
    m_max = int(cfg.get("m_max", 6))
    g_max = int(cfg.get("g_max", 2))
    irm_m_max = int(cfg.get("irm_m_max", 5))
    h_max = int(cfg.get("h_max", 2))
    k_max = int(cfg.get("rate_k_max", 3))
    auto_r, auto_m = cfg.get("automorphism_code", [2, 5])
    draws = int(cfg.get("automorphism_draws", 100))

    rows = []
    all_pass = True

    def add(check: str, r, m, aux, value, ok: bool) -> None:
        nonlocal all_pass
        rows.append([check, r, m, aux, value, bool(ok)])
        all_pass &= ok

    for m in range(1, m_max + 1):
        for r in range(m + 1):
            code = rmcode.RmCode(r, m)
            ok = code.dimension == gf2.rank(code.generator_matrix)
            add("dimension_rank", r, m, "", code.dimension, ok)

    for m in range(1, m_max + 1):
        for r in range(m + 1):
            code = rmcode.RmCode(r, m)
            for g in range(1, min(g_max, m) + 1):
                target = rmcode.RmCode(min(r, m - g), m - g)
                ok = all(
                    target.contains(
                        rmcode.decimate(rmcode.Codeword(row, code), g).bits
                    )
                    for row in code.generator_matrix
                )
                add("decimation_closure", r, m, g, code.dimension, ok)

    rng = derive_rng(seed, 2)
    code = rmcode.RmCode(auto_r, auto_m)
    cw = code.encode_message(rng.integers(0, 2, code.dimension, dtype=np.uint8))
    ok = True
    for _ in range(draws):
        a = gf2.sample_invertible(auto_m, rng)
        beta = rng.integers(0, 2, size=auto_m, dtype=np.uint8)
        moved = rmcode.apply_affine_automorphism(cw, a, beta)
        ok &= code.contains(moved.bits)
    add("automorphism_closure", auto_r, auto_m, draws, draws, ok)

    for m in range(1, m_max + 1):
        for r in range(m + 1):
            base_rate = rmcode.RmCode(r, m).rate()
            for k in range(1, k_max + 1):
                bigger = rmcode.RmCode(r, m + k).rate()
                ok = bigger >= base_rate - k / (2 * math.sqrt(m)) - 1e-12
                add("rate_bound", r, m, k, bigger, ok)

    gap_rows = []
    for m in range(1, irm_m_max + 1):
        for r in range(m + 1):
            code = rmcode.RmCode(r, m)
            for h in range(1, min(h_max, m) + 1):
                ok = all(
                    rmcode.irm_member(
                        rmcode.blocked_symbols(rmcode.Codeword(row, code), h), r, m, h
                    )
                    for row in code.generator_matrix
                )
                add("irm_containment", r, m, h, code.dimension, ok)
                gap = rmcode.RmCode(min(r, m - h), m - h).rate() - code.rate()
                ok = -1e-12 <= gap <= h / (2 * math.sqrt(m - h)) + 1e-12 if m > h else gap >= -1e-12
                add("rate_gap", r, m, h, gap, ok)
                gap_rows.append((r, m, h, gap))

    report.write_csv(
        out / "rmcheck.csv", ["check", "r", "m", "aux", "value", "pass"], rows
    )
    report.figure_rate_gap(gap_rows, out / "rategap.png")
    print(f"rmcheck: {len(rows)} checks, {'ALL PASS' if all_pass else 'FAILURES PRESENT'}")
    return 0 if all_pass else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rmfsc",
        description="Reed-Muller / finite-state channel experiment harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "analyze": cmd_analyze,
        "capacity": cmd_capacity,
        "protocol": cmd_protocol,
        "bounds": cmd_bounds,
        "rmcheck": cmd_rmcheck,
    }
    for name, handler in handlers.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument(
            "--jobs",
            type=int,
            default=None,
            help="worker processes (default: RMFSC_JOBS or 1)",
        )
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (fsc_mod.SpecValidationError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
