"""Command-line front end.

Exit codes: 0 success, 1 validation/usage error, 2 failed inequality or
consistency check, 3 I/O error.  Every randomized command prints the
effective master seed; result artifacts (stdout rows and CSV files) are
byte-identical for a fixed seed, independent of MSKVAR_THREADS.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
import time

import numpy as np

from . import __version__, battery, oracles
from .errors import MskvarError
from .interpolation import DisorderTriple, InterpolationPoint
from .kernels import free_energy_exact, save_coupling
from .mc import (
    DEFAULT_MASTER_SEED,
    McConfig,
    bounded_ratio,
    disorder_stream,
    main_lemma_check,
    resolve_threads,
    sample_disorder,
    sample_triple,
    scaling_experiment,
    talagrand_check,
    variance_direct,
    variance_via_identity,
)
from .model import beta_critical, load_model, overlap_upper_bound
from .oracles import (
    cross_overlap_naive,
    free_energy_naive,
    pair_overlap_naive,
    tilted_naive,
)
from .interpolation import pair_gibbs_cross_overlap, pair_gibbs_overlap, tilted_free_energy

log = logging.getLogger("mskvar")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CHECK_FAILED = 2
EXIT_IO = 3


def _fmt(x: float) -> str:
    """Fixed 17-significant-digit formatting for CSV cells."""
    return format(float(x), ".17g")


@dataclasses.dataclass
class RunConfig:
    """Everything needed to reproduce a run; echoed into the manifest."""

    subcommand: str
    model_path: str | None
    master_seed: int
    args: dict
    out: str | None = None
    manifest: str | None = None
    force: bool = False
    log_level: str = "warning"

    def to_manifest(self, model_sha256: str | None, outputs: list[str],
                    wall_time_s: float, threads: int) -> dict:
        return {
            "format": "mskvar-manifest-v1",
            "package_version": __version__,
            "subcommand": self.subcommand,
            "model_path": self.model_path,
            "model_sha256": model_sha256,
            "master_seed": self.master_seed,
            "args": self.args,
            "out": self.out,
            "manifest": self.manifest,
            "force": self.force,
            "log_level": self.log_level,
            "threads": threads,
            "wall_time_s": wall_time_s,
            "outputs": outputs,
        }

    @classmethod
    def from_manifest(cls, doc: dict, seed_override: int | None = None) -> "RunConfig":
        return cls(
            subcommand=doc["subcommand"],
            model_path=doc["model_path"],
            master_seed=seed_override if seed_override is not None else doc["master_seed"],
            args=dict(doc["args"]),
            out=doc.get("out"),
            manifest=doc.get("manifest"),
            force=bool(doc.get("force", False)),
            log_level=doc.get("log_level", "warning"),
        )


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _guard_output(path: str | None, force: bool) -> None:
    import os

    if path and os.path.exists(path) and not force:
        raise MskvarError(f"refusing to overwrite {path}; pass --force")


def _write_csv(path: str | None, header: str, rows: list[str], force: bool,
               outputs: list[str]) -> None:
    text = header + "\n" + "".join(r + "\n" for r in rows)
    if path is None:
        sys.stdout.write(text)
        return
    _guard_output(path, force)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    outputs.append(path)


def _write_manifest(cfg: RunConfig, model_sha: str | None, outputs: list[str],
                    t0: float, threads: int) -> None:
    if cfg.manifest is None:
        return
    _guard_output(cfg.manifest, cfg.force)
    doc = cfg.to_manifest(model_sha, outputs, time.time() - t0, threads)
    with open(cfg.manifest, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_critical(cfg: RunConfig) -> int:
    spec = load_model(cfg.model_path)
    print(f"beta_c={beta_critical(spec)!r}")
    print(f"rank={spec.profile.rank if spec.profile.psd else 'indefinite'}")
    print(f"overlap_bound={overlap_upper_bound(spec)!r}")
    return EXIT_OK


def cmd_free_energy(cfg: RunConfig) -> int:
    spec = load_model(cfg.model_path)
    beta = cfg.args["beta"]
    replicate = cfg.args["replicate"]
    print(f"master_seed={cfg.master_seed}")
    g = sample_disorder(spec, disorder_stream(cfg.master_seed, replicate, 0))
    value = free_energy_exact(g, beta)
    print(f"n={spec.n} beta={beta!r} replicate={replicate}")
    print(f"free_energy={value!r}")
    dump = cfg.args.get("save_coupling")
    if dump:
        _guard_output(dump, cfg.force)
        save_coupling(g, dump)
        print(f"coupling_dump={dump}")
    return EXIT_OK


def cmd_variance(cfg: RunConfig, outputs: list[str]) -> int:
    spec = load_model(cfg.model_path)
    beta = cfg.args["beta"]
    method = cfg.args["method"]
    mc = McConfig(replicates=cfg.args["replicates"], master_seed=cfg.master_seed,
                  quadrature_nodes=cfg.args["nodes"])
    print(f"master_seed={cfg.master_seed}")
    rows = []
    for name in ("direct", "identity"):
        if method not in (name, "both"):
            continue
        fn = variance_direct if name == "direct" else variance_via_identity
        est = fn(spec, beta, mc)
        print(f"method={name} value={est.value!r} stderr={est.stderr!r} replicates={est.n}")
        rows.append(",".join([
            name, str(spec.n), _fmt(beta), _fmt(est.value), _fmt(est.stderr),
            str(est.n), str(cfg.master_seed),
        ]))
    _write_csv(cfg.out, "method,n,beta,value,stderr,replicates,master_seed",
               rows, cfg.force, outputs)
    return EXIT_OK


def cmd_lemma_check(cfg: RunConfig, outputs: list[str]) -> int:
    spec = load_model(cfg.model_path)
    mc = McConfig(replicates=cfg.args["replicates"], master_seed=cfg.master_seed)
    print(f"master_seed={cfg.master_seed}")
    ok = True
    if cfg.args["which"] == "main":
        bc = beta_critical(spec)
        beta = cfg.args["beta"] if cfg.args["beta"] is not None else bc
        t_values = cfg.args["t"] or [0.0, 0.25, 0.5]
        rows = main_lemma_check(spec, beta, t_values, mc)
        csv_rows = []
        for r in rows:
            ok &= r.passed
            print(f"t={r.t!r} estimate={r.estimate!r} stderr={r.stderr!r} "
                  f"bound={r.bound!r} margin={r.margin!r} passed={r.passed}")
            csv_rows.append(",".join([
                _fmt(r.t), _fmt(r.estimate), _fmt(r.stderr), _fmt(r.bound),
                _fmt(r.margin), str(r.passed),
            ]))
        _write_csv(cfg.out, "t,estimate,stderr,bound,margin,passed",
                   csv_rows, cfg.force, outputs)
    else:
        bc2 = beta_critical(spec) ** 2
        x_values = cfg.args["x"] or list(np.linspace(0.05, 0.95, 10) * bc2)
        rows = talagrand_check(spec, x_values, mc)
        csv_rows = []
        for r in rows:
            ok &= r.mc_matches_oracle and r.oracle_below_rhs
            print(f"x={r.x!r} estimate={r.estimate!r} stderr={r.stderr!r} "
                  f"oracle={r.oracle!r} rhs={r.rhs!r} "
                  f"mc_matches_oracle={r.mc_matches_oracle} oracle_below_rhs={r.oracle_below_rhs}")
            csv_rows.append(",".join([
                _fmt(r.x), _fmt(r.estimate), _fmt(r.stderr), _fmt(r.oracle),
                _fmt(r.rhs), str(r.mc_matches_oracle), str(r.oracle_below_rhs),
            ]))
        _write_csv(cfg.out, "x,estimate,stderr,oracle,rhs,mc_matches_oracle,oracle_below_rhs",
                   csv_rows, cfg.force, outputs)
    print("result=PASS" if ok else "result=FAIL")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_scaling(cfg: RunConfig, outputs: list[str]) -> int:
    spec = load_model(cfg.model_path)
    mc = McConfig(replicates=cfg.args["replicates"], master_seed=cfg.master_seed)
    print(f"master_seed={cfg.master_seed}")
    rows = scaling_experiment(spec, cfg.args["n_grid"], mc, mode=cfg.args["mode"],
                              alpha=cfg.args.get("alpha"), d=cfg.args.get("d"))
    csv_rows = [
        ",".join([str(r.n), _fmt(r.beta), _fmt(r.var), _fmt(r.stderr),
                  _fmt(r.var_over_log2), _fmt(r.var_over_bound)])
        for r in rows
    ]
    _write_csv(cfg.out, "N,beta,var,stderr,var_over_log2N,var_over_bound",
               csv_rows, cfg.force, outputs)
    ok = bounded_ratio(rows)
    print("result=PASS" if ok else "result=FAIL")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_oracle_suite(cfg: RunConfig) -> int:
    """Kernel-vs-oracle equivalences and deterministic inequalities on the
    fixed battery; small sizes so the whole suite stays under a minute."""
    seed = cfg.master_seed
    print(f"master_seed={seed}")
    failures = 0

    def report(label: str, ok: bool) -> None:
        nonlocal failures
        failures += 0 if ok else 1
        print(f"{'ok  ' if ok else 'FAIL'} {label}")

    for n in (4, 8, 10):
        worst = 0.0
        for name, spec in battery.psd_members(n):
            g = sample_disorder(spec, disorder_stream(seed, n, 0))
            a = free_energy_exact(g, 0.5)
            b = free_energy_naive(g, 0.5)
            worst = max(worst, abs(a - b) / abs(b))
        report(f"free energy kernel vs naive N={n} (rel {worst:.2e})", worst <= 1e-9)

    worst_phi = worst_ov = worst_cr = 0.0
    for n in (3, 5):
        for name, spec in battery.psd_members(n):
            if spec.k > n:
                continue
            triple = sample_triple(spec, seed, n)
            for point in (InterpolationPoint(0.3, 0.2, 0.6), InterpolationPoint(0.8, 0.0, 0.5)):
                worst_phi = max(worst_phi, abs(
                    tilted_free_energy(spec, triple, point) - tilted_naive(spec, triple, point)))
                worst_ov = max(worst_ov, abs(
                    pair_gibbs_overlap(spec, triple, point) - pair_overlap_naive(spec, triple, point)))
                worst_cr = max(worst_cr, abs(
                    pair_gibbs_cross_overlap(spec, triple, point)
                    - cross_overlap_naive(spec, triple, point)))
    report(f"tilted free energy vs naive (abs {worst_phi:.2e})", worst_phi <= 1e-9)
    report(f"pair overlap vs naive (abs {worst_ov:.2e})", worst_ov <= 1e-9)
    report(f"cross overlap vs double-pair naive (abs {worst_cr:.2e})", worst_cr <= 1e-9)

    spec = battery.psd_members(6)[3][1]
    rng = np.random.default_rng(seed)
    pairs = [(rng.choice([-1.0, 1.0], 6), rng.choice([-1.0, 1.0], 6)) for _ in range(3)]
    rows = oracles.covariance_check(spec, pairs, m=20000, master_seed=seed)
    report(f"covariance identities ({len(rows)} rows)", all(r.passed for r in rows))

    rows = oracles.logcosh_bound_check(np.linspace(-3, 3, 13),
                                       [s for _, s in battery.psd_members(8)])
    report(f"logcosh and moment chain ({len(rows)} rows)", all(r.passed for r in rows))

    print("result=PASS" if failures == 0 else "result=FAIL")
    return EXIT_OK if failures == 0 else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mskvar",
        description="Multi-species SK free-energy fluctuation laboratory.")
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, model=True):
        if model:
            p.add_argument("model", help="model JSON file")
        p.add_argument("--seed", type=int, default=DEFAULT_MASTER_SEED,
                       help=f"master seed (default {DEFAULT_MASTER_SEED})")
        p.add_argument("--out", default=None, help="CSV output path (default stdout)")
        p.add_argument("--manifest", default=None, help="write a JSON run manifest here")
        p.add_argument("--force", action="store_true",
                       help="allow overwriting existing output files")

    p = sub.add_parser("critical", help="print beta_c, profile rank, overlap bound")
    p.add_argument("model")

    p = sub.add_parser("free-energy", help="exact free energy of one disorder sample")
    common(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--replicate", type=int, default=0)
    p.add_argument("--save-coupling", default=None, metavar="PATH",
                   help="dump the sampled coupling matrix (binary)")

    p = sub.add_parser("variance", help="free-energy variance over disorder")
    common(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--method", choices=["direct", "identity", "both"], default="direct")
    p.add_argument("--replicates", type=int, default=2000)
    p.add_argument("--nodes", type=int, default=16, help="quadrature nodes (identity)")

    p = sub.add_parser("lemma-check", help="overlap bound or exponential-moment check")
    common(p)
    p.add_argument("--which", choices=["main", "talagrand"], required=True)
    p.add_argument("--beta", type=float, default=None,
                   help="inverse temperature (default: beta_c)")
    p.add_argument("--t", type=float, nargs="*", default=None,
                   help="mixing values for --which main")
    p.add_argument("--x", type=float, nargs="*", default=None,
                   help="tilt values for --which talagrand")
    p.add_argument("--replicates", type=int, default=400)

    p = sub.add_parser("scaling", help="variance growth across system sizes")
    common(p)
    p.add_argument("--mode", choices=["critical", "approach"], default="critical")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--d", type=float, default=None)
    p.add_argument("--n-grid", type=int, nargs="+", required=True)
    p.add_argument("--replicates", type=int, default=4000)

    p = sub.add_parser("oracle-suite", help="run all kernel-vs-oracle equivalence checks")
    p.add_argument("--seed", type=int, default=DEFAULT_MASTER_SEED)
    return parser


_ARG_KEYS = {
    "free-energy": ["beta", "replicate", "save_coupling"],
    "variance": ["beta", "method", "replicates", "nodes"],
    "lemma-check": ["which", "beta", "t", "x", "replicates"],
    "scaling": ["mode", "alpha", "d", "n_grid", "replicates"],
}


def _config_from_args(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(
        subcommand=ns.subcommand,
        model_path=getattr(ns, "model", None),
        master_seed=getattr(ns, "seed", DEFAULT_MASTER_SEED),
        args={k: getattr(ns, k) for k in _ARG_KEYS.get(ns.subcommand, [])},
        out=getattr(ns, "out", None),
        manifest=getattr(ns, "manifest", None),
        force=getattr(ns, "force", False),
        log_level=ns.log_level,
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(stream=sys.stderr, level=ns.log_level.upper(),
                        format="%(levelname)s %(message)s")
    cfg = _config_from_args(ns)
    t0 = time.time()
    outputs: list[str] = []
    model_sha = None
    try:
        if cfg.model_path is not None:
            import os

            if not os.path.exists(cfg.model_path):
                print(f"error: model file {cfg.model_path} does not exist", file=sys.stderr)
                return EXIT_VALIDATION
            model_sha = _sha256(cfg.model_path)
        if cfg.subcommand == "critical":
            code = cmd_critical(cfg)
        elif cfg.subcommand == "free-energy":
            code = cmd_free_energy(cfg)
        elif cfg.subcommand == "variance":
            code = cmd_variance(cfg, outputs)
        elif cfg.subcommand == "lemma-check":
            code = cmd_lemma_check(cfg, outputs)
        elif cfg.subcommand == "scaling":
            code = cmd_scaling(cfg, outputs)
        else:
            code = cmd_oracle_suite(cfg)
        _write_manifest(cfg, model_sha, outputs, t0, resolve_threads())
        log.info("wall time %.2fs", time.time() - t0)
        return code
    except MskvarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
