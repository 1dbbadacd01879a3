"""Command-line front end.

Every subcommand that writes tables also writes ``manifest.json`` next to
them.  Exit status: 0 success, 2 invalid configuration, 3 triple
collision, 4 check failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from typing import List, Optional

import numpy as np

from . import __version__
from .analysis import threat_census
from .core import (ConfigurationError, ProcessConfig, TripleCollision, generate_sequence,
                   parse_distribution)
from .diagram import render_svg
from .engine import simulate
from .estimators import ThetaEstimate, VhatEstimate, census, theta_curve, vc_from_curve, vhat_hat
from .io import CollisionWriter, RunManifest, write_csv
from .sweeps import lemma_sweep, oracle_sweep

EXIT_OK, EXIT_CONFIG, EXIT_TRIPLE, EXIT_CHECK = 0, 2, 3, 4


def _seed_default() -> int:
    raw = os.environ.get("RICOCHET_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"RICOCHET_SEED is not an integer: {raw!r}") from None


def _grid(text: str) -> List[float]:
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("grid must be LO:HI:STEP") from None
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError("grid needs LO <= HI and STEP > 0")
    k = int(round((hi - lo) / step))
    return [round(lo + i * step, 12) for i in range(k + 1)]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ricochet", description="Simulate the bullet process.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True, n=True):
        sp.add_argument("--mu", required=True, help="speed distribution, e.g. uniform:0,1")
        sp.add_argument("--nu", required=True, help="delay distribution, e.g. point:1")
        if n:
            sp.add_argument("--n", type=int, required=True, help="bullets fired after bullet 0")
        sp.add_argument("--seed", type=int, default=None, help="master seed (default $RICOCHET_SEED or 0)")
        sp.add_argument("--force", action="store_true", help="accept pairs that may produce triple collisions")
        sp.add_argument("--workers", type=int, default=1)
        if out:
            sp.add_argument("--out", default=".", help="output directory")

    sp = sub.add_parser("simulate", help="one realization: survivors and |S_k|")
    common(sp)
    sp.add_argument("--no-collisions", action="store_true", help="skip collisions.csv")

    sp = sub.add_parser("theta", help="survival probability of bullet 0")
    common(sp)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--v", type=float)
    g.add_argument("--grid", type=_grid, help="LO:HI:STEP")
    sp.add_argument("--N", type=int, required=True, help="replicas")

    sp = sub.add_parser("vhat", help="speeds of late potential survivors")
    common(sp)
    sp.add_argument("--bucket", type=float, default=0.001)

    sp = sub.add_parser("census", help="survivor tally for a finite speed set")
    common(sp)
    sp.add_argument("--checkpoints", default="", help="comma-separated k at which to record |S_k|")

    sp = sub.add_parser("threats", help="bullets that threaten bullet i")
    common(sp)
    sp.add_argument("--i", type=int, required=True)
    sp.add_argument("--settling", action="store_true", help="also write settling.csv")

    sp = sub.add_parser("diagram", help="time-space diagram as SVG")
    common(sp, out=False, n=False)
    sp.add_argument("--n", type=int, default=None, help="default: every bullet fired before tmax")
    sp.add_argument("--tmax", type=float, required=True)
    sp.add_argument("--out", default="diagram.svg")

    sp = sub.add_parser("check", help="randomized self-checks")
    sp.add_argument("--suite", choices=("oracle", "lemmas"), required=True)
    sp.add_argument("--cases", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=None)
    return p


class _Run:
    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.t0 = time.perf_counter()
        self.outputs: List[str] = []
        self.counters = {"bullets": 0, "collisions": 0, "triple_collision_aborts": 0}

    def config(self):
        a = self.args
        mu, nu = parse_distribution(a.mu), parse_distribution(a.nu)
        return ProcessConfig(mu, nu, seed=a.seed, force=a.force)

    def outdir(self) -> str:
        os.makedirs(self.args.out, exist_ok=True)
        return self.args.out

    def csv(self, name, header, rows):
        path = os.path.join(self.outdir(), name)
        self.outputs.append(write_csv(path, header, rows))

    def manifest(self, directory):
        cfg = {k: v for k, v in vars(self.args).items() if k not in ("command", "workers")}
        for key in ("mu", "nu"):
            cfg[key + "_resolved"] = parse_distribution(cfg[key]).grammar()
        if isinstance(cfg.get("grid"), list):
            cfg["grid"] = [float(x) for x in cfg["grid"]]
        m = RunManifest(self.args.command, cfg, self.args.seed, __version__,
                        [os.path.basename(o) for o in self.outputs],
                        round(time.perf_counter() - self.t0, 6), self.counters, self.argv)
        m.write(directory)


def _simulate(run: _Run) -> int:
    a = run.args
    cfg = run.config()
    out = run.outdir()
    sn_path = os.path.join(out, "sn.csv")
    sink = None if a.no_collisions else CollisionWriter(os.path.join(out, "collisions.csv"))
    with open(sn_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,s_k,is_ps\n")

        def rows(first, v, t, sn, ps, partner, changed):
            fh.writelines(f"{first + j},{int(s)},{int(p)}\n" for j, (s, p) in enumerate(zip(sn, ps)))

        try:
            eng = simulate(cfg, a.n + 1, on_chunk=rows, collision_sink=sink)
            if sink is not None:
                # pending pairs of the final truncation are collisions of B_n too
                sink(eng.scheduled_collisions())
        finally:
            if sink is not None:
                sink.close()
    run.outputs.append(sn_path)
    if sink is not None:
        run.outputs.append(sink.path)
    run.counters.update(bullets=eng.ingested, collisions=(eng.ingested - eng.size) // 2)
    run.csv("survivors.csv", ("index", "velocity"), zip(eng.survivors(), eng.survivor_velocities()))
    print(f"|S_n| = {eng.size} after {eng.ingested} bullets")
    return EXIT_OK


def _theta(run: _Run) -> int:
    a = run.args
    cfg = run.config()
    grid = a.grid if a.grid is not None else [a.v]
    curve = theta_curve(grid, cfg.mu, cfg.nu, a.n, a.N, cfg.seed, workers=a.workers, force=a.force)
    run.csv("theta.csv", ThetaEstimate.HEADER, (e.row() for e in curve))
    if a.grid is not None:
        print(f"vc_hat = {vc_from_curve(curve)!r}")
    return EXIT_OK


def _vhat(run: _Run) -> int:
    a = run.args
    cfg = run.config()
    est = vhat_hat(cfg.mu, cfg.nu, a.n, a.bucket, cfg.seed, force=a.force)
    run.csv("vhat_hist.csv", VhatEstimate.HEADER, est.histogram)
    run.counters.update(bullets=a.n + 1)
    print(f"max_ps_velocity = {est.max_ps_velocity!r} ({est.count} potential survivors "
          f"in ({est.window[0]}, {est.window[1]}])")
    return EXIT_OK


def _census(run: _Run) -> int:
    a = run.args
    cfg = run.config()
    marks = [int(x) for x in a.checkpoints.split(",") if x.strip()]
    res = census(cfg.mu, cfg.nu, a.n, cfg.seed, checkpoints=marks, force=a.force)
    run.csv("census.csv", res.HEADER, res.rows())
    run.counters.update(bullets=a.n + 1, collisions=(a.n + 1 - res.total_survivors) // 2)
    print(f"{res.total_survivors} survivors; modal speed {res.modal_value!r} "
          f"holds {res.modal_share:.3f}")
    for k in sorted(res.checkpoints):
        print(f"|S_{k}| = {res.checkpoints[k]}")
    return EXIT_OK


def _threats(run: _Run) -> int:
    a = run.args
    cfg = run.config()
    if not 0 <= a.i <= a.n:
        raise ConfigurationError("--i must lie in 0..n")
    if a.settling:
        last = np.arange(a.n + 1, dtype=np.int64)
        found: List[int] = []

        def grab(first, v, t, sn, ps, partner, changed):
            found.extend(int(first + h) for h in np.nonzero(partner == a.i)[0])
            np.maximum.at(last, changed, np.arange(first, first + len(changed)))

        simulate(cfg, a.n + 1, on_chunk=grab)
        run.csv("settling.csv", ("index", "last_flip"), enumerate(last))
        threats = tuple(found)
    else:
        threats = threat_census(cfg, a.n, a.i).threat_indices
    run.csv("threats.csv", ("target", "threat"), ((a.i, j) for j in threats))
    run.counters.update(bullets=a.n + 1)
    print(f"bullet {a.i}: {len(threats)} threats")
    return EXIT_OK


def _diagram(run: _Run) -> int:
    a = run.args
    cfg = run.config()
    if not a.tmax > 0:
        raise ConfigurationError("--tmax must be positive")
    if a.n is not None:
        bullets = generate_sequence(cfg, a.n + 1)
    else:
        count = 16
        while True:
            bullets = generate_sequence(cfg, count)
            if bullets[-1].fire_time > a.tmax:
                break
            count *= 2
    svg = render_svg(bullets, a.tmax)
    directory = os.path.dirname(os.path.abspath(a.out))
    os.makedirs(directory, exist_ok=True)
    with open(a.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    run.outputs.append(a.out)
    run.counters.update(bullets=sum(b.fire_time <= a.tmax for b in bullets))
    return EXIT_OK


def _check(run: _Run) -> int:
    a = run.args
    sweep = oracle_sweep if a.suite == "oracle" else lemma_sweep
    rep = sweep(a.cases, a.seed)
    for line in rep.failures[:20]:
        print(line)
    print(f"{a.suite}: {rep.summary()}")
    return EXIT_OK if rep.ok else EXIT_CHECK


HANDLERS = {"simulate": _simulate, "theta": _theta, "vhat": _vhat, "census": _census,
            "threats": _threats, "diagram": _diagram, "check": _check}


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    run = _Run(args, argv)
    try:
        if args.seed is None:
            args.seed = _seed_default()
        status = HANDLERS[args.command](run)
    except (ConfigurationError, ValueError) as exc:
        # estimator argument checks raise plain ValueError
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TripleCollision as exc:
        run.counters["triple_collision_aborts"] += 1
        print(f"triple collision: {exc}", file=sys.stderr)
        status = EXIT_TRIPLE
    if args.command == "diagram":
        run.manifest(os.path.dirname(os.path.abspath(args.out)))
    elif args.command != "check":
        run.manifest(run.outdir())
    return status


if __name__ == "__main__":
    sys.exit(main())
