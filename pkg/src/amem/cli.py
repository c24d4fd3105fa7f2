"""``amem`` command line.

Every subcommand reads a :class:`RunConfig` assembled from defaults, an
optional ``key=value`` file (``--config``) and flags, in that order of
precedence.  Exit codes: 0 ok, 2 usage, 3 data error, 4 non-convergence.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import data as amdata
from . import dynamics, io, theory
from .net import Net, NetError, Nonlin, jacobian
from .optim import (InitScheme, Objective, OptimizerCfg, TrainCfg, TrainingDiverged, init,
                    train as run_training)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NONCONV = 0, 2, 3, 4


class UsageError(Exception):
    pass


class NonConvergence(Exception):
    pass


@dataclass
class RunConfig:
    """All knobs shared by the subcommands.

    ``dataset``: ``ring:N``, ``uniform_box:N``, ``unit:N:DIM``,
    ``orthonormal:N:DIM`` or ``mnist:N`` (reads ``images``/``labels``).
    ``dims``: hidden widths, e.g. ``64,64,64`` for depth 4.
    ``init``: ``uniform:A``, ``rank1_equal:U0:V0``, ``deep_rank1_equal:A0:B0:W0,..``,
    ``span_rank1:A`` or ``fan_in:G_IN:G_HID:G_OUT``.
    ``plateau``: epochs without improvement before lr is multiplied by ``decay`` (0 = off).
    """

    dataset: str = "ring:6"
    images: str = ""
    labels: str = ""
    unit_norm: bool = False
    dims: str = "64,64,64"
    nonlin: str = "sigmoid"
    objective: str = "autoencode"
    optimizer: str = "adam"
    lr: float = 1e-4
    init: str = "uniform:0.1"
    seed: int = 0
    loss_threshold: float = 1e-8
    max_epochs: int = 1_000_000
    trace_every: int = 1000
    plateau: int = 0
    decay: float = 0.5
    conv_tol: float = dynamics.CONV_TOL
    recover_tol: float = dynamics.RECOVER_TOL
    max_iter: int = dynamics.MAX_ITER
    fixed_tol: float = dynamics.FIXED_TOL
    out: str = "runs"
    checkpoint: str = ""
    input: str = ""
    index: int = 0
    corruption: str = "none"
    corruptions: str = "none,uniform_pixels:0.25,uniform_pixels:0.5"
    trials: int = 1
    bounds: str = "-2,2,-2,2"
    resolution: int = 100
    field_resolution: int = 20
    pool: str = "uniform:100,gaussian:100"
    k: int = 2
    widths: str = ""
    u0: float = 1.0
    v0: float = 1.0
    w0: str = ""
    train_check: bool = False
    depths: str = "2,4"
    sweep_widths: str = "64,256"
    objectives: str = "autoencode"


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(name: str, text: str):
    typ = _FIELDS[name].type
    try:
        if typ == "bool":
            low = str(text).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if typ == "int":
            return int(text)
        if typ == "float":
            return float(text)
        return str(text)
    except ValueError:
        raise UsageError(f"bad value for {name}: {text!r}") from None


def read_config_file(path) -> dict:
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = _coerce(key, val)
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    vals = {}
    if args.config:
        vals.update(read_config_file(args.config))
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            vals[name] = v
    return RunConfig(**vals)


# --- helpers -------------------------------------------------------------------------------


def _ints(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def load_dataset(cfg: RunConfig) -> amdata.Dataset:
    kind, *args = cfg.dataset.split(":")
    try:
        if kind in ("ring", "uniform_box"):
            ds = amdata.synth_2d(int(args[0]), kind, cfg.seed)
        elif kind in ("unit", "orthonormal"):
            ds = amdata.unit_vectors(int(args[0]), int(args[1]), cfg.seed, orthonormal=kind == "orthonormal")
        elif kind == "mnist":
            if not cfg.images:
                raise UsageError("mnist datasets need images=PATH")
            ds = amdata.load_mnist_idx(cfg.images, cfg.labels or None, int(args[0]) if args else None, cfg.seed)
        else:
            raise UsageError(f"unknown dataset {cfg.dataset!r}")
    except (IndexError, ValueError) as e:
        if isinstance(e, amdata.DataError):
            raise
        raise UsageError(f"bad dataset spec {cfg.dataset!r}") from None
    return amdata.normalize_unit(ds) if cfg.unit_norm else ds


def make_objective(cfg: RunConfig, n: int) -> Objective:
    kind, _, arg = cfg.objective.partition(":")
    if kind == "autoencode":
        return Objective.autoencode(n)
    if kind == "sequence":
        return Objective.sequence(n)
    if kind == "multi_sequence":
        lengths = _ints(arg)
        if sum(lengths) != n:
            raise UsageError(f"sequence lengths {lengths} do not add up to {n} examples")
        return Objective.multi_sequence(lengths)
    raise UsageError(f"unknown objective {cfg.objective!r}")


def make_scheme(cfg: RunConfig, ds: amdata.Dataset) -> InitScheme:
    kind, *args = cfg.init.split(":")
    try:
        if kind == "uniform":
            return InitScheme.uniform(float(args[0]) if args else 0.1)
        if kind == "rank1_equal":
            return InitScheme.rank1_equal(ds.examples[0], float(args[0]), float(args[1]))
        if kind == "deep_rank1_equal":
            w0 = _floats(args[2]) if len(args) > 2 else []
            return InitScheme.deep_rank1_equal(ds.examples[0], float(args[0]), float(args[1]), w0)
        if kind == "span_rank1":
            return InitScheme.span_rank1(ds.examples, a=float(args[0]) if args else 0.5)
        if kind == "fan_in":
            return InitScheme.fan_in(*(float(a) for a in args[:3]))
    except (IndexError, ValueError) as e:
        raise UsageError(f"bad init spec {cfg.init!r}: {e}") from None
    raise UsageError(f"unknown init {cfg.init!r}")


def _outdir(cfg: RunConfig) -> Path:
    p = Path(cfg.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load_checkpoint(cfg: RunConfig) -> Net:
    if not cfg.checkpoint:
        raise UsageError("--checkpoint is required")
    return io.load_net(cfg.checkpoint)


def _iter_kw(cfg: RunConfig) -> dict:
    return dict(conv_tol=cfg.conv_tol, recover_tol=cfg.recover_tol, max_iter=cfg.max_iter)


def _train_net(cfg: RunConfig, ds: amdata.Dataset, dims_hidden: list[int], seed: int):
    scheme = make_scheme(cfg, ds)
    net = init([ds.dim] + dims_hidden + [ds.dim], scheme, seed=seed, nonlin=Nonlin.parse(cfg.nonlin))
    tcfg = TrainCfg(optimizer=OptimizerCfg.parse(cfg.optimizer), lr=cfg.lr, init=scheme, seed=seed,
                    loss_threshold=cfg.loss_threshold, max_epochs=cfg.max_epochs, trace_every=cfg.trace_every,
                    plateau=cfg.plateau, decay=cfg.decay)
    res = run_training(net, make_objective(cfg, ds.n), ds.examples, tcfg)
    return net, res


def _say(msg: str) -> None:
    print(msg, flush=True)


# --- subcommands ----------------------------------------------------------------------------


def cmd_train(cfg: RunConfig) -> int:
    ds = load_dataset(cfg)
    out = _outdir(cfg)
    try:
        net, res = _train_net(cfg, ds, _ints(cfg.dims), cfg.seed)
    except TrainingDiverged as e:
        raise NonConvergence(str(e)) from None
    io.save_net(net, out / "net.amem")
    io.write_csv(res.loss_trace, ["epoch", "loss"], out / "train.csv")
    io.write_csv([(res.final_loss, res.epochs, res.converged)], ["final_loss", "epochs", "converged"],
                 out / "summary.csv")
    _say(f"final loss {res.final_loss:.3e} after {res.epochs} epochs -> {out / 'net.amem'}")
    if not res.converged:
        raise NonConvergence(f"loss {res.final_loss:.3e} above threshold {cfg.loss_threshold:g}")
    return EXIT_OK


def _verify_rows(net: Net, ds: amdata.Dataset, objective: Objective, cfg: RunConfig):
    rows = []
    if all(len(c) == 1 for c in objective.cycles):
        for i, x in enumerate(ds.examples):
            v = dynamics.verify_attractor(net, x, fixed_tol=cfg.fixed_tol, seed=cfg.seed)
            rows.append(_verdict_row(i, 1, v))
    else:
        for ci, cyc in enumerate(objective.cycles):
            v = dynamics.verify_limit_cycle(net, ds.examples[list(cyc)], map_tol=cfg.fixed_tol, seed=cfg.seed)
            rows.append(_verdict_row(ci, len(cyc), v))
    return rows


def _verdict_row(i, length, v):
    rep = v.report
    nan = float("nan")
    return (i, length, v.verdict, v.residual, v.offset, v.rho,
            rep.method if rep else "none", rep.power_estimate if rep else nan,
            rep.cross_check if rep else nan, rep.converged if rep else False)


VERIFY_SCHEMA = ["index", "length", "verdict", "residual", "offset", "rho", "method",
                 "power_estimate", "cross_check", "power_converged"]


def cmd_verify(cfg: RunConfig) -> int:
    net = _load_checkpoint(cfg)
    ds = load_dataset(cfg)
    _check_dim(net, ds)
    rows = _verify_rows(net, ds, make_objective(cfg, ds.n), cfg)
    io.write_csv(rows, VERIFY_SCHEMA, _outdir(cfg) / "verify.csv")
    good = sum(r[2] in ("attractor", "stable") for r in rows)
    _say(f"{good}/{len(rows)} verified {'attractors' if rows and rows[0][1] == 1 else 'stable cycles'}")
    return EXIT_OK


def _check_dim(net: Net, ds: amdata.Dataset) -> None:
    if net.dim != ds.dim:
        raise amdata.DataError(f"checkpoint dim {net.dim} != dataset dim {ds.dim}")


def _image_shape(ds: amdata.Dataset | None, dim: int):
    if ds is not None and ds.image_shape is not None:
        return ds.image_shape
    side = int(round(dim ** 0.5))
    return (side, side) if side * side == dim else None


def cmd_iterate(cfg: RunConfig) -> int:
    net = _load_checkpoint(cfg)
    ds = load_dataset(cfg)
    _check_dim(net, ds)
    shape = _image_shape(ds, net.dim)
    if cfg.input:
        try:
            x0 = np.loadtxt(cfg.input, dtype=np.float64, ndmin=1).ravel()
        except (OSError, ValueError) as e:
            raise amdata.DataError(f"cannot read input {cfg.input}: {e}") from None
        if x0.shape != (net.dim,):
            raise amdata.DataError(f"input has {x0.size} values, net expects {net.dim}")
    else:
        if not 0 <= cfg.index < ds.n:
            raise UsageError(f"index {cfg.index} out of range for {ds.n} examples")
        spec = amdata.CorruptionSpec.parse(cfg.corruption, seed=cfg.seed)
        x0 = amdata.corrupt(ds.examples[cfg.index], spec, shape)
    r = dynamics.iterate(net, x0, ds.examples, **_iter_kw(cfg))
    out = _outdir(cfg)
    io.write_csv([(r.outcome, r.index, r.iters, r.step_norm, r.period)],
                 ["outcome", "index", "iters", "step_norm", "period"], out / "iterate.csv")
    if shape is not None and len(shape) == 2:
        io.write_pgm(x0, shape[0], shape[1], out / "start.pgm")
        io.write_pgm(r.limit, shape[0], shape[1], out / "recovered.pgm")
    _say(f"{r.outcome} index={r.index} after {r.iters} iterations")
    if r.outcome in ("max_iter", "diverged"):
        raise NonConvergence(f"iteration ended with {r.outcome}")
    return EXIT_OK


def cmd_recover(cfg: RunConfig) -> int:
    net = _load_checkpoint(cfg)
    ds = load_dataset(cfg)
    _check_dim(net, ds)
    shape = _image_shape(ds, net.dim)
    mem = dynamics.memories(net, ds.examples)
    rows = []
    for text in cfg.corruptions.split(","):
        spec = amdata.CorruptionSpec.parse(text.strip(), seed=cfg.seed)
        rep = dynamics.recovery_rate(net, ds.examples, spec, cfg.trials, shape, train=mem, **_iter_kw(cfg))
        rows.append((str(spec), cfg.trials, rep.rate, rep.chance, rep.nn_rate, rep.agreement))
        _say(f"{spec}: recovered {rep.rate:.3f} (1-NN {rep.nn_rate:.3f}, chance {rep.chance:.3f})")
    io.write_csv(rows, ["corruption", "trials", "rate", "chance", "nn_rate", "agreement"],
                 _outdir(cfg) / "recover.csv")
    return EXIT_OK


def cmd_basin(cfg: RunConfig) -> int:
    net = _load_checkpoint(cfg)
    ds = load_dataset(cfg)
    _check_dim(net, ds)
    bounds = _floats(cfg.bounds)
    if len(bounds) != 4 or cfg.resolution < 2:
        raise UsageError("bounds needs xmin,xmax,ymin,ymax and resolution >= 2")
    bm = dynamics.basin_map(net, ds.examples, tuple(bounds), cfg.resolution, cfg.field_resolution,
                            **_iter_kw(cfg))
    out = _outdir(cfg)
    res = cfg.resolution
    marks = [(int(round((y - bounds[2]) / (bounds[3] - bounds[2]) * (res - 1))),
              int(round((x - bounds[0]) / (bounds[1] - bounds[0]) * (res - 1))))
             for x, y in ds.examples
             if bounds[0] <= x <= bounds[1] and bounds[2] <= y <= bounds[3]]
    img = io.render_labels(bm.labels, ds.n, marks)
    io.write_ppm(img, res, res, out / "basin.ppm")
    io.write_csv(np.column_stack([bm.field_points, bm.field_vectors]), ["x", "y", "dx", "dy"], out / "field.csv")
    dis = dynamics.voronoi_disagreement(bm)
    io.write_csv([(res, bm.n_unconverged, bm.n_spurious, len(bm.spurious), dis)],
                 ["resolution", "unconverged_cells", "spurious_cells", "spurious_limits",
                  "voronoi_disagreement"], out / "basin.csv")
    _say(f"unconverged {bm.n_unconverged}, spurious {bm.n_spurious}, Voronoi disagreement {dis} cells")
    return EXIT_OK


def _pool(cfg: RunConfig, dim: int) -> np.ndarray:
    parts = []
    for j, item in enumerate(cfg.pool.split(",")):
        kind, _, count = item.strip().partition(":")
        try:
            parts.append(amdata.noise_pool(kind, int(count), dim, seed=cfg.seed + j))
        except ValueError as e:
            raise UsageError(f"bad pool spec {item!r}: {e}") from None
    return np.vstack(parts)


def cmd_spurious(cfg: RunConfig) -> int:
    net = _load_checkpoint(cfg)
    ds = load_dataset(cfg)
    _check_dim(net, ds)
    rep = dynamics.spurious_search(net, ds.examples, _pool(cfg, net.dim), **_iter_kw(cfg))
    rows = []
    for rep_pt, hits in rep.clusters:
        near = float(np.min(np.linalg.norm(ds.examples - rep_pt, axis=1)))
        rows.append((hits, float(np.linalg.norm(rep_pt)), near))
    io.write_csv(rows, ["hits", "norm", "distance_to_nearest_example"], _outdir(cfg) / "spurious.csv")
    _say(f"{rep.n_spurious} spurious limits from {rep.n_probes} probes "
         f"({rep.n_converged} reached memories, {rep.n_cycles} cycles, {rep.n_unconverged} unconverged)")
    return EXIT_OK


THEORY_SCHEMA = ["nonlin", "k", "u0", "v0", "u", "v", "lambda_theory", "lambda_trained"]


def cmd_theory(cfg: RunConfig) -> int:
    nl = Nonlin.parse(cfg.nonlin)
    out = _outdir(cfg)
    if cfg.widths:
        widths = _ints(cfg.widths)
        w0 = _floats(cfg.w0) if cfg.w0 else [1.0] * (len(widths) - 1)
        sol = theory.solve_deep(nl, widths, cfg.v0, w0, cfg.u0)
        k_label = "x".join(map(str, widths))
    else:
        sol = theory.solve_one_hidden(nl, cfg.k, cfg.u0, cfg.v0)
        widths, w0, k_label = [cfg.k], [], str(cfg.k)
    lam_trained = float("nan")
    if cfg.train_check:
        x = np.full(4, 0.5)
        dims = [4] + list(widths) + [4]
        if len(widths) == 1:
            scheme = InitScheme.rank1_equal(x, cfg.u0, cfg.v0)
        else:
            scheme = InitScheme.deep_rank1_equal(x, cfg.u0, cfg.v0, w0)
        net = init(dims, scheme, nonlin=nl)
        tcfg = TrainCfg(optimizer=OptimizerCfg.parse("gd"), lr=cfg.lr, init=scheme, seed=cfg.seed,
                        loss_threshold=cfg.loss_threshold, max_epochs=cfg.max_epochs)
        res = run_training(net, Objective.autoencode(1), x[None], tcfg)
        if not res.converged:
            raise NonConvergence(f"train check stopped at loss {res.final_loss:.3e}")
        from .linalg import spectral_radius

        lam_trained = spectral_radius(jacobian(net, x)).value
    io.write_csv([(str(nl), k_label, cfg.u0, cfg.v0, sol.u, sol.v, sol.lam, lam_trained)],
                 THEORY_SCHEMA, out / "theory.csv")
    _say(f"{nl} k={k_label}: u={sol.u:.6f} v={sol.v:.6f} lambda={sol.lam:.6f}"
         + (f" trained={lam_trained:.6f}" if cfg.train_check else ""))
    return EXIT_OK


SWEEP_SCHEMA = ["depth", "width", "objective", "seed", "final_loss", "converged", "epochs",
                "verified", "n", "median_rho", "max_rho"]


def _sweep_cell(args):
    cfg, depth, width, objective, seed = args
    cell = dataclasses.replace(cfg, objective=objective, seed=seed, dims=",".join([str(width)] * (depth - 1)))
    ds = load_dataset(dataclasses.replace(cfg, objective=objective))
    try:
        net, res = _train_net(cell, ds, [width] * (depth - 1), seed)
    except TrainingDiverged:
        return (depth, width, objective, seed, float("nan"), False, -1, 0, 0, float("nan"), float("nan"))
    rows = _verify_rows(net, ds, make_objective(cell, ds.n), cell)
    rhos = np.array([r[5] for r in rows])
    good = sum(r[2] in ("attractor", "stable") for r in rows)
    return (depth, width, objective, seed, res.final_loss, res.converged, res.epochs, good, len(rows),
            float(np.nanmedian(rhos)), float(np.nanmax(rhos)))


def worker_count() -> int:
    try:
        cap = int(os.environ.get("AMEM_THREADS", "0"))
    except ValueError:
        cap = 0
    n = os.cpu_count() or 1
    return max(1, min(cap, n) if cap > 0 else n)


def cmd_sweep(cfg: RunConfig) -> int:
    cells = []
    for depth in _ints(cfg.depths):
        if depth < 1:
            raise UsageError("depths must be >= 1")
        for width in _ints(cfg.sweep_widths):
            for objective in cfg.objectives.split(";"):
                cells.append((depth, width, objective.strip()))
    load_dataset(cfg)  # fail early on a bad dataset
    jobs = [(cfg, d, w, o, cfg.seed ^ i) for i, (d, w, o) in enumerate(cells)]
    workers = min(worker_count(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(j) for j in jobs]
    io.write_csv(rows, SWEEP_SCHEMA, _outdir(cfg) / "sweep.csv")
    for r in rows:
        _say(f"depth {r[0]} width {r[1]} {r[2]}: {r[7]}/{r[8]} verified, median rho {r[9]:.4f}")
    return EXIT_OK


COMMANDS = {
    "train": (cmd_train, "train a net and write a checkpoint",
              ["dataset", "images", "labels", "unit_norm", "dims", "nonlin", "objective", "optimizer", "lr",
               "init", "loss_threshold", "max_epochs", "trace_every", "plateau", "decay"]),
    "verify": (cmd_verify, "spectral check of every training example or cycle",
               ["checkpoint", "dataset", "images", "labels", "unit_norm", "objective", "fixed_tol"]),
    "iterate": (cmd_iterate, "iterate the map from a file or a corrupted example",
                ["checkpoint", "dataset", "images", "labels", "unit_norm", "input", "index", "corruption",
                 "conv_tol", "recover_tol", "max_iter"]),
    "recover": (cmd_recover, "recovery rates over a list of corruptions",
                ["checkpoint", "dataset", "images", "labels", "unit_norm", "corruptions", "trials",
                 "conv_tol", "recover_tol", "max_iter"]),
    "basin": (cmd_basin, "basin-of-attraction image for a 2-d net",
              ["checkpoint", "dataset", "bounds", "resolution", "field_resolution",
               "conv_tol", "recover_tol", "max_iter"]),
    "spurious": (cmd_spurious, "search noise probes for spurious attractors",
                 ["checkpoint", "dataset", "images", "labels", "unit_norm", "pool",
                  "conv_tol", "recover_tol", "max_iter"]),
    "theory": (cmd_theory, "gradient-flow prediction for rank-1 equal-row nets",
               ["nonlin", "k", "widths", "u0", "v0", "w0", "train_check", "lr", "loss_threshold", "max_epochs"]),
    "sweep": (cmd_sweep, "train and verify over a depth x width x objective grid",
              ["dataset", "images", "labels", "unit_norm", "nonlin", "optimizer", "lr", "init",
               "loss_threshold", "max_epochs", "plateau", "decay", "depths", "sweep_widths", "objectives",
               "fixed_tol"]),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--seed", type=int, help="single source of randomness")
    common.add_argument("--out", help="output directory")
    parser = argparse.ArgumentParser(prog="amem", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text, keys) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, parents=[common])
        for key in keys:
            f = _FIELDS[key]
            flag = "--" + key.replace("_", "-")
            if f.type == "bool":
                p.add_argument(flag, dest=key, action="store_const", const=True)
            else:
                typ = {"int": int, "float": float}.get(f.type, str)
                p.add_argument(flag, dest=key, type=typ, metavar=key.upper())
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return COMMANDS[args.command][0](cfg)
    except UsageError as e:
        print(f"amem: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (amdata.DataError, io.CheckpointError, NetError, OSError) as e:
        print(f"amem: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (NonConvergence, theory.TheoryError) as e:
        print(f"amem: not converged: {e}", file=sys.stderr)
        return EXIT_NONCONV


if __name__ == "__main__":
    sys.exit(main())
