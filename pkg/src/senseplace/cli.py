"""Command-line interface.

Subcommands: fit, reconstruct, heatmap, landscape, rmse-curve, and
generate-synthetic. Runs are driven by a TOML config (see docs/config.md);
outputs are CSV tables and 16-bit PGM graymaps written atomically into the
output directory. Exit codes: 0 success, 1 runtime failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import reconstruct, uq
from .basis import GaussianPrior
from .config import RunConfig, build_geometry, build_region, load_config, load_costs
from .constraints import (
    DISTANCE,
    PREDETERMINED,
    ConstraintSpec,
    ImageGrid,
    get_constraint_indices,
)
from .errors import ConfigError, SenseplaceError
from .fileio import (
    atomic_write_text,
    format_float,
    load_matrix_csv,
    save_matrix_csv,
    write_pgm16,
    write_rows_csv,
)
from .pipeline import SensorModel, fit_basis, resolve_prior, rmse_curve
from .synthetic import smooth_field_snapshots


def build_parser() -> argparse.ArgumentParser:
    # the globals are accepted before or after the subcommand; SUPPRESS keeps
    # a subcommand-level default from clobbering a value parsed at top level
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", metavar="PATH", default=argparse.SUPPRESS, help="TOML run configuration"
    )
    common.add_argument(
        "--output",
        metavar="DIR",
        default=argparse.SUPPRESS,
        help="output directory (overrides config)",
    )
    common.add_argument(
        "--seed", type=int, metavar="N", default=argparse.SUPPRESS, help="seed override"
    )
    common.add_argument(
        "--quiet", action="store_true", default=argparse.SUPPRESS, help="suppress notices"
    )

    parser = argparse.ArgumentParser(
        prog="senseplace",
        description="Sparse sensor placement, reconstruction, and uncertainty maps.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser(
        "fit", parents=[common], help="select sensors; write sensors.csv and pivots.csv"
    )

    rec = sub.add_parser(
        "reconstruct", parents=[common], help="reconstruct snapshots from sensor readings"
    )
    rec.add_argument(
        "--method",
        choices=("rls", "unregularized"),
        default="rls",
        help="reconstruction solver (default: rls)",
    )
    rec.add_argument(
        "--measurements",
        metavar="PATH",
        help="CSV of raw sensor readings (one snapshot per row, p columns); "
        "defaults to sampling the configured test matrix",
    )

    heat = sub.add_parser("heatmap", parents=[common], help="noise-induced uncertainty per location")
    heat.add_argument(
        "--method",
        choices=("rls", "unregularized"),
        default="rls",
        help="reconstruction solver the uncertainty is propagated through",
    )

    land = sub.add_parser("landscape", parents=[common], help="one- or two-point energy landscape")
    land.add_argument("--kind", choices=("one", "two"), required=True)
    land.add_argument(
        "--ref-sensors",
        metavar="I,J,...",
        help="reference sensors for the two-point landscape "
        "(defaults to the fitted selection)",
    )

    curve = sub.add_parser("rmse-curve", parents=[common], help="reconstruction error versus sensor count")
    curve.add_argument(
        "--p-values",
        required=True,
        metavar="SPEC",
        help="sensor counts: 'lo:hi[:step]' or a comma list like '5,10,20'",
    )
    curve.add_argument(
        "--inject-noise",
        action="store_true",
        help="add seeded measurement noise of magnitude [noise].eta",
    )
    curve.add_argument("--noise-seed", type=int, default=0, metavar="N")

    gen = sub.add_parser("generate-synthetic", parents=[common], help="write a seeded smooth-field snapshot matrix")
    gen.add_argument("--height", type=int, required=True)
    gen.add_argument("--width", type=int, required=True)
    gen.add_argument("--n-snapshots", type=int, required=True)
    gen.add_argument("--n-modes", type=int, default=32)
    gen.add_argument("--decay", type=float, default=1.5)
    gen.add_argument("--amplitude", type=float, default=1.0)
    gen.add_argument("--noise-std", type=float, default=0.0)
    gen.add_argument("--name", default="synthetic.csv", help="output file name")

    return parser


_GLOBAL_DEFAULTS = {"config": None, "output": None, "seed": None, "quiet": False}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # the shared flags use SUPPRESS so a bare subcommand never clobbers a
    # value parsed before it; absent attributes get their defaults here
    for name, value in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, name):
            setattr(args, name, value)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"senseplace: error: {exc}", file=sys.stderr)
        return 2
    except SenseplaceError as exc:
        print(f"senseplace: {exc}", file=sys.stderr)
        return 1


def entry_point():
    sys.exit(main())


def _notice(args, message: str) -> None:
    if not args.quiet:
        print(f"senseplace: {message}", file=sys.stderr)


def _dispatch(args) -> int:
    if args.command == "generate-synthetic":
        return _cmd_generate(args)
    if args.config is None:
        raise ConfigError(f"the {args.command} command needs --config")
    cfg = load_config(args.config)
    if args.output is not None:
        cfg.output_dir = Path(args.output)
    if args.seed is not None:
        cfg.seed = args.seed
    handler = {
        "fit": _cmd_fit,
        "reconstruct": _cmd_reconstruct,
        "heatmap": _cmd_heatmap,
        "landscape": _cmd_landscape,
        "rmse-curve": _cmd_rmse_curve,
    }[args.command]
    return handler(args, cfg)


def _cmd_generate(args) -> int:
    out_dir = Path(args.output) if args.output else Path(".")
    data = smooth_field_snapshots(
        args.n_snapshots,
        args.height,
        args.width,
        n_modes=args.n_modes,
        decay=args.decay,
        amplitude=args.amplitude,
        noise_std=args.noise_std,
        seed=args.seed if args.seed is not None else 0,
    )
    target = out_dir / args.name
    save_matrix_csv(target, data)
    _notice(args, f"wrote {data.shape[0]}x{data.shape[1]} snapshot matrix to {target}")
    return 0


# --- shared assembly ----------------------------------------------------------

class _Run:
    """Inputs a command needs: data, geometry, constraint, fitted model."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        if cfg.train_path is None:
            raise ConfigError("[data].train is required")
        self.train = load_matrix_csv(cfg.train_path, cfg.header)
        self.geometry = build_geometry(cfg, self.train.shape[1])
        self.custom_modes = (
            load_matrix_csv(cfg.modes_path) if cfg.modes_path is not None else None
        )
        self.costs = (
            load_costs(cfg, self.train.shape[1]) if cfg.costs_path is not None else None
        )
        self.region = None
        self.constraint_spec = None
        self.predetermined = None
        if cfg.constraint is not None:
            self._assemble_constraint()

    def _assemble_constraint(self):
        block = self.cfg.constraint
        idx = np.array([], dtype=int)
        if "shape" in block:
            self.region = build_region(block["shape"])
            idx = get_constraint_indices(self.region, self.geometry)
        self.predetermined = block.get("predetermined")
        self.constraint_spec = ConstraintSpec(
            idx_constrained=idx,
            mode=block["mode"],
            s=block.get("s"),
            d=block.get("d"),
            geometry=self.geometry if block["mode"] == DISTANCE else None,
        )
        if block["mode"] == PREDETERMINED and self.predetermined is None:
            raise ConfigError("[constraint].predetermined is required for predetermined mode")

    def basis_rank(self) -> int:
        cfg = self.cfg
        if cfg.basis_kind == "identity":
            return self.train.shape[1]
        if cfg.basis_kind == "custom":
            return self.custom_modes.shape[1]
        return cfg.n_modes

    def prior_argument(self):
        """Prior in the form the pipeline accepts, or None when unconfigured."""
        cfg = self.cfg
        if cfg.prior_kind is None:
            return None
        if cfg.prior_kind == "decreasing":
            return "decreasing"
        noise = cfg.noise_eta if cfg.noise_eta is not None else 1.0
        if cfg.prior_kind == "flat":
            return GaussianPrior(np.full(self.basis_rank(), cfg.prior_scale), noise)
        values = np.asarray(cfg.prior_values, dtype=float)
        if values.size != self.basis_rank():
            raise ConfigError(
                f"[prior].values has {values.size} entries but the basis has "
                f"{self.basis_rank()} modes"
            )
        return GaussianPrior(values, noise)

    def build_model(self, n_sensors: int | None = None) -> SensorModel:
        cfg = self.cfg
        p = n_sensors if n_sensors is not None else cfg.n_sensors
        if p is None:
            raise ConfigError("[sensors].p is required")
        return SensorModel(
            n_sensors=p,
            basis=cfg.basis_kind,
            n_modes=cfg.n_modes,
            optimizer=cfg.optimizer_kind,
            seed=cfg.seed,
            center=cfg.center,
            custom_modes=self.custom_modes,
            costs=self.costs,
            constraint=self.constraint_spec,
            predetermined=self.predetermined,
            prior=self.prior_argument(),
            noise=cfg.noise_eta,
        )

    def fit_basis_only(self):
        cfg = self.cfg
        return fit_basis(
            self.train,
            kind=cfg.basis_kind,
            n_modes=cfg.n_modes,
            seed=cfg.seed,
            center=cfg.center,
            custom_modes=self.custom_modes,
        )


def _constrained_set(run: _Run) -> set[int]:
    if run.constraint_spec is None:
        return set()
    return set(int(i) for i in run.constraint_spec.idx_constrained)


def _landscape_outputs(args, cfg, geometry, values, stem: str):
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_rows_csv(
        cfg.output_dir / f"{stem}.csv",
        ["state_index", "value"],
        ((i, v) for i, v in enumerate(values)),
    )
    if isinstance(geometry, ImageGrid):
        write_pgm16(cfg.output_dir / f"{stem}.pgm", values, geometry.height, geometry.width)
    else:
        _notice(args, f"point-cloud geometry: {stem}.pgm skipped, CSV written")


def _cmd_fit(args, cfg: RunConfig) -> int:
    run = _Run(cfg)
    model = run.build_model().fit(run.train)
    selected = model.get_selected_sensors()
    coords = run.geometry.coords()
    flagged = _constrained_set(run)

    header = ["rank", "state_index", "x", "y"]
    if coords.shape[1] == 3:
        header.append("z")
    header.append("in_constraint_region")
    gqr_run = cfg.optimizer_kind == "gqr"
    if gqr_run:
        header.append("moved_from_unconstrained")
        unconstrained = model.clone(optimizer="qr", constraint=None).fit(run.train)
        reference = unconstrained.get_selected_sensors().indices

    rows = []
    for rank, idx in enumerate(selected.indices):
        row = [rank, int(idx)] + [float(c) for c in coords[idx]]
        row.append(1 if int(idx) in flagged else 0)
        if gqr_run:
            row.append(0 if rank < len(reference) and reference[rank] == idx else 1)
        rows.append(row)

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_rows_csv(cfg.output_dir / "sensors.csv", header, rows)
    scores = selected.step_scores
    write_rows_csv(
        cfg.output_dir / "pivots.csv",
        ["rank", "step_norm"],
        ((rank, float(s)) for rank, s in enumerate(scores)),
    )
    _notice(args, f"placed {len(selected)} sensors; outputs in {cfg.output_dir}")
    return 0


def _cmd_reconstruct(args, cfg: RunConfig) -> int:
    run = _Run(cfg)
    model = run.build_model().fit(run.train)
    gamma = model.get_selected_sensors()
    method = reconstruct.LS if args.method == "unregularized" else reconstruct.RLS
    rm = model.reconstruction_matrix(method)
    basis = model.basis

    if args.method == "unregularized" and len(gamma) < basis.n_modes:
        _notice(
            args,
            f"unregularized solve with p={len(gamma)} < r={basis.n_modes} is rank "
            "deficient; the pseudoinverse resolves only the spanned subspace",
        )

    truth = None
    if args.measurements is not None:
        measurements = load_matrix_csv(Path(args.measurements), cfg.header)
    else:
        if cfg.test_path is None:
            raise ConfigError("[data].test (or --measurements) is required to reconstruct")
        truth = load_matrix_csv(cfg.test_path, cfg.header)
        measurements = truth[:, gamma.indices]

    states = reconstruct.reconstruct_states(rm, basis, measurements)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    save_matrix_csv(cfg.output_dir / "reconstruction.csv", states)
    if truth is not None:
        rmse = float(np.sqrt(np.mean((states - truth) ** 2)))
        atomic_write_text(cfg.output_dir / "rmse.txt", format_float(rmse) + "\n")
        _notice(args, f"reconstruction RMSE {rmse:.6g}; outputs in {cfg.output_dir}")
    else:
        _notice(args, "raw measurements given: rmse.txt skipped (no ground truth)")
    return 0


def _cmd_heatmap(args, cfg: RunConfig) -> int:
    if cfg.noise_eta is None:
        raise ConfigError("[noise].eta is required for the heatmap")
    run = _Run(cfg)
    model = run.build_model().fit(run.train)
    method = reconstruct.LS if args.method == "unregularized" else reconstruct.RLS
    rm = model.reconstruction_matrix(method)
    sigma = uq.uncertainty_heatmap(model.basis, rm, cfg.noise_eta)

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_rows_csv(
        cfg.output_dir / "sigma.csv",
        ["state_index", "sigma"],
        ((i, v) for i, v in enumerate(sigma)),
    )
    if isinstance(run.geometry, ImageGrid):
        write_pgm16(cfg.output_dir / "sigma.pgm", sigma, run.geometry.height, run.geometry.width)
    else:
        _notice(args, "point-cloud geometry: sigma.pgm skipped, CSV written")
    return 0


def _cmd_landscape(args, cfg: RunConfig) -> int:
    run = _Run(cfg)
    if args.kind == "one":
        basis = run.fit_basis_only()
        prior = resolve_prior(
            run.prior_argument(),
            n_modes=basis.n_modes,
            noise=cfg.noise_eta,
            train=run.train,
        )
        values = uq.one_pt_energy_landscape(basis, prior)
    else:
        if args.ref_sensors is not None:
            refs = _parse_index_list(args.ref_sensors)
            basis = run.fit_basis_only()
        else:
            model = run.build_model().fit(run.train)
            refs = model.get_selected_sensors().indices
            basis = model.basis
        prior = resolve_prior(
            run.prior_argument(),
            n_modes=basis.n_modes,
            noise=cfg.noise_eta,
            train=run.train,
        )
        values = uq.two_pt_energy_landscape(basis, prior, refs)
    _landscape_outputs(args, cfg, run.geometry, values, "landscape")
    return 0


def _cmd_rmse_curve(args, cfg: RunConfig) -> int:
    run = _Run(cfg)
    if cfg.test_path is None:
        raise ConfigError("[data].test is required for rmse-curve")
    test = load_matrix_csv(cfg.test_path, cfg.header)
    p_values = _parse_p_values(args.p_values)
    noise_std = 0.0
    if args.inject_noise:
        if cfg.noise_eta is None:
            raise ConfigError("--inject-noise needs [noise].eta")
        noise_std = cfg.noise_eta
    template = run.build_model(n_sensors=int(p_values[0]))
    curve = rmse_curve(
        template,
        run.train,
        test,
        p_values,
        prior=run.prior_argument(),
        noise_std=noise_std,
        noise_seed=args.noise_seed,
    )
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_rows_csv(
        cfg.output_dir / "rmse_curve.csv",
        ["p", "rmse_ls", "rmse_rls"],
        (
            (int(p), float(ls), float(rls))
            for p, ls, rls in zip(curve.p_values, curve.rmse_ls, curve.rmse_rls)
        ),
    )
    _notice(args, f"swept {len(p_values)} sensor counts; outputs in {cfg.output_dir}")
    return 0


def _parse_index_list(spec: str) -> list[int]:
    try:
        return [int(tok) for tok in spec.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad index list {spec!r}: {exc}") from exc


def _parse_p_values(spec: str) -> list[int]:
    try:
        if ":" in spec:
            parts = [int(tok) for tok in spec.split(":")]
            if len(parts) == 2:
                lo, hi, step = parts[0], parts[1], 1
            elif len(parts) == 3:
                lo, hi, step = parts
            else:
                raise ValueError("expected lo:hi or lo:hi:step")
            values = list(range(lo, hi + 1, step))
        else:
            values = [int(tok) for tok in spec.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad p-values spec {spec!r}: {exc}") from exc
    if not values:
        raise ConfigError(f"p-values spec {spec!r} is empty")
    return values
