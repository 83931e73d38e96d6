"""Stage orchestration: each stage reads the previous stage's artifacts
from the run directory, writes its own, and is reproducible byte-for-byte
from config plus seed."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig, write_config_echo
from .errors import StageArtifactError, WatertightError
from .evolution import GaConfig, run_nsga2, write_generation_csv
from .geometry.mesh import (
    TriMesh,
    center_and_normalize,
    export_mesh,
    load_mesh,
    mesh_volume,
    validate_watertight,
)
from .geometry.sdf import load_samples, sample_sdf, save_samples
from .latent import derive_bounds
from .metrics import chamfer_distance, coverage, mmd, sample_surface, write_metrics_report
from .objectives import build_evaluator, reconstruct_mesh
from .procedural import generate_procedural_dataset
from .training import load_checkpoint, save_checkpoint, train

__all__ = [
    "RunPaths",
    "stage_preprocess",
    "stage_train",
    "stage_reconstruct",
    "stage_evaluate",
    "stage_optimize",
    "stage_export",
]


@dataclass
class RunPaths:
    """Fixed layout of one run directory."""

    root: Path

    def __post_init__(self):
        self.root = Path(self.root)

    @property
    def samples(self) -> Path:
        return self.root / "samples"

    @property
    def checkpoints(self) -> Path:
        return self.root / "checkpoints"

    @property
    def meshes(self) -> Path:
        return self.root / "meshes"

    @property
    def fronts(self) -> Path:
        return self.root / "fronts"

    @property
    def checkpoint_file(self) -> Path:
        return self.checkpoints / "checkpoint.json"

    @property
    def report_file(self) -> Path:
        return self.root / "report.csv"

    @property
    def config_echo(self) -> Path:
        return self.root / "resolved_config.yaml"

    def prepare(self) -> "RunPaths":
        for d in (self.root, self.samples, self.checkpoints, self.meshes, self.fronts):
            d.mkdir(parents=True, exist_ok=True)
        return self


def _echo(cfg: RunConfig, paths: RunPaths) -> None:
    write_config_echo(cfg, paths.config_echo)


def _load_dataset_meshes(cfg: RunConfig):
    """Materialize the configured corpus as [(shape_id, TriMesh), ...]."""
    shapes = []
    if cfg.dataset.procedural:
        shapes.extend(generate_procedural_dataset(cfg.dataset.procedural, cfg.seed))
    for entry in cfg.dataset.meshes:
        path = Path(entry)
        shapes.append((path.stem, load_mesh(path)))
    return shapes


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise StageArtifactError(f"missing {path}; run `{hint}` first")
    return path


def stage_preprocess(cfg: RunConfig, paths: RunPaths, skip_invalid: bool = False):
    """Load or generate the corpus, enforce watertightness, normalize into
    the unit domain, sample signed distances, and archive everything."""
    paths.prepare()
    _echo(cfg, paths)
    shapes = _load_dataset_meshes(cfg)

    reports = [(sid, validate_watertight(mesh)) for sid, mesh in shapes]
    bad = [sid for (sid, rep) in reports if not rep.is_watertight]
    if bad and not skip_invalid:
        detail = "; ".join(
            f"{sid}: {rep.boundary_edge_count} boundary / "
            f"{rep.flipped_edge_count} flipped edges"
            for sid, rep in reports
            if not rep.is_watertight
        )
        raise WatertightError(f"non-watertight inputs: {detail}")

    kept = []
    for index, (sid, mesh) in enumerate(shapes):
        if sid in bad:
            print(f"{sid}: skipped (not watertight)")
            continue
        mesh = center_and_normalize(mesh)
        samples = sample_sdf(
            mesh,
            cfg.sampling.n_points,
            seed=cfg.sampling.seed + 1000 * index,
            shape_id=sid,
        )
        save_samples(samples, paths.samples / f"{sid}.json")
        export_mesh(mesh, paths.meshes / f"{sid}_ref.obj")
        inside = int(np.count_nonzero(samples.distances < 0))
        print(
            f"{sid}: watertight, {len(samples.distances)} samples "
            f"({inside} inside), volume {mesh_volume(mesh):.6f}"
        )
        kept.append(sid)
    if not kept:
        raise StageArtifactError("no valid shapes left after preprocessing")
    return kept


def _load_sample_sets(paths: RunPaths):
    files = sorted(_require(paths.samples, "preprocess").glob("*.json"))
    if not files:
        raise StageArtifactError(
            f"no sample archives in {paths.samples}; run `preprocess` first"
        )
    return [load_samples(f) for f in files]


def stage_train(cfg: RunConfig, paths: RunPaths):
    """Fit the decoder on the archived samples and write the checkpoint."""
    paths.prepare()
    _echo(cfg, paths)
    dataset = _load_sample_sets(paths)
    result = train(dataset, cfg.training, cfg.network)
    from .config import resolved_config_dict

    save_checkpoint(
        paths.checkpoint_file,
        result.params,
        result.latents,
        result.history,
        result.epochs_run,
        config_echo=resolved_config_dict(cfg),
    )
    print(
        f"trained {result.epochs_run} epochs on {len(dataset)} shapes; "
        f"final loss {result.history['total'][-1]:.6f}"
    )
    return result


def _load_checkpoint(paths: RunPaths):
    return load_checkpoint(_require(paths.checkpoint_file, "train"))


def stage_reconstruct(cfg: RunConfig, paths: RunPaths):
    """Extract one mesh per trained latent code."""
    paths.prepare()
    _echo(cfg, paths)
    params, bank, _, _, _ = _load_checkpoint(paths)
    written = []
    for sid in bank.ids():
        mesh = reconstruct_mesh(params, bank.get(sid), cfg.resolution)
        out = paths.meshes / f"{sid}_recon.obj"
        export_mesh(mesh, out)
        print(
            f"{sid}: {mesh.faces.shape[0]} faces, "
            f"volume {mesh_volume(mesh):.6f} -> {out.name}"
        )
        written.append(out)
    return written


def stage_evaluate(cfg: RunConfig, paths: RunPaths):
    """Compare reconstructions against the normalized references and write
    the metrics report."""
    paths.prepare()
    _echo(cfg, paths)
    params, bank, _, _, _ = _load_checkpoint(paths)
    n = cfg.evaluation.n_points
    seed = cfg.evaluation.seed

    ref_clouds, gen_clouds, rows = [], [], []
    per_shape = []
    for index, sid in enumerate(bank.ids()):
        ref_path = _require(paths.meshes / f"{sid}_ref.obj", "preprocess")
        ref_mesh = load_mesh(ref_path)
        recon = reconstruct_mesh(params, bank.get(sid), cfg.resolution)
        ref_cloud = sample_surface(ref_mesh, n, seed + 2 * index, sid)
        gen_cloud = sample_surface(recon, n, seed + 2 * index + 1, f"{sid}_recon")
        ref_clouds.append(ref_cloud)
        gen_clouds.append(gen_cloud)
        cd = chamfer_distance(gen_cloud, ref_cloud)
        per_shape.append(cd)
        rows.append((f"cd_{sid}", cd))
    per_shape_arr = np.asarray(per_shape)
    rows.append(("cd_mean", float(per_shape_arr.mean())))
    rows.append(("cd_median", float(np.median(per_shape_arr))))
    rows.append(("mmd", mmd(gen_clouds, ref_clouds)))
    rows.append(("coverage", coverage(gen_clouds, ref_clouds)))
    write_metrics_report(paths.report_file, rows)
    for name, value in rows:
        print(f"{name}: {value:.6f} (x1e3: {value * 1e3:.6f})")
    return dict(rows)


def stage_optimize(cfg: RunConfig, paths: RunPaths):
    """Search the latent space with the GA and write the audit trail plus
    the final front."""
    paths.prepare()
    _echo(cfg, paths)
    params, bank, _, _, _ = _load_checkpoint(paths)
    bounds = derive_bounds(bank, cfg.bounds_margin)
    evaluate = build_evaluator(params, cfg.objectives, cfg.resolution)
    ga_cfg = GaConfig(
        population_size=cfg.ga.population_size,
        generations=cfg.ga.generations,
        p_crossover=cfg.ga.p_crossover,
        p_mutation=cfg.ga.p_mutation,
        eta_crossover=cfg.ga.eta_crossover,
        eta_mutation=cfg.ga.eta_mutation,
        seed=cfg.ga.seed,
    )
    seeds = [bank.get(sid) for sid in bank.ids()]
    result = run_nsga2(evaluate, bounds, ga_cfg, seed_genomes=seeds)

    write_generation_csv(paths.fronts / "generations.csv", result)
    front_path = paths.fronts / "pareto.csv"
    dim = bounds.dim
    n_obj = len(cfg.objectives)
    with open(front_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["individual"]
            + [f"genome_{g}" for g in range(dim)]
            + [f"objective_{m}" for m in range(n_obj)]
        )
        for idx, ind in enumerate(result.final_front):
            writer.writerow(
                [idx]
                + [repr(float(v)) for v in ind.genome]
                + [repr(float(v)) for v in ind.objectives]
            )
    print(
        f"optimized {ga_cfg.generations} generations; "
        f"final front size {len(result.final_front)}"
    )
    return result


def stage_export(cfg: RunConfig, paths: RunPaths):
    """Extract meshes for every member of the stored final front."""
    paths.prepare()
    _echo(cfg, paths)
    params, _, _, _, _ = _load_checkpoint(paths)
    front_path = _require(paths.fronts / "pareto.csv", "optimize")
    written = []
    with open(front_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        genome_cols = [c for c in reader.fieldnames if c.startswith("genome_")]
        for row in reader:
            genome = np.array([float(row[c]) for c in genome_cols])
            mesh = reconstruct_mesh(params, genome, cfg.resolution)
            out = paths.meshes / f"front_{int(row['individual']):03d}.obj"
            export_mesh(mesh, out)
            written.append(out)
    print(f"exported {len(written)} front meshes to {paths.meshes}")
    return written
