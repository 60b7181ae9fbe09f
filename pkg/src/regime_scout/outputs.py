"""Run-directory files: CSV tables, a JSONL iteration log and a JSON report.

Floats are written with 17 significant digits so that every value reads
back as the identical double.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .config import config_to_dict
from .explorer import RunReport, contour_levels, label_name

SAMPLES = "samples.csv"
GRID = "grid.csv"
CONTOURS = "contours.csv"
PCA = "embedding_pca.csv"
RUN_LOG = "run_log.jsonl"
REPORT = "report.json"
RUN_FILES = (SAMPLES, GRID, CONTOURS, PCA, RUN_LOG, REPORT)


def fmt(value) -> str:
    return format(float(value), ".17g")


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    return rows[0], rows[1:]


def write_timeseries(path, ts) -> None:
    t = ts.t
    rows = ([fmt(t[k])] + [fmt(v) for v in ts.values[:, k]] for k in range(ts.n_t))
    _write_rows(Path(path), ["t", *ts.channels], rows)


def write_oracle(path, spec, points, labels) -> None:
    names = [ax.name for ax in spec.free_axes]
    rows = ([*(fmt(v) for v in p), int(lab)] for p, lab in zip(points, labels))
    _write_rows(Path(path), [*names, "oracle_label"], rows)


def _axis_names(report: RunReport) -> list[str]:
    return [ax.name for ax in report.config.system.free_axes]


def write_samples(path, report: RunReport) -> None:
    rows = []
    for it, theta, lab, ei in zip(report.iterations, report.thetas, report.labels, report.eis):
        rows.append([it, *(fmt(v) for v in theta), label_name(lab), "" if ei is None else fmt(ei)])
    _write_rows(Path(path), ["iteration", *_axis_names(report), "label", "ei"], rows)


def write_grid(path, report: RunReport) -> None:
    from .oracles import grid_points

    points = grid_points(report.grid_axes)
    rows = ([*(fmt(v) for v in p), fmt(m), fmt(s)]
            for p, m, s in zip(points, report.grid_mean, report.grid_std))
    _write_rows(Path(path), [*_axis_names(report), "mean", "std"], rows)


def contour_rows(boundaries: dict):
    for level in sorted(boundaries):
        for pid, line in enumerate(boundaries[level]):
            for vid, (a, b) in enumerate(line):
                yield [fmt(level), pid, vid, fmt(a), fmt(b)]


def write_contours(path, report: RunReport) -> None:
    names = _axis_names(report)[:2] if len(report.grid_axes) == 2 else ["theta_1", "theta_2"]
    _write_rows(Path(path), ["level", "polyline", "vertex", *names], contour_rows(report.boundaries))


def write_pca(path, report: RunReport) -> None:
    coords = report.pca.coordinates
    labels = report.labels[report.embedded]
    rows = []
    for idx, c, lab in zip(report.embedded, coords, labels):
        pcs = [fmt(v) for v in c] + [fmt(0.0)] * (2 - len(c))
        rows.append([idx, *pcs, label_name(lab)])
    _write_rows(Path(path), ["sample", "pc1", "pc2", "label"], rows)


def report_document(report: RunReport) -> dict:
    return {
        "stop_reason": report.stop_reason,
        "n_regimes": report.n_regimes,
        "regimes": report.labeling.regimes,
        "top_label": report.top_label,
        "n_samples": len(report.thetas),
        "n_initial": report.config.n_initial,
        "iterations": len(report.log),
        "n_noise": int((report.labels == -1).sum()),
        "n_failed": int((report.labels == -2).sum()),
        "hyperparameters": report.hyper.as_dict(),
        "nlml": report.model.nlml(),
        "merge_log": [{"iteration": i, "absorbed": a, "surviving": s} for i, a, s in report.labeling.merge_log],
        "boundary_levels": sorted(report.boundaries),
        "max_std": float(report.grid_std.max()),
        "pca_explained_variance": [float(v) for v in report.pca.explained_variance],
        "config": config_to_dict(report.config),
    }


def write_run(out_dir, report: RunReport) -> list[Path]:
    """Write all six run files into ``out_dir`` (created if needed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_samples(out / SAMPLES, report)
    write_grid(out / GRID, report)
    write_contours(out / CONTOURS, report)
    write_pca(out / PCA, report)
    with open(out / RUN_LOG, "w") as fh:
        for record in report.log:
            fh.write(json.dumps(record.as_dict()) + "\n")
    (out / REPORT).write_text(json.dumps(report_document(report), indent=2) + "\n")
    return [out / name for name in RUN_FILES]


def read_grid(path) -> tuple[list[np.ndarray], np.ndarray, np.ndarray]:
    """Axes, mean and std from a 2-D ``grid.csv``; fields are ``[j, i]`` indexed."""
    header, rows = read_table(path)
    data = np.array([[float(v) for v in row] for row in rows])
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    shape = (len(ys), len(xs))
    return [xs, ys], data[:, 2].reshape(shape), data[:, 3].reshape(shape)


def replay_contours(run_dir) -> list[list[str]]:
    """Contour rows re-derived from ``grid.csv`` and ``report.json``, as strings."""
    run_dir = Path(run_dir)
    axes, mean, _ = read_grid(run_dir / GRID)
    top = json.loads((run_dir / REPORT).read_text())["top_label"]
    rows = contour_rows(contour_levels(axes, mean, top))
    return [[str(v) for v in row] for row in rows]
