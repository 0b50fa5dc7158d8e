"""File formats: CSV matrices with empty/nan missing entries, JSONL
trajectories, and JSON sidecars for datasets and fitted factors."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .engine import FactorPair, Trajectory
from .tropical import MaskedMatrix

__all__ = [
    "load_matrix_csv",
    "save_matrix_csv",
    "save_trajectory",
    "load_trajectory",
    "save_factors",
    "load_factors",
    "save_dataset",
    "load_dataset",
]

_MISSING_TOKENS = {"", "nan"}


def _format(x: float) -> str:
    return repr(float(x))


def load_matrix_csv(path, has_header: bool = False) -> MaskedMatrix:
    """Read a dense CSV matrix; empty fields or "nan" mark missing entries."""
    rows: list[list[float]] = []
    mask_rows: list[list[bool]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for idx, record in enumerate(reader):
            if has_header and idx == 0:
                continue
            if not record:
                continue
            vals, given = [], []
            for cell in record:
                token = cell.strip()
                if token.lower() in _MISSING_TOKENS:
                    vals.append(np.nan)
                    given.append(False)
                else:
                    vals.append(float(token))
                    given.append(True)
            rows.append(vals)
            mask_rows.append(given)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: ragged rows (widths {sorted(widths)})")
    return MaskedMatrix(np.array(rows), np.array(mask_rows))


def save_matrix_csv(path, M, header: list[str] | None = None):
    """Write a matrix (MaskedMatrix or ndarray); missing entries become
    empty fields. Values are written with full round-trip precision."""
    if isinstance(M, MaskedMatrix):
        values, mask = M.values, M.mask
    else:
        values = np.asarray(M, dtype=np.float64)
        mask = np.ones(values.shape, dtype=bool)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(header)
        for i in range(values.shape[0]):
            writer.writerow(
                [_format(values[i, j]) if mask[i, j] else ""
                 for j in range(values.shape[1])]
            )


def save_trajectory(path, traj: Trajectory):
    """One JSON record per sample: {"t_seconds": ..., "b_norm_error": ...}."""
    with open(path, "w") as fh:
        for t, e in zip(traj.times, traj.errors):
            fh.write(json.dumps({"t_seconds": t, "b_norm_error": e}) + "\n")


def load_trajectory(path, t_init: float | None = None,
                    t_max: float | None = None,
                    time_unit: str = "seconds") -> Trajectory:
    """Read a JSONL trajectory; t_init/t_max default to the sample range."""
    times, errors = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            times.append(float(rec["t_seconds"]))
            errors.append(float(rec["b_norm_error"]))
    if not times:
        raise ValueError(f"{path}: empty trajectory")
    traj = Trajectory(
        t_init=times[0] if t_init is None else t_init,
        t_max=times[-1] if t_max is None else t_max,
        time_unit=time_unit,
    )
    for t, e in zip(times, errors):
        traj.append(t, e)
    return traj


def save_factors(out_dir, pair: FactorPair, config: dict | None = None,
                 prefix: str = ""):
    """Write U.csv, V.csv and a JSON sidecar with orientation and config."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_matrix_csv(out_dir / f"{prefix}U.csv", pair.U)
    save_matrix_csv(out_dir / f"{prefix}V.csv", pair.V)
    sidecar = {
        "rank": pair.rank,
        "orientation": pair.orientation.to_dict(),
        "config": config or {},
    }
    with open(out_dir / f"{prefix}factors.json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_factors(out_dir, prefix: str = "") -> tuple[np.ndarray, np.ndarray, dict]:
    out_dir = Path(out_dir)
    U = load_matrix_csv(out_dir / f"{prefix}U.csv")
    V = load_matrix_csv(out_dir / f"{prefix}V.csv")
    with open(out_dir / f"{prefix}factors.json") as fh:
        sidecar = json.load(fh)
    return U.values, V.values, sidecar


def save_dataset(out_dir, train: MaskedMatrix, test_mask: np.ndarray,
                 R_full: np.ndarray, meta: dict, A=None, B=None):
    """Write a dataset bundle: train CSV, sidecar JSON (metadata plus the
    held-out entries as [i, j, value] triples), and optional true factors."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_matrix_csv(out_dir / "train.csv", train)
    rows, cols = np.nonzero(np.asarray(test_mask, dtype=bool))
    sidecar = dict(meta)
    sidecar["shape"] = list(train.shape)
    sidecar["test_entries"] = [
        [int(i), int(j), float(R_full[i, j])] for i, j in zip(rows, cols)
    ]
    with open(out_dir / "dataset.json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if A is not None:
        save_matrix_csv(out_dir / "true_A.csv", A)
    if B is not None:
        save_matrix_csv(out_dir / "true_B.csv", B)


def load_dataset(out_dir):
    """Read a dataset bundle back as (train, test_mask, test_values, meta).

    test_values carries the held-out truth on the test mask and NaN off
    it.
    """
    out_dir = Path(out_dir)
    train = load_matrix_csv(out_dir / "train.csv")
    with open(out_dir / "dataset.json") as fh:
        meta = json.load(fh)
    test_mask = np.zeros(train.shape, dtype=bool)
    test_values = np.full(train.shape, np.nan)
    for i, j, v in meta.get("test_entries", []):
        test_mask[i, j] = True
        test_values[i, j] = v
    return train, test_mask, test_values, meta
