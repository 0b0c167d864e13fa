"""File formats: JSON states, CSV snapshots/trajectories/tables, and the
compact binary trajectory format.

All writers are deterministic (sorted keys, repr-roundtrip floats, no
timestamps), so re-running an identical scenario reproduces the data
files byte for byte.

Binary trajectory layout (little endian):
    magic   4 bytes  b"RDMT"
    version u16      1
    kind    u8       1 = single trajectory, 2 = paired stays
    n       u64      instant count
    n_sites u32      site count (0 for paired stays)
    seed    u64      sampling seed
    dt      f64      instant duration
    payload kind 1:  n * i32 site indices
            kind 2:  n * u8 branch labels, n * f64 x1, n * f64 x2
"""

import csv
import json
import struct

import numpy as np

from .errors import ScenarioError
from .rdm import PairedStayTrajectory, StayTrajectory

_MAGIC = b"RDMT"
_VERSION = 1


def complex_to_pairs(values) -> list:
    """Nested [re, im] pairs for any complex array."""
    arr = np.asarray(values, dtype=np.complex128)
    stacked = np.stack([arr.real, arr.imag], axis=-1)
    return stacked.tolist()


def pairs_to_complex(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.shape[-1] != 2:
        raise ScenarioError("complex payload must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, default=_json_default)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_csv(path, columns: dict, header_comments=()):
    """Column-dict CSV with optional '# key=value' header block."""
    names = list(columns)
    rows = zip(*(np.asarray(columns[n]).tolist() for n in names))
    with open(path, "w", newline="") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(names)
        writer.writerows(rows)


def write_grid_snapshot_csv(path, psi, rho, j):
    write_csv(
        path,
        {
            "x": psi.x,
            "re_psi": psi.samples.real,
            "im_psi": psi.samples.imag,
            "rho": rho,
            "j": j,
        },
        header_comments=[
            f"x0={psi.x0!r} dx={psi.dx!r} n={psi.n} mass={psi.mass!r} hbar={psi.hbar!r}"
        ],
    )


def write_grid_snapshot_json(path, psi, rho, j):
    write_json(path, {
        "grid": {"x0": psi.x0, "dx": psi.dx, "n": psi.n,
                 "mass": psi.mass, "hbar": psi.hbar},
        "psi": complex_to_pairs(psi.samples),
        "rho": np.asarray(rho).tolist(),
        "j": np.asarray(j).tolist(),
    })


def write_trajectory_csv(path, traj: StayTrajectory):
    write_csv(
        path,
        {"instant": np.arange(traj.instants), "site_index": traj.stays},
        header_comments=[f"n_sites={traj.n_sites} dt_instant={traj.dt_instant!r} "
                         f"seed={traj.seed}"],
    )


def write_paired_trajectory_csv(path, traj: PairedStayTrajectory):
    write_csv(
        path,
        {
            "instant": np.arange(traj.instants),
            "branch": traj.branches,
            "x1": traj.x1,
            "x2": traj.x2,
        },
        header_comments=[f"dt_instant={traj.dt_instant!r} seed={traj.seed}"],
    )


def write_trajectory_binary(path, traj):
    """Compact binary run format; accepts either trajectory type."""
    if isinstance(traj, StayTrajectory):
        kind, n_sites = 1, traj.n_sites
        n = traj.instants
    elif isinstance(traj, PairedStayTrajectory):
        kind, n_sites = 2, 0
        n = traj.instants
    else:
        raise ScenarioError(f"cannot serialize {type(traj).__name__}")
    header = struct.pack("<4sHBQIQd", _MAGIC, _VERSION, kind, n, n_sites,
                         traj.seed % (1 << 64), float(traj.dt_instant))
    with open(path, "wb") as fh:
        fh.write(header)
        if kind == 1:
            fh.write(traj.stays.astype("<i4").tobytes())
        else:
            fh.write(traj.branches.astype("<u1").tobytes())
            fh.write(traj.x1.astype("<f8").tobytes())
            fh.write(traj.x2.astype("<f8").tobytes())


def read_trajectory_binary(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    head_size = struct.calcsize("<4sHBQIQd")
    magic, version, kind, n, n_sites, seed, dt = struct.unpack("<4sHBQIQd", raw[:head_size])
    if magic != _MAGIC:
        raise ScenarioError("not a trajectory file (bad magic)")
    if version != _VERSION:
        raise ScenarioError(f"unsupported trajectory format version {version}")
    body = raw[head_size:]
    if kind == 1:
        stays = np.frombuffer(body, dtype="<i4", count=n).astype(np.int64)
        return StayTrajectory(stays, n_sites=n_sites, dt_instant=dt, seed=seed)
    if kind == 2:
        branches = np.frombuffer(body, dtype="<u1", count=n).astype(np.int64)
        off = n
        x1 = np.frombuffer(body, dtype="<f8", count=n, offset=off)
        x2 = np.frombuffer(body, dtype="<f8", count=n, offset=off + 8 * n)
        return PairedStayTrajectory(branches, x1, x2, dt_instant=dt, seed=seed)
    raise ScenarioError(f"unknown trajectory kind {kind}")


def state_to_json_payload(amplitudes) -> dict:
    return {"amplitudes": complex_to_pairs(amplitudes)}


def operator_to_json_payload(matrix) -> dict:
    return {"matrix": complex_to_pairs(matrix)}
