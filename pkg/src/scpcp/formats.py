"""On-disk formats: matrix blocks, instance manifests, solution bundles.

Matrices are stored either as CSV (row-major, 17 significant digits) or as a
little-endian binary block: magic ``SCPCP1``, u64 rows, u64 cols, then f64
data in column-major order. The binary form round-trips bit-exactly.
"""

import json
import struct
from pathlib import Path

import numpy as np

from .linops import SupportSet, SubspaceProjector, TangentSpace
from .model import GroundTruth, ProblemInstance

__all__ = [
    "write_matrix_binary",
    "read_matrix_binary",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_matrix",
    "read_matrix",
    "save_instance",
    "load_instance",
    "save_solution",
    "write_trace_csv",
    "MANIFEST_NAME",
]

MAGIC = b"SCPCP1"
MANIFEST_NAME = "instance.json"


def write_matrix_binary(path, x):
    x = np.asarray(x, dtype="<f8")
    rows, cols = x.shape
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<QQ", rows, cols))
        f.write(x.tobytes(order="F"))


def read_matrix_binary(path):
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        header = f.read(16)
        if len(header) != 16:
            raise ValueError(f"{path}: truncated header")
        rows, cols = struct.unpack("<QQ", header)
        data = f.read()
    expected = rows * cols * 8
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} data bytes, got {len(data)}")
    return np.frombuffer(data, dtype="<f8").reshape((rows, cols), order="F").copy()


def write_matrix_csv(path, x):
    x = np.asarray(x, dtype=float)
    np.savetxt(path, x, fmt="%.17g", delimiter=",")


def read_matrix_csv(path):
    x = np.loadtxt(path, delimiter=",", ndmin=2)
    return np.asarray(x, dtype=float)


def write_matrix(path, x, matrix_format):
    if matrix_format == "binary":
        write_matrix_binary(path, x)
    elif matrix_format == "csv":
        write_matrix_csv(path, x)
    else:
        raise ValueError(f"unknown matrix format {matrix_format!r}")


def read_matrix(path, matrix_format):
    if matrix_format == "binary":
        return read_matrix_binary(path)
    if matrix_format == "csv":
        return read_matrix_csv(path)
    raise ValueError(f"unknown matrix format {matrix_format!r}")


_EXT = {"binary": ".bin", "csv": ".csv"}


def save_instance(instance, out_dir, matrix_format="binary"):
    """Write manifest + matrix files; returns the manifest path."""
    if matrix_format not in _EXT:
        raise ValueError(f"unknown matrix format {matrix_format!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = _EXT[matrix_format]
    paths = {"m": "m" + ext}
    write_matrix(out_dir / paths["m"], instance.m, matrix_format)
    if instance.q.p > 0:
        paths["q_basis"] = "q_basis" + ext
        write_matrix(out_dir / paths["q_basis"], instance.q.basis, matrix_format)
    manifest = {
        "format": "scpcp-instance",
        "version": 1,
        "n": instance.n,
        "p": instance.q.p,
        "lambda": instance.lam,
        "tau": instance.tau,
        "tau_mode": instance.tau_mode,
        "seed": instance.seed,
        "matrix_format": matrix_format,
    }
    if instance.truth is not None:
        truth = instance.truth
        paths["l0"] = "l0" + ext
        paths["s0"] = "s0" + ext
        write_matrix(out_dir / paths["l0"], truth.l0, matrix_format)
        write_matrix(out_dir / paths["s0"], truth.s0, matrix_format)
        manifest["r"] = truth.r
        manifest["rho"] = truth.rho
    manifest["paths"] = paths
    manifest_path = out_dir / MANIFEST_NAME
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest_path


def load_instance(path):
    """Read an instance from a manifest path or its directory."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no instance manifest at {path}")
    with open(path) as f:
        manifest = json.load(f)
    if manifest.get("format") != "scpcp-instance":
        raise ValueError(f"{path}: not an instance manifest")
    base = path.parent
    fmt = manifest["matrix_format"]
    paths = manifest["paths"]
    n = int(manifest["n"])
    m = read_matrix(base / paths["m"], fmt)
    if "q_basis" in paths:
        q = SubspaceProjector(n, read_matrix(base / paths["q_basis"], fmt))
    else:
        q = SubspaceProjector.identity(n)
    truth = None
    if "l0" in paths and "s0" in paths:
        l0 = read_matrix(base / paths["l0"], fmt)
        s0 = read_matrix(base / paths["s0"], fmt)
        omega = SupportSet(n, s0 != 0.0)
        truth = GroundTruth(
            l0=l0, s0=s0, omega=omega,
            tangent=TangentSpace.from_low_rank(l0, rank=int(manifest["r"])),
            r=int(manifest["r"]), rho=float(manifest["rho"]),
        )
    return ProblemInstance(
        n=n, m=m, q=q, lam=float(manifest["lambda"]), tau=float(manifest["tau"]),
        seed=int(manifest["seed"]), truth=truth,
        tau_mode=str(manifest.get("tau_mode", "explicit")),
    )


def save_solution(solution, out_dir, matrix_format="binary", extra=None):
    """Write solver diagnostics JSON plus the recovered matrices."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = _EXT[matrix_format]
    for name, mat in (("l_hat", solution.l), ("s_hat", solution.s),
                      ("y_dual", solution.y)):
        write_matrix(out_dir / (name + ext), mat, matrix_format)
    info = {
        "format": "scpcp-solution",
        "version": 1,
        "iters": solution.iters,
        "converged": solution.converged,
        "feas_residual": solution.feas_residual,
        "fix_residual": solution.fix_residual,
        "matrix_format": matrix_format,
        "paths": {"l_hat": "l_hat" + ext, "s_hat": "s_hat" + ext,
                  "y_dual": "y_dual" + ext},
    }
    if extra:
        info.update(extra)
    out_path = out_dir / "solution.json"
    with open(out_path, "w") as f:
        json.dump(info, f, indent=2, sort_keys=True)
        f.write("\n")
    return out_path


def write_trace_csv(path, trace):
    """Convergence trace rows (iter, feas, fixL, fixS, dual)."""
    with open(path, "w") as f:
        f.write("iter,feas,fix_l,fix_s,dual\n")
        for row in np.asarray(trace):
            f.write("%d,%.17g,%.17g,%.17g,%.17g\n"
                    % (int(row[0]), row[1], row[2], row[3], row[4]))
