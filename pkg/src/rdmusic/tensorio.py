"""Binary tensor export and stable CSV writers."""

from __future__ import annotations

import csv
import math
import struct
from pathlib import Path

import numpy as np

# Complex tensor file: magic, version, seed, ndim, dims, then row-major
# float64 (real, imag) pairs. All little-endian.
_MAGIC = b"CXT1"
_VERSION = 1


def save_complex_tensor(path, array: np.ndarray, seed: int = 0) -> None:
    arr = np.ascontiguousarray(array, dtype=np.complex128)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIqI", _MAGIC, _VERSION, seed, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        interleaved = np.empty(arr.size * 2, dtype="<f8")
        interleaved[0::2] = arr.real.ravel()
        interleaved[1::2] = arr.imag.ravel()
        fh.write(interleaved.tobytes())


def load_complex_tensor(path) -> tuple[np.ndarray, int]:
    with open(path, "rb") as fh:
        magic, version, seed, ndim = struct.unpack("<4sIqI", fh.read(20))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a complex tensor file")
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
        flat = np.frombuffer(fh.read(), dtype="<f8")
    data = flat[0::2] + 1j * flat[1::2]
    return data.reshape(shape), seed


def fmt(value) -> str:
    """Deterministic scalar formatting for reproducible CSV output."""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.10g}"
    return str(value)


def write_csv(path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


DETECTION_COLUMNS = ["trial", "doppler_bin", "range_bin", "tau_s", "fd_hz", "power"]
FUSED_COLUMNS = DETECTION_COLUMNS + ["theta_deg", "winning_domain", "winning_power"]


def detection_row(trial: int, det) -> list:
    return [trial, det.doppler_bin, det.range_bin, det.delay_est,
            det.doppler_est, det.peak_power]


def fused_row(trial: int, est) -> list:
    return detection_row(trial, est.detection) + [
        math.degrees(est.doa_est), est.winning_domain, est.winning_power]


def write_spectrum_csv(path, spectrum) -> None:
    rows = zip(np.degrees(spectrum.grid), spectrum.values)
    write_csv(path, ["angle_deg", "value"], rows)
