"""Binary checkpoints for exact save and resume of a simulation state.

Layout, all little-endian:

    bytes 0..7    magic string b"NPNSCKPT"
    bytes 8..11   uint32 format version (currently 1)
    bytes 12..15  uint32 grid resolution m
    bytes 16..75  parameter block: nu, d, kappa (float64), shell (uint32),
                  gamma, cbar1, cbar2, checkpoint time t (float64)
    bytes 76..    coefficient arrays u[0], u[1], c1, c2, each m*m
                  complex128 values stored as float64 real/imag pairs in
                  row-major order

A round trip is bit-for-bit: load(save(state)) reproduces every coefficient
exactly, so a resumed trajectory continues on the identical float sequence.
Any structural defect (wrong magic, unsupported version, short file,
trailing bytes, parameter values that fail validation) raises
CheckpointError before any state object is built.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .dynamics import State, SystemParams
from .errors import CheckpointError, ConfigError, InvalidFieldError
from .noise import NoiseSpec
from .spectral import Grid

MAGIC = b"NPNSCKPT"
VERSION = 1

_HEADER = struct.Struct("<8sII")
_PARAMS = struct.Struct("<dddIdddd")


@dataclass(frozen=True)
class CheckpointData:
    """Everything a checkpoint file stores."""

    state: State
    params: SystemParams
    t: float


def save(path, state, params, t=0.0):
    """Write state, parameters, and time to path in the fixed layout."""
    grid = state.grid
    header = _HEADER.pack(MAGIC, VERSION, grid.m)
    block = _PARAMS.pack(
        params.nu,
        params.d,
        params.noise.kappa,
        params.noise.shell,
        params.noise.gamma,
        params.cbar1,
        params.cbar2,
        float(t),
    )
    arrays = (state.u[0], state.u[1], state.c1, state.c2)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(block)
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<c16").tobytes())


def load(path):
    """Read a checkpoint; returns CheckpointData with bit-identical arrays."""
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as err:
        raise CheckpointError(f"cannot read checkpoint {path}: {err}") from err

    if len(buf) < _HEADER.size:
        raise CheckpointError("file too short for the checkpoint header")
    magic, version, m = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}; not a checkpoint file")
    if version != VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {version}; this build reads "
            f"version {VERSION}"
        )
    if len(buf) < _HEADER.size + _PARAMS.size:
        raise CheckpointError("file truncated inside the parameter block")
    nu, d, kappa, shell, gamma, cbar1, cbar2, t = _PARAMS.unpack_from(
        buf, _HEADER.size
    )

    expected = _HEADER.size + _PARAMS.size + 4 * m * m * 16
    if len(buf) < expected:
        raise CheckpointError(
            f"file truncated: {len(buf)} bytes, expected {expected}"
        )
    if len(buf) > expected:
        raise CheckpointError(
            f"trailing bytes after the coefficient arrays: {len(buf)} bytes, "
            f"expected {expected}"
        )

    try:
        grid = Grid(m)
        params = SystemParams(
            nu=nu,
            d=d,
            noise=NoiseSpec(kappa=kappa, shell=shell, gamma=gamma),
            cbar1=cbar1,
            cbar2=cbar2,
        )
        n = m * m
        offset = _HEADER.size + _PARAMS.size
        fields = []
        for i in range(4):
            seg = np.frombuffer(buf, dtype="<c16", count=n, offset=offset + i * n * 16)
            fields.append(seg.reshape(m, m).astype(np.complex128))
        state = State(np.stack(fields[:2]), fields[2], fields[3], grid)
    except (ConfigError, InvalidFieldError) as err:
        raise CheckpointError(f"checkpoint contents invalid: {err}") from err
    return CheckpointData(state=state, params=params, t=t)
