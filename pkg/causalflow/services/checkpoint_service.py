"""
single-file binary checkpoints

Layout (little-endian):
    magic (8 bytes) | format version (u32) | config digest (64 ascii hex)
    | header length (u32) | header (canonical JSON)
    | tensor blocks in header order
    | payload length (u64) | sha256 of everything before the trailer (32 bytes)
"""

import hashlib
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from causalflow.core.config import settings
from causalflow.models.causalflow_model import CausalFlowModel
from causalflow.models.checkpoint import Checkpoint, OptimizerState
from causalflow.models.training_errors import CheckpointIntegrityError, CheckpointVersionError
from causalflow.schemas.run.config import RunConfig
from causalflow.utils.general import canonical_json, write_bytes_atomic

log = logging.getLogger("causalflow")

DIGEST_BYTES = 64
TRAILER = struct.Struct("<Q32s")
PREAMBLE = struct.Struct(f"<8sI{DIGEST_BYTES}sI")

BLOCK_KINDS = ("param", "first_moment", "second_moment")


def checkpoint_of(
    model: CausalFlowModel,
    cfg: RunConfig,
    optimizer: OptimizerState,
    rng_state: Dict[str, Any],
    step: int,
    stage: int,
) -> Checkpoint:
    return Checkpoint(
        format_version=settings.CHECKPOINT_FORMAT_VERSION,
        config_digest=cfg.digest(),
        configs={"run": cfg.content(), "decoder": model.decoder.model_dump(mode="json")},
        parameters={p.name: p.data.copy() for p in model.store},
        groups={p.name: p.group for p in model.store},
        optimizer=OptimizerState(
            step=optimizer.step,
            betas=optimizer.betas,
            weight_decay=optimizer.weight_decay,
            epsilon=optimizer.epsilon,
            first_moment={k: v.copy() for k, v in optimizer.first_moment.items()},
            second_moment={k: v.copy() for k, v in optimizer.second_moment.items()},
        ),
        rng_state=rng_state,
        step=step,
        stage=stage,
        trainable={p.name: p.trainable for p in model.store},
    )


def _little_endian(values: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=values.dtype.newbyteorder("<"))


def _blocks(ckpt: Checkpoint) -> List[Tuple[Dict[str, Any], np.ndarray]]:
    sources = {
        "param": ckpt.parameters,
        "first_moment": ckpt.optimizer.first_moment,
        "second_moment": ckpt.optimizer.second_moment,
    }
    blocks = []
    for kind in BLOCK_KINDS:
        for name, values in sources[kind].items():
            entry = {"kind": kind, "name": name, "dtype": values.dtype.str.lstrip("<>=|"), "shape": list(values.shape)}
            blocks.append((entry, _little_endian(values)))
    return blocks


def encode(ckpt: Checkpoint) -> bytes:
    blocks = _blocks(ckpt)
    header = {
        "configs": ckpt.configs,
        "groups": ckpt.groups,
        "trainable": ckpt.trainable,
        "optimizer": {
            "step": ckpt.optimizer.step,
            "betas": list(ckpt.optimizer.betas),
            "weight_decay": ckpt.optimizer.weight_decay,
            "epsilon": ckpt.optimizer.epsilon,
        },
        "rng_state": ckpt.rng_state,
        "step": ckpt.step,
        "stage": ckpt.stage,
        "tensors": [entry for entry, _ in blocks],
    }
    header_bytes = canonical_json(header).encode("utf-8")
    digest = ckpt.config_digest.encode("ascii")
    if len(digest) != DIGEST_BYTES:
        raise CheckpointIntegrityError(f"Config digest must be {DIGEST_BYTES} hex characters")
    payload = b"".join(
        [PREAMBLE.pack(settings.CHECKPOINT_MAGIC, ckpt.format_version, digest, len(header_bytes)), header_bytes]
        + [values.tobytes() for _, values in blocks]
    )
    return payload + TRAILER.pack(len(payload), hashlib.sha256(payload).digest())


def decode(data: bytes) -> Checkpoint:
    if len(data) < PREAMBLE.size + TRAILER.size:
        raise CheckpointIntegrityError(f"Checkpoint of {len(data)} bytes is truncated")
    payload, trailer = data[: -TRAILER.size], data[-TRAILER.size :]
    length, checksum = TRAILER.unpack(trailer)
    if length != len(payload) or hashlib.sha256(payload).digest() != checksum:
        raise CheckpointIntegrityError("Checkpoint length or checksum does not match its contents")

    magic, version, digest, header_len = PREAMBLE.unpack_from(payload, 0)
    if magic != settings.CHECKPOINT_MAGIC:
        raise CheckpointIntegrityError(f"Not a checkpoint file (magic {magic!r})")
    if version != settings.CHECKPOINT_FORMAT_VERSION:
        raise CheckpointVersionError(
            f"Checkpoint format {version} is not supported (expected {settings.CHECKPOINT_FORMAT_VERSION})"
        )
    offset = PREAMBLE.size
    header = json.loads(payload[offset : offset + header_len].decode("utf-8"))
    offset += header_len

    tensors: Dict[str, Dict[str, np.ndarray]] = {kind: {} for kind in BLOCK_KINDS}
    for entry in header["tensors"]:
        dtype = np.dtype(entry["dtype"]).newbyteorder("<")
        count = int(np.prod(entry["shape"], dtype=np.int64))
        values = np.frombuffer(payload, dtype=dtype, count=count, offset=offset)
        offset += count * dtype.itemsize
        tensors[entry["kind"]][entry["name"]] = values.reshape(entry["shape"]).astype(dtype.newbyteorder("="))
    if offset != len(payload):
        raise CheckpointIntegrityError("Checkpoint has trailing bytes after its tensor blocks")

    opt = header["optimizer"]
    return Checkpoint(
        format_version=version,
        config_digest=digest.decode("ascii"),
        configs=header["configs"],
        parameters=tensors["param"],
        groups=header["groups"],
        optimizer=OptimizerState(
            step=opt["step"],
            betas=tuple(opt["betas"]),
            weight_decay=opt["weight_decay"],
            epsilon=opt["epsilon"],
            first_moment=tensors["first_moment"],
            second_moment=tensors["second_moment"],
        ),
        rng_state=header["rng_state"],
        step=header["step"],
        stage=header["stage"],
        trainable=header["trainable"],
    )


def save_checkpoint(path: str, ckpt: Checkpoint) -> Path:
    written = write_bytes_atomic(path, encode(ckpt))
    log.debug("saved stage %d step %d checkpoint to %s", ckpt.stage, ckpt.step, written)
    return written


def load_checkpoint(path: str, expected_digest: Optional[str] = None) -> Checkpoint:
    target = Path(path)
    if not target.is_file():
        raise CheckpointIntegrityError(f"Checkpoint {path} does not exist")
    ckpt = decode(target.read_bytes())
    if expected_digest is not None and ckpt.config_digest != expected_digest:
        log.warning("checkpoint %s was written under config digest %s", path, ckpt.config_digest)
    return ckpt
