import hashlib
import json
import os
from pathlib import Path
from typing import Any, Union

from pydantic import BaseModel


def canonical_json(obj: Any) -> str:
    """Sorted-key compact JSON, stable across runs"""
    if isinstance(obj, BaseModel):
        obj = obj.model_dump(mode="json")
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(data: Union[bytes, str]) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def derive_seed(*parts: Any) -> int:
    """Deterministic 63-bit seed from any sequence of printable parts"""
    digest = hashlib.sha256("/".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def write_bytes_atomic(path: Union[str, Path], payload: bytes) -> Path:
    """Write through a sibling temp file so readers never see a partial file"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "wb") as f:
        f.write(payload)
    os.replace(tmp, path)
    return path


def write_text_atomic(path: Union[str, Path], text: str) -> Path:
    return write_bytes_atomic(path, text.encode("utf-8"))
