"""
synthetic glyph pages whose reading order is not always raster
"""

import logging
from functools import lru_cache
from io import BytesIO
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
from PIL import Image

from causalflow.core.config import settings
from causalflow.models.configuration_error import ConfigurationError
from causalflow.models.document import Cell, GlyphGrid, Sample
from causalflow.models.document_errors import GlyphTableError, GridTooSmallError
from causalflow.models.image import ImageTensor
from causalflow.models.training_errors import EmptyDatasetError
from causalflow.schemas.synthetic.dataset import DatasetConfig, LayoutKind, Manifest, ManifestRecord
from causalflow.utils.general import derive_seed, sha256_hex, write_bytes_atomic, write_text_atomic

log = logging.getLogger("causalflow")

BOS = 1
EOS = 2
GLYPH_OFFSET = 2
TABLE_CELL = 2
MAX_SALTS = 64


def _check_shape(kind: LayoutKind, rows: int, cols: int) -> None:
    if rows < 1 or cols < 1:
        raise GridTooSmallError(f"Grid {rows}x{cols} has no cells")
    if kind == LayoutKind.SPIRAL and (rows < 2 or cols < 2):
        raise GridTooSmallError(f"Spiral layout needs at least 2x2 cells, got {rows}x{cols}")
    if kind == LayoutKind.TWO_COLUMN and cols < 3:
        raise GridTooSmallError(f"Two-column layout needs at least 3 columns, got {cols}")


def gutter_column(cols: int) -> int:
    return cols // 2


def _spiral(rows: int, cols: int) -> List[Cell]:
    order: List[Cell] = []
    top, bottom, left, right = 0, rows - 1, 0, cols - 1
    while top <= bottom and left <= right:
        order += [(top, c) for c in range(left, right + 1)]
        order += [(r, right) for r in range(top + 1, bottom + 1)]
        if top < bottom:
            order += [(bottom, c) for c in range(right - 1, left - 1, -1)]
        if left < right:
            order += [(r, left) for r in range(bottom - 1, top, -1)]
        top, bottom, left, right = top + 1, bottom - 1, left + 1, right - 1
    return order


def _table_rowwise(rows: int, cols: int) -> List[Cell]:
    order: List[Cell] = []
    for table_row in range(0, rows, TABLE_CELL):
        for table_col in range(0, cols, TABLE_CELL):
            for r in range(table_row, min(table_row + TABLE_CELL, rows)):
                order += [(r, c) for c in range(table_col, min(table_col + TABLE_CELL, cols))]
    return order


def traversal(kind: LayoutKind, rows: int, cols: int) -> List[Cell]:
    """Visiting order over every cell of a rows x cols grid"""
    _check_shape(kind, rows, cols)
    if kind == LayoutKind.RASTER:
        return [(r, c) for r in range(rows) for c in range(cols)]
    if kind == LayoutKind.TWO_COLUMN:
        gutter = gutter_column(cols)
        left = [(r, c) for r in range(rows) for c in range(gutter)]
        right = [(r, c) for r in range(rows) for c in range(gutter + 1, cols)]
        return left + right
    if kind == LayoutKind.SPIRAL:
        return _spiral(rows, cols)
    return _table_rowwise(rows, cols)


def reading_order(cells: np.ndarray, kind: LayoutKind) -> List[Cell]:
    rows, cols = cells.shape
    return [(r, c) for r, c in traversal(kind, rows, cols) if cells[r, c] != 0]


def generate_grid(seed: int, kind: LayoutKind, rows: int, cols: int, vocab: int, density: float) -> GlyphGrid:
    if vocab < 1:
        raise ConfigurationError("vocab must hold at least one glyph")
    if not 0 < density <= 1:
        raise ConfigurationError(f"density must be in (0, 1], got {density}")
    _check_shape(kind, rows, cols)
    rng = np.random.default_rng(seed)
    occupied = rng.random((rows, cols)) < density
    glyphs = rng.integers(1, vocab + 1, size=(rows, cols))
    cells = np.where(occupied, glyphs, 0).astype(np.int64)
    if kind == LayoutKind.TWO_COLUMN:
        cells[:, gutter_column(cols)] = 0
    return GlyphGrid(cells=cells, layout=kind, reading_order=reading_order(cells, kind))


def target_ids(grid: GlyphGrid) -> List[int]:
    return [BOS] + [g + GLYPH_OFFSET for g in grid.glyphs_in_order()] + [EOS]


def glyphs_of(target: Sequence[int]) -> List[int]:
    """Inverse of target_ids for the glyph part"""
    return [t - GLYPH_OFFSET for t in target if t > GLYPH_OFFSET]


def _pattern(glyph: int, cell_pixels: int, salt: int) -> np.ndarray:
    bits_needed = cell_pixels * cell_pixels
    chunks, block = [], 0
    while sum(len(c) for c in chunks) * 8 < bits_needed:
        chunks.append(bytes.fromhex(sha256_hex(f"glyph/{salt}/{glyph}/{block}")))
        block += 1
    bits = np.unpackbits(np.frombuffer(b"".join(chunks), dtype=np.uint8))[:bits_needed]
    return bits.reshape(cell_pixels, cell_pixels)


def min_hamming(table: np.ndarray) -> int:
    flat = table[1:].reshape(table.shape[0] - 1, -1).astype(np.int32)
    if flat.shape[0] < 2:
        return flat.shape[1]
    distances = (flat[:, None, :] != flat[None, :, :]).sum(axis=2)
    np.fill_diagonal(distances, flat.shape[1])
    return int(distances.min())


@lru_cache(maxsize=16)
def glyph_table(vocab: int, cell_pixels: int) -> np.ndarray:
    """
    (vocab + 1, cell_pixels, cell_pixels) binary patterns, row 0 blank.
    Patterns differ pairwise in at least cell_pixels^2 / 8 pixels; the hash
    salt is bumped until that holds.
    """
    if cell_pixels < 4:
        raise ConfigurationError(f"cell_pixels must be at least 4, got {cell_pixels}")
    required = cell_pixels * cell_pixels / 8
    for salt in range(MAX_SALTS):
        table = np.zeros((vocab + 1, cell_pixels, cell_pixels), dtype=np.uint8)
        for glyph in range(1, vocab + 1):
            table[glyph] = _pattern(glyph, cell_pixels, salt)
        if min_hamming(table) >= required:
            if salt:
                log.debug("glyph table for vocab %d needed salt %d", vocab, salt)
            table.setflags(write=False)
            return table
    raise GlyphTableError(f"No salt below {MAX_SALTS} separates {vocab} glyphs at {cell_pixels} pixels")


def render(grid: GlyphGrid, cell_pixels: int, vocab: int = 0) -> ImageTensor:
    """Binary page image, one pattern per non-blank cell"""
    table = glyph_table(max(vocab, int(grid.cells.max()), 1), cell_pixels)
    tiles = table[grid.cells]
    image = tiles.transpose(0, 2, 1, 3).reshape(grid.rows * cell_pixels, grid.cols * cell_pixels)
    return ImageTensor(image)


def generate(
    seed: int,
    kind: LayoutKind,
    rows: int,
    cols: int,
    vocab: int,
    density: float,
    cell_pixels: int = 24,
) -> Sample:
    grid = generate_grid(seed, kind, rows, cols, vocab, density)
    return Sample(
        image=render(grid, cell_pixels, vocab),
        target=target_ids(grid),
        meta={"seed": seed, "layout": kind.value, "rows": rows, "cols": cols},
    )


def allocate(mix: Dict[LayoutKind, float], count: int) -> Dict[LayoutKind, int]:
    """Largest-remainder split of count by the mix fractions"""
    kinds = [k for k in LayoutKind if k in mix]
    exact = {k: mix[k] * count for k in kinds}
    counts = {k: int(exact[k]) for k in kinds}
    leftover = count - sum(counts.values())
    by_remainder = sorted(kinds, key=lambda k: (-(exact[k] - counts[k]), kinds.index(k)))
    for k in by_remainder[:leftover]:
        counts[k] += 1
    return counts


def make_dataset(seed: int, cfg: DatasetConfig) -> Tuple[List[Sample], Manifest]:
    counts = allocate(cfg.mix, cfg.count)
    layouts = [kind for kind, n in counts.items() for _ in range(n)]
    np.random.default_rng(derive_seed(seed, "layout-order")).shuffle(layouts)

    samples, records = [], []
    for index, kind in enumerate(layouts):
        sample_seed = derive_seed(seed, "sample", index)
        sample = generate(sample_seed, kind, cfg.rows, cfg.cols, cfg.vocab, cfg.density, cfg.cell_pixels)
        sample.meta["index"] = index
        samples.append(sample)
        records.append(
            ManifestRecord(
                index=index,
                seed=sample_seed,
                layout=kind,
                rows=cfg.rows,
                cols=cfg.cols,
                image_file=f"{index:06d}.pgm",
                target=sample.target,
            )
        )
    manifest = Manifest(seed=seed, counts={k.value: n for k, n in counts.items()}, records=records)
    log.info("generated %d samples: %s", len(samples), manifest.counts)
    return samples, manifest


def manifest_text(manifest: Manifest) -> str:
    counts = ",".join(f"{k}:{n}" for k, n in manifest.counts.items())
    header = f"# seed={manifest.seed} counts={counts}"
    return "\n".join([header] + [r.to_line() for r in manifest.records]) + "\n"


def manifest_digest(manifest: Manifest) -> str:
    return sha256_hex(manifest_text(manifest))


def _pgm_bytes(image: ImageTensor) -> bytes:
    buffer = BytesIO()
    pixels = (np.asarray(image.values[:, :, 0]) * 255).astype(np.uint8)
    Image.fromarray(pixels).save(buffer, format="PPM")
    return buffer.getvalue()


def write_snapshot(samples: Sequence[Sample], manifest: Manifest, out_dir: str) -> Path:
    """PGM image per sample plus one manifest file"""
    root = Path(out_dir)
    for sample, record in zip(samples, manifest.records):
        write_bytes_atomic(root / record.image_file, _pgm_bytes(sample.image))
    path = write_text_atomic(root / settings.MANIFEST_FILE, manifest_text(manifest))
    log.debug("wrote %d images and %s", len(samples), path)
    return root


def _parse_header(line: str) -> Tuple[int, Dict[str, int]]:
    fields = dict(part.split("=", 1) for part in line.lstrip("# ").split())
    counts = {}
    for pair in filter(None, fields.get("counts", "").split(",")):
        kind, n = pair.split(":")
        counts[kind] = int(n)
    return int(fields["seed"]), counts


def load_dataset(data_dir: str) -> Tuple[List[Sample], Manifest]:
    root = Path(data_dir)
    path = root / settings.MANIFEST_FILE
    if not path.is_file():
        raise EmptyDatasetError(f"No {settings.MANIFEST_FILE} in {data_dir}")
    lines = [line for line in path.read_text().splitlines() if line.strip()]
    seed, counts = _parse_header(lines[0])
    records = [ManifestRecord.from_line(line) for line in lines[1:]]

    samples = []
    for record in records:
        with Image.open(root / record.image_file) as im:
            pixels = (np.asarray(im.convert("L")) > 127).astype(np.uint8)
        samples.append(
            Sample(
                image=ImageTensor(pixels),
                target=record.target,
                meta={
                    "seed": record.seed,
                    "layout": record.layout.value,
                    "rows": record.rows,
                    "cols": record.cols,
                    "index": record.index,
                },
            )
        )
    return samples, Manifest(seed=seed, counts=counts, records=records)


def split_holdout(samples: Sequence[Sample], fraction: float) -> Tuple[List[Sample], List[Sample]]:
    """Trailing fraction of the dataset is held out"""
    held = int(round(len(samples) * fraction))
    cut = len(samples) - held
    return list(samples[:cut]), list(samples[cut:])
