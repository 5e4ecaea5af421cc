"""Persistence: images (PNG, PGM, raw INRF), label masks, checkpoints, CSV.

INRF is the bit-exact interchange format: an 8-byte header (magic ``INRF``,
u16 height, u16 width, little-endian) followed by row-major float32 values.
PNG goes through Pillow; PGM is parsed here. Checkpoints are a
self-describing binary (magic ``INRC``) holding a format version, the run
config, and every parameter tensor at full 64-bit precision, written
deterministically so identical states produce identical bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .config import ConfigError, RunConfig
from .fields import ClassField, ImageField
from .models import FourierReluNet, ModelSet, build_models

INRF_MAGIC = b"INRF"
CKPT_MAGIC = b"INRC"
CKPT_VERSION = 1

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class FormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Images


def save_inrf(image: ImageField, path: str | Path) -> None:
    if image.height > 0xFFFF or image.width > 0xFFFF:
        raise FormatError("INRF dims are limited to 65535")
    header = INRF_MAGIC + struct.pack("<HH", image.height, image.width)
    payload = image.values.astype("<f4").tobytes()
    Path(path).write_bytes(header + payload)


def _load_inrf(data: bytes) -> ImageField:
    if len(data) < 8:
        raise OSError("truncated INRF file: incomplete header")
    height, width = struct.unpack("<HH", data[4:8])
    expected = 8 + 4 * height * width
    if len(data) < expected:
        raise OSError(f"truncated INRF file: expected {expected} bytes, got {len(data)}")
    if len(data) > expected:
        raise FormatError("INRF file has trailing data")
    values = np.frombuffer(data[8:], dtype="<f4").reshape(height, width)
    return ImageField(values.astype(np.float64))


def _pgm_tokens(data: bytes):
    """Yield whitespace-separated header tokens, skipping # comments."""
    pos = 0
    while pos < len(data):
        ch = data[pos:pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            yield data[pos:end], end
            pos = end


def _load_pgm(data: bytes) -> tuple[np.ndarray, int]:
    """Raw PGM samples and the header maxval (P5 binary or P2 ascii)."""
    tokens = _pgm_tokens(data)
    try:
        magic, _ = next(tokens)
        (w_tok, _), (h_tok, _), (maxval_tok, header_end) = (next(tokens) for _ in range(3))
    except StopIteration:
        raise OSError("truncated PGM file: incomplete header") from None
    width, height, maxval = int(w_tok), int(h_tok), int(maxval_tok)
    if maxval <= 0 or maxval > 0xFFFF:
        raise FormatError(f"PGM maxval {maxval} out of range")
    if magic == b"P5":
        raster = data[header_end + 1:]
        dtype = ">u2" if maxval > 255 else "u1"
        count = height * width
        needed = count * np.dtype(dtype).itemsize
        if len(raster) < needed:
            raise OSError(f"truncated PGM file: expected {needed} raster bytes")
        values = np.frombuffer(raster[:needed], dtype=dtype).astype(np.int64)
    elif magic == b"P2":
        try:
            values = np.array([int(tok) for tok, _ in tokens], dtype=np.int64)
        except ValueError:
            raise FormatError("PGM ascii raster contains a non-integer token") from None
        if values.size < height * width:
            raise OSError("truncated PGM file: not enough ascii samples")
        values = values[:height * width]
    else:
        raise FormatError(f"unsupported PGM magic {magic!r}")
    if values.max(initial=0) > maxval:
        raise FormatError("PGM sample exceeds declared maxval")
    return values.reshape(height, width), maxval


def _load_png_raw(path: Path) -> tuple[np.ndarray, int]:
    """Integer samples and the format maximum of a grayscale PNG."""
    with Image.open(path) as img:
        if img.mode == "L":
            return np.array(img, dtype=np.int64), 255
        if img.mode == "P":
            return np.array(img, dtype=np.int64), 255
        if img.mode in ("I;16", "I"):
            return np.array(img, dtype=np.int64), 65535
        raise FormatError(f"PNG mode {img.mode!r} is not 8/16-bit grayscale")


def load_image(path: str | Path) -> ImageField:
    """Read PNG, PGM, or INRF; integer formats normalize to [0, 1] by the
    format maximum (PGM: the header maxval)."""
    path = Path(path)
    data = path.read_bytes()
    if data.startswith(INRF_MAGIC):
        return _load_inrf(data)
    if data.startswith(PNG_SIGNATURE):
        values, maxval = _load_png_raw(path)
        return ImageField(values / maxval)
    if data[:2] in (b"P5", b"P2"):
        values, maxval = _load_pgm(data)
        return ImageField(values / maxval)
    raise FormatError(f"unknown image format (leading bytes {data[:4]!r})")


def save_png16(image: ImageField, path: str | Path) -> None:
    """16-bit grayscale PNG preview; values are clamped to [0, 1] here only."""
    clamped = np.clip(image.values, 0.0, 1.0)
    arr = np.round(clamped * 65535.0).astype(np.uint16)
    Image.fromarray(arr).save(Path(path), format="PNG")


# ---------------------------------------------------------------------------
# Masks


def load_labels(path: str | Path) -> np.ndarray:
    """Raw integer labels from an 8-bit PNG or PGM, no normalization."""
    path = Path(path)
    data = path.read_bytes()
    if data.startswith(PNG_SIGNATURE):
        labels, _ = _load_png_raw(path)
        return labels
    if data[:2] in (b"P5", b"P2"):
        labels, _ = _load_pgm(data)
        return labels
    raise FormatError(f"unknown mask format (leading bytes {data[:4]!r})")


def load_mask(path: str | Path, class_count: int) -> ClassField:
    """Read an 8-bit label image (PNG or PGM) and one-hot encode it."""
    labels = load_labels(path)
    bad = np.unique(labels[labels >= class_count])
    if bad.size:
        raise ValueError(
            f"mask labels {bad.tolist()} exceed class count {class_count}"
        )
    return ClassField.from_labels(labels, class_count)


def save_mask_png(labels: np.ndarray, path: str | Path) -> None:
    lab = np.asarray(labels)
    if lab.min() < 0 or lab.max() > 255:
        raise FormatError("mask labels must fit 8 bits")
    Image.fromarray(lab.astype(np.uint8), mode="L").save(Path(path), format="PNG")


# ---------------------------------------------------------------------------
# Checkpoints


def _layer_arrays(prefix: str, layers) -> list[tuple[str, np.ndarray]]:
    out = []
    for i, layer in enumerate(layers):
        out.append((f"{prefix}/{i}/w", layer.weight.data))
        out.append((f"{prefix}/{i}/b", layer.bias.data))
    return out


def _model_arrays(models: ModelSet) -> list[tuple[str, np.ndarray]]:
    net = models.image_net
    arrays = _layer_arrays("image", net.layers)
    if isinstance(net, FourierReluNet):
        arrays.append(("image/freq_bank", net.freq_bank))
    if models.class_net is not None:
        arrays += _layer_arrays("class", models.class_net.layers)
    if models.conditioner is not None:
        arrays += _layer_arrays("cond", [*models.conditioner.hidden,
                                         models.conditioner.head])
    return arrays


def save_checkpoint(models: ModelSet, cfg: RunConfig, path: str | Path) -> None:
    """Write version, config snapshot, and all parameters, deterministically."""
    arrays = _model_arrays(models)
    directory = []
    offset = 0
    for name, arr in arrays:
        directory.append({"name": name, "rows": int(arr.shape[0]),
                          "cols": int(arr.shape[1]), "offset": offset})
        offset += arr.size * 8
    class_count = (models.class_net.class_count
                   if models.class_net is not None else 0)
    header = {
        "version": CKPT_VERSION,
        "kind": models.kind,
        "class_count": class_count,
        "trained_shape": list(models.trained_shape) if models.trained_shape else None,
        "config": dataclasses.asdict(cfg),
        "arrays": directory,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<II", CKPT_VERSION, len(blob)))
        fh.write(blob)
        for _, arr in arrays:
            fh.write(arr.astype("<f8").tobytes())


def load_checkpoint(path: str | Path) -> tuple[ModelSet, RunConfig]:
    """Rebuild the networks from a checkpoint; forward passes reproduce the
    saved model bit-identically."""
    data = Path(path).read_bytes()
    if data[:4] != CKPT_MAGIC:
        raise FormatError(f"not a checkpoint file (leading bytes {data[:4]!r})")
    version, header_len = struct.unpack("<II", data[4:12])
    if version != CKPT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}, "
                          f"expected {CKPT_VERSION}")
    header = json.loads(data[12:12 + header_len])
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(header["config"]) - known
    if unknown:
        raise ConfigError(f"checkpoint config has unknown keys {sorted(unknown)}")
    cfg = RunConfig(**header["config"])
    cfg.validate()

    models = build_models(cfg, max(header["class_count"], 1), cfg.seed)
    expected = _model_arrays(models)
    stored = header["arrays"]
    if len(stored) != len(expected):
        raise FormatError(
            f"checkpoint architecture mismatch: expected {len(expected)} "
            f"arrays, found {len(stored)}"
        )
    base = 12 + header_len
    for entry, (name, arr) in zip(stored, expected):
        shape = (entry["rows"], entry["cols"])
        if entry["name"] != name or shape != arr.shape:
            raise FormatError(
                "checkpoint architecture mismatch: expected "
                f"{name} {arr.shape[0]}x{arr.shape[1]}, found "
                f"{entry['name']} {entry['rows']}x{entry['cols']}"
            )
        start = base + entry["offset"]
        nbytes = arr.size * 8
        if start + nbytes > len(data):
            raise OSError("truncated checkpoint file")
        arr[...] = np.frombuffer(data[start:start + nbytes],
                                 dtype="<f8").reshape(shape)
    if header["trained_shape"]:
        models.trained_shape = tuple(header["trained_shape"])
    return models, cfg


# ---------------------------------------------------------------------------
# CSV reports


def write_csv(path: str | Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_train_log(path: str | Path, log) -> None:
    from .training import EpochRecord

    write_csv(path, EpochRecord.CSV_HEADER, [rec.csv_row() for rec in log])
