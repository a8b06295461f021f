"""PNG image I/O.

All pixel data crossing the package boundary is float32 HxWxC in [0, 1].
8-bit PNG is the default interchange format; 16-bit PNG is available
behind the ``bits=16`` flag for lossless round-trips of high-precision
outputs.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .errors import IngestionError, ValidationError


def to_float(arr: np.ndarray) -> np.ndarray:
    """Convert a uint8/uint16 array to float32 in [0, 1]."""
    if arr.dtype == np.uint8:
        return arr.astype(np.float32) / 255.0
    if arr.dtype == np.uint16:
        return arr.astype(np.float32) / 65535.0
    raise ValidationError(f"unsupported integer dtype {arr.dtype}")


def quantize(img: np.ndarray, bits: int = 8) -> np.ndarray:
    """Round a float image in [0, 1] onto the integer grid for *bits*."""
    if bits == 8:
        return np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    if bits == 16:
        return np.clip(np.rint(img * 65535.0), 0, 65535).astype(np.uint16)
    raise ValidationError(f"bits must be 8 or 16, got {bits}")


def snap_to_grid(img: np.ndarray, bits: int = 8) -> np.ndarray:
    """Quantize and convert back to float, so memory equals what PNG stores."""
    return to_float(quantize(img, bits=bits))


def save_image(path: str | os.PathLike, img: np.ndarray, bits: int = 8) -> None:
    """Write a float32 HxWxC (or HxW) image in [0, 1] as a PNG file."""
    img = np.asarray(img, dtype=np.float32)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValidationError(f"expected HxWx{{1,3}} image, got shape {img.shape}")
    data = quantize(img, bits=bits)
    if bits == 8:
        mode = "L" if data.shape[2] == 1 else "RGB"
        Image.fromarray(data.squeeze(2) if mode == "L" else data, mode=mode).save(
            path, format="PNG"
        )
    else:
        # Pillow has no 16-bit RGB mode; OpenCV writes it natively (BGR order).
        import cv2

        bgr = data[:, :, ::-1] if data.shape[2] == 3 else data
        if not cv2.imwrite(str(path), bgr):
            raise IOError(f"failed to write {path}")


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Read a PNG (8- or 16-bit) into float32 HxWx3 in [0, 1]."""
    import cv2

    data = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if data is None:
        raise IngestionError(f"cannot read image file: {path}")
    return _decoded_to_float(data)


def decode_png_bytes(blob: bytes) -> np.ndarray:
    """Decode in-memory PNG bytes into float32 HxWx3 in [0, 1]."""
    import cv2

    data = cv2.imdecode(np.frombuffer(blob, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if data is None:
        raise ValidationError("payload is not a decodable image")
    return _decoded_to_float(data)


def encode_png_bytes(img: np.ndarray, bits: int = 8) -> bytes:
    """Encode a float image in [0, 1] as PNG bytes."""
    import cv2

    img = np.asarray(img, dtype=np.float32)
    if img.ndim == 2:
        img = img[:, :, None]
    data = quantize(img, bits=bits)
    bgr = data[:, :, ::-1] if data.shape[2] == 3 else data
    ok, buf = cv2.imencode(".png", bgr)
    if not ok:
        raise ValidationError("failed to encode image")
    return buf.tobytes()


def _decoded_to_float(data: np.ndarray) -> np.ndarray:
    if data.ndim == 2:
        data = data[:, :, None]
    if data.shape[2] == 4:  # drop alpha
        data = data[:, :, :3]
    if data.shape[2] == 3:  # BGR -> RGB
        data = data[:, :, ::-1]
    img = to_float(np.ascontiguousarray(data))
    if img.shape[2] == 1:
        img = np.repeat(img, 3, axis=2)
    return img
