"""Conversions between the numpy HWC interchange format and torch NCHW."""

from __future__ import annotations

import numpy as np
import torch


def to_nchw(arr: np.ndarray, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """HWC or NHWC numpy array -> NCHW torch tensor."""
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4:
        raise ValueError(f"expected HWC or NHWC array, got shape {arr.shape}")
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(0, 3, 1, 2))).to(dtype)


def to_hwc(t: torch.Tensor) -> np.ndarray:
    """CHW or NCHW tensor -> HWC or NHWC float32 numpy array."""
    t = t.detach().cpu()
    if t.dim() == 3:
        return t.permute(1, 2, 0).numpy().astype(np.float32)
    if t.dim() == 4:
        out = t.permute(0, 2, 3, 1).numpy().astype(np.float32)
        return out[0] if out.shape[0] == 1 else out
    raise ValueError(f"expected CHW or NCHW tensor, got shape {tuple(t.shape)}")
