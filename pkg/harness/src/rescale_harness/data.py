"""Dataset loading and the resolution pipeline.

Images are downsampled once to the experiment's base resolution (area
interpolation); models that want a higher input resolution receive the
base-resolution images enlarged with nearest-neighbor upsampling, so no
model sees information the original did not.

Backends:

* mnist / fmnist / cifar10: torchvision, downloaded on first use.
* digits: scikit-learn's bundled 8x8 digit images; fully offline, used by
  the tests and the smoke protocol.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F


class DatasetUnavailable(RuntimeError):
    """The dataset (or the network to fetch it) is not available."""


@dataclass(frozen=True)
class SplitTensors:
    """Full train/test splits as float tensors in [0, 1], NCHW."""

    train_x: torch.Tensor
    train_y: torch.Tensor
    test_x: torch.Tensor
    test_y: torch.Tensor

    @property
    def native_resolution(self) -> int:
        return self.train_x.shape[-1]

    @property
    def channels(self) -> int:
        return self.train_x.shape[1]


DATASETS = ("mnist", "fmnist", "cifar10", "digits")

# dataset -> (native resolution, channels, base-resolution pyramid)
PROFILES = {
    "mnist": (28, 1, (7, 14, 28)),
    "fmnist": (28, 1, (7, 14, 28)),
    "cifar10": (32, 3, (8, 16, 32)),
    "digits": (8, 1, (4, 8)),
}


def _load_digits() -> SplitTensors:
    from sklearn.datasets import load_digits

    bunch = load_digits()
    x = torch.tensor(bunch.images, dtype=torch.float32).unsqueeze(1) / 16.0
    y = torch.tensor(bunch.target, dtype=torch.long)
    # Fixed deterministic split: every 5th sample is test (~20%, stratified
    # enough for a 10-class smoke dataset).
    idx = torch.arange(len(y))
    test_mask = idx % 5 == 0
    return SplitTensors(x[~test_mask], y[~test_mask], x[test_mask], y[test_mask])


def _load_torchvision(name: str, root: str) -> SplitTensors:
    try:
        import torchvision
        from torchvision import transforms  # noqa: F401
    except ImportError as exc:
        raise DatasetUnavailable("torchvision is not installed") from exc

    classes = {
        "mnist": torchvision.datasets.MNIST,
        "fmnist": torchvision.datasets.FashionMNIST,
        "cifar10": torchvision.datasets.CIFAR10,
    }
    cls = classes[name]
    try:
        train = cls(root, train=True, download=True)
        test = cls(root, train=False, download=True)
    except Exception as exc:  # torchvision raises bare RuntimeError on fetch failure
        raise DatasetUnavailable(f"could not obtain {name}: {exc}") from exc

    def to_tensor(ds) -> tuple[torch.Tensor, torch.Tensor]:
        data = torch.as_tensor(ds.data if hasattr(ds, "data") else ds.train_data)
        if data.ndim == 3:  # (N, H, W) grayscale
            x = data.unsqueeze(1).float() / 255.0
        else:  # (N, H, W, C)
            x = data.permute(0, 3, 1, 2).float() / 255.0
        y = torch.as_tensor(ds.targets, dtype=torch.long)
        return x, y

    train_x, train_y = to_tensor(train)
    test_x, test_y = to_tensor(test)
    return SplitTensors(train_x, train_y, test_x, test_y)


def load_dataset(name: str, root: str = "data") -> SplitTensors:
    if name == "digits":
        return _load_digits()
    if name in ("mnist", "fmnist", "cifar10"):
        return _load_torchvision(name, root)
    raise ValueError(f"unknown dataset {name!r}; choose from {DATASETS}")


def downsample(x: torch.Tensor, resolution: int) -> torch.Tensor:
    """Area-interpolate a batch down to resolution x resolution."""
    if x.shape[-1] == resolution:
        return x
    if x.shape[-1] < resolution:
        raise ValueError(f"cannot downsample {x.shape[-1]} to {resolution}")
    return F.interpolate(x, size=(resolution, resolution), mode="area")


def upsample_nearest(x: torch.Tensor, resolution: int) -> torch.Tensor:
    """Nearest-neighbor enlargement of a batch to resolution x resolution."""
    if x.shape[-1] == resolution:
        return x
    if x.shape[-1] > resolution:
        raise ValueError(f"refusing to shrink {x.shape[-1]} to {resolution}")
    return F.interpolate(x, size=(resolution, resolution), mode="nearest")


def at_base_resolution(split: SplitTensors, base_resolution: int) -> SplitTensors:
    """The whole dataset downsampled to the experiment's base resolution."""
    return SplitTensors(
        downsample(split.train_x, base_resolution),
        split.train_y,
        downsample(split.test_x, base_resolution),
        split.test_y,
    )
