#!/usr/bin/env python3
"""Convert a torchvision densenet121 / vgg19 feature extractor into the
archive layout senti reads (F32 safetensors + sha256 sidecar).

  convert_torchvision_weights.py --backbone densenet121 --out densenet121.safetensors
  convert_torchvision_weights.py --backbone vgg19 --random-init 0 --out vgg19.safetensors

Without --random-init the ImageNet checkpoint is fetched through torchvision,
which needs network access the first time.
"""

import argparse
import hashlib
from pathlib import Path

import torch
import torchvision
from safetensors.torch import save_file

FORMAT_VERSION = "1"


def build(backbone: str, random_seed):
    ctor = getattr(torchvision.models, backbone)
    if random_seed is None:
        weights = {"densenet121": "DEFAULT", "vgg19": "DEFAULT"}[backbone]
        return ctor(weights=weights), "torchvision:" + backbone + ":imagenet"
    torch.manual_seed(random_seed)
    model = ctor(weights=None)
    # Fresh batch-norm layers have mean 0 / var 1; perturb them so a
    # comparison exercises the folding.
    with torch.no_grad():
        for m in model.modules():
            if isinstance(m, torch.nn.BatchNorm2d):
                m.running_mean.uniform_(-0.2, 0.2)
                m.running_var.uniform_(0.5, 1.5)
                m.weight.uniform_(0.5, 1.5)
                m.bias.uniform_(-0.2, 0.2)
    return model, f"torchvision:{backbone}:random:{random_seed}"


def feature_tensors(model):
    out = {}
    for name, t in model.state_dict().items():
        if not name.startswith("features.") or name.endswith("num_batches_tracked"):
            continue
        out[name] = t.detach().to(torch.float32).contiguous()
    return out


def write_archive(tensors, path: Path, source: str):
    save_file(tensors, str(path), metadata={"format_version": FORMAT_VERSION, "source": source})
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    Path(str(path) + ".sha256").write_text(f"{digest}  {path.name}\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--backbone", choices=["densenet121", "vgg19"], required=True)
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--random-init", type=int, metavar="SEED", help="skip the checkpoint, use seeded random init")
    args = ap.parse_args()
    model, source = build(args.backbone, args.random_init)
    write_archive(feature_tensors(model), args.out, source)
    print(args.out)


if __name__ == "__main__":
    main()
