"""Cross-checks against torchvision, which is an independent implementation
of both networks. Skipped when torch / torchvision are not installed.

Needs SENTI_WEIGHTS_TOOL (path to senti-weights) in the environment.
"""

import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

torch = pytest.importorskip("torch")
torchvision = pytest.importorskip("torchvision")
pytest.importorskip("safetensors")
from safetensors.numpy import load_file  # noqa: E402

ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT / "tools"))
import convert_torchvision_weights as convert  # noqa: E402

TAPS = {
    "densenet121": [
        "features.relu0",
        "features.denseblock1.denselayer1.relu1",
        "features.denseblock2.denselayer1.relu1",
        "features.denseblock3.denselayer1.relu1",
        "features.denseblock4.denselayer1.relu1",
    ],
    "vgg19": ["features.1", "features.6", "features.11", "features.20", "features.29"],
}
MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


def tool():
    path = os.environ.get("SENTI_WEIGHTS_TOOL")
    if not path:
        pytest.skip("SENTI_WEIGHTS_TOOL not set")
    return path


def read_manifest(backbone):
    rows = []
    for line in (ROOT / "docs" / f"weights-manifest-{backbone}.txt").read_text().splitlines():
        if line.startswith("#") or not line.strip():
            continue
        name, *dims = line.split()
        rows.append((name, [int(d) for d in dims]))
    return rows


@pytest.mark.parametrize("backbone", ["densenet121", "vgg19"])
def test_manifest_is_state_dict_prefix(backbone):
    # The graph stops at the last tap, so it reads a prefix of the feature
    # parameters in registration order.
    model = getattr(torchvision.models, backbone)(weights=None)
    ordered = [(k, list(t.shape)) for k, t in convert.feature_tensors(model).items()]
    manifest = read_manifest(backbone)
    assert manifest == ordered[: len(manifest)]


@pytest.mark.parametrize("backbone", ["densenet121", "vgg19"])
def test_tap_activations_match(backbone, tmp_path):
    model, source = convert.build(backbone, 7)
    model.eval()
    archive = tmp_path / f"{backbone}.safetensors"
    convert.write_archive(convert.feature_tensors(model), archive, source)

    import cv2

    img = cv2.imread(str(ROOT / "data" / "desk" / "chelsea.png"), cv2.IMREAD_COLOR)
    assert img is not None
    rgb = cv2.cvtColor(img, cv2.COLOR_BGR2RGB).astype(np.float32) / 255.0
    x = torch.from_numpy(((rgb - MEAN) / STD).transpose(2, 0, 1).copy()).unsqueeze(0)

    captured = {}
    modules = dict(model.named_modules())
    hooks = [
        modules[name].register_forward_hook(lambda m, i, o, name=name: captured.__setitem__(name, o.detach().clone()))
        for name in TAPS[backbone]
    ]
    with torch.no_grad():
        model.features(x)
    for h in hooks:
        h.remove()

    out = tmp_path / "probe.safetensors"
    subprocess.run(
        [tool(), "probe", "--backbone", backbone, "--weights", str(archive), "--image",
         str(ROOT / "data" / "desk" / "chelsea.png"), "--out", str(out)],
        check=True,
    )
    ours = load_file(str(out))
    for i, name in enumerate(TAPS[backbone]):
        ref = captured[name][0].numpy()
        got = ours[f"f{i + 1}"]
        assert got.shape == ref.shape, name
        scale = max(float(np.abs(ref).max()), 1e-6)
        assert float(np.abs(got - ref).max()) / scale < 1e-4, name
