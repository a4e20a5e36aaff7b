"""Builds the tiny ONNX assets used by the neural-backend tests.

The models are randomly initialised (fixed seed) stand-ins with the same I/O
contract as real exported assets:

* tiny_vae.onnx      image [1,3,S,S] in [-1,1] -> reconstruction [1,3,S,S]
                     (encoder moments -> mean half -> decoder, factor 4)
* tiny_lpips.onnx    image [1,3,S,S] in [-1,1] -> feat1..feat5
* tiny_lpips_heads.json  non-negative per-channel head weights per stage
* tiny_golden.json   reference LPIPS values computed here in torch
"""
import hashlib
import json
import pathlib

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

OUT = pathlib.Path(__file__).parent
torch.manual_seed(7)


class TinyVae(nn.Module):
    def __init__(self):
        super().__init__()
        self.enc1 = nn.Conv2d(3, 8, 3, stride=2, padding=1)
        self.enc2 = nn.Conv2d(8, 8, 3, stride=2, padding=1)
        self.moments = nn.Conv2d(8, 8, 1)  # 4 mean + 4 logvar
        self.dec1 = nn.Conv2d(4, 8, 3, padding=1)
        self.dec2 = nn.Conv2d(8, 3, 3, padding=1)

    def forward(self, x):
        h = F.silu(self.enc1(x))
        h = F.silu(self.enc2(h))
        mean, _logvar = torch.chunk(self.moments(h), 2, dim=1)
        h = F.interpolate(mean, scale_factor=4.0, mode="nearest")
        h = F.silu(self.dec1(h))
        return torch.tanh(self.dec2(h))


CHANNELS = [4, 8, 8, 16, 16]


class TinyBackbone(nn.Module):
    def __init__(self):
        super().__init__()
        layers = []
        c_in = 3
        for c in CHANNELS:
            layers.append(nn.Conv2d(c_in, c, 3, padding=1))
            c_in = c
        self.convs = nn.ModuleList(layers)

    def forward(self, x):
        feats = []
        h = x
        for i, conv in enumerate(self.convs):
            if i > 0:
                h = F.max_pool2d(h, 2)
            h = F.relu(conv(h))
            feats.append(h)
        return tuple(feats)


def lpips_terms(backbone, heads, x, y, eps=1e-10):
    fx = backbone(x * 2 - 1)
    fy = backbone(y * 2 - 1)
    terms = []
    for a, b, w in zip(fx, fy, heads):
        na = a / (torch.sqrt(torch.sum(a * a, dim=1, keepdim=True)) + eps)
        nb = b / (torch.sqrt(torch.sum(b * b, dim=1, keepdim=True)) + eps)
        d = (na - nb) ** 2 * w.view(1, -1, 1, 1)
        terms.append(d.sum(dim=1).mean().item())
    return terms


def sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def main():
    side = 32
    vae = TinyVae().eval()
    backbone = TinyBackbone().eval()
    dummy = torch.zeros(1, 3, side, side)
    torch.onnx.export(vae, dummy, OUT / "tiny_vae.onnx", input_names=["image"],
                      output_names=["reconstruction"], opset_version=17, dynamo=False)
    torch.onnx.export(backbone, dummy, OUT / "tiny_lpips.onnx", input_names=["image"],
                      output_names=[f"feat{i}" for i in range(1, 6)], opset_version=17,
                      dynamo=False)
    heads = [torch.rand(c) for c in CHANNELS]
    (OUT / "tiny_lpips_heads.json").write_text(json.dumps(
        {"stages": [[round(float(v), 6) for v in h] for h in heads]}))
    heads = [torch.tensor(json.loads((OUT / "tiny_lpips_heads.json").read_text())["stages"][i])
             for i in range(5)]

    gen = torch.Generator().manual_seed(11)
    x = torch.rand(1, 3, side, side, generator=gen)
    # 3x3 gaussian sigma 0.8 blur, reflect padding
    t = torch.arange(-1, 2, dtype=torch.float32)
    g = torch.exp(-t * t / (2 * 0.8 ** 2))
    g = g / g.sum()
    k2 = (g[:, None] * g[None, :]).expand(3, 1, 3, 3)
    y = F.conv2d(F.pad(x, (1, 1, 1, 1), mode="reflect"), k2, groups=3)
    with torch.no_grad():
        terms = lpips_terms(backbone, heads, x, y)
        recon = (vae(x * 2 - 1) + 1) / 2
    x.numpy().astype("<f4").tofile(OUT / "tiny_golden_x.f32")
    y.numpy().astype("<f4").tofile(OUT / "tiny_golden_y.f32")
    recon.numpy().astype("<f4").tofile(OUT / "tiny_golden_recon.f32")
    index = {
        "side": side,
        "channels": CHANNELS,
        "fixtures": [{
            "name": "gaussian_pair",
            "x": "tiny_golden_x.f32",
            "y": "tiny_golden_y.f32",
            "reconstruction": "tiny_golden_recon.f32",
            "lpips_full": sum(terms),
            "lpips_layers": terms,
        }],
    }
    for f in index["fixtures"]:
        f["checksums"] = {k: sha256(OUT / f[k]) for k in ("x", "y", "reconstruction")}
    (OUT / "tiny_golden.json").write_text(json.dumps(index, indent=2))
    for name in ("tiny_vae.onnx", "tiny_lpips.onnx", "tiny_lpips_heads.json"):
        print(name, sha256(OUT / name))


if __name__ == "__main__":
    main()
