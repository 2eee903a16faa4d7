#!/usr/bin/env python3
# Copyright 2026 The NIB Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Independent float64 PyTorch reference for the toy dual encoder.

Reads the artifacts written by `nib-cli init-toy` and emits golden values
(similarities, hidden states, closed-bottleneck scores and attribution maps)
that the C++ tests compare against. Nothing here shares code with the C++
implementation; only the file formats and the architecture description are
common.

    python3 reference_oracle.py ARTIFACT_DIR OUT_JSON
"""

import json
import math
import struct
import sys
from pathlib import Path

import torch

torch.set_default_dtype(torch.float64)


def read_bundle(path):
    data = Path(path).read_bytes()
    if data[:4] != b"NIBT":
        raise ValueError("bad magic")
    version, count = struct.unpack_from("<II", data, 4)
    if version != 1:
        raise ValueError("unsupported version")
    off = 12
    out = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", data, off)
        off += 4
        name = data[off:off + name_len].decode()
        off += name_len
        dtype, rank = struct.unpack_from("<BB", data, off)
        off += 2
        if dtype != 0:
            raise ValueError("unsupported dtype")
        dims = struct.unpack_from("<%dI" % rank, data, off)
        off += 4 * rank
        n = math.prod(dims)
        values = struct.unpack_from("<%df" % n, data, off)
        off += 4 * n
        out[name] = torch.tensor(values, dtype=torch.float64).reshape(dims)
    if off != len(data):
        raise ValueError("trailing bytes")
    return out


class Toy:
    def __init__(self, manifest_path):
        manifest_path = Path(manifest_path)
        cfg = json.loads(manifest_path.read_text())
        self.cfg = cfg
        self.w = read_bundle(manifest_path.parent / cfg["bundle"])
        self.eps = cfg["ln_eps"]

    def ln(self, x, gain, bias):
        mu = x.mean(dim=-1, keepdim=True)
        var = ((x - mu) ** 2).mean(dim=-1, keepdim=True)
        return (x - mu) / torch.sqrt(var + self.eps) * gain + bias

    def block(self, tower, b, x):
        p = "%s.blocks.%d." % (tower, b)
        w = self.w
        heads = self.cfg["heads"]
        dh = self.cfg["d_model"] // heads
        h = self.ln(x, w[p + "ln1.gain"], w[p + "ln1.bias"])
        q = h @ w[p + "attn.wq"] + w[p + "attn.bq"]
        k = h @ w[p + "attn.wk"] + w[p + "attn.bk"]
        v = h @ w[p + "attn.wv"] + w[p + "attn.bv"]
        outs = []
        for i in range(heads):
            sl = slice(i * dh, (i + 1) * dh)
            att = torch.softmax(q[:, sl] @ k[:, sl].T / math.sqrt(dh), dim=1)
            outs.append(att @ v[:, sl])
        x = x + torch.cat(outs, dim=1) @ w[p + "attn.wo"] + w[p + "attn.bo"]
        h2 = self.ln(x, w[p + "ln2.gain"], w[p + "ln2.bias"])
        a = h2 @ w[p + "mlp.w1"] + w[p + "mlp.b1"]
        gelu = 0.5 * a * (1.0 + torch.erf(a / math.sqrt(2.0)))
        return x + gelu @ w[p + "mlp.w2"] + w[p + "mlp.b2"]

    def patches(self, image):
        c, s, p = self.cfg["channels"], self.cfg["image_size"], self.cfg["patch"]
        g = s // p
        # [C, g, p, g, p] -> [g, g, C, p, p]
        t = image.reshape(c, g, p, g, p).permute(1, 3, 0, 2, 4)
        return t.reshape(g * g, c * p * p)

    def image_prefix(self, patch_rows, layer):
        w = self.w
        emb = patch_rows @ w["image.patch_embed.weight"] + w["image.patch_embed.bias"]
        x = torch.cat([w["image.cls"].reshape(1, -1), emb], dim=0) + w["image.pos"]
        for b in range(layer):
            x = self.block("image", b, x)
        return x

    def text_prefix(self, embeddings, layer):
        x = embeddings + self.w["text.pos"][: embeddings.shape[0]]
        for b in range(layer):
            x = self.block("text", b, x)
        return x

    def suffix(self, tower, hidden, layer, pool_row):
        x = hidden
        for b in range(layer, self.cfg["layers"]):
            x = self.block(tower, b, x)
        w = self.w
        pooled = self.ln(x[pool_row], w[tower + ".ln_final.gain"], w[tower + ".ln_final.bias"])
        return pooled @ w[tower + ".proj"]

    def embed_image(self, image):
        L = self.cfg["layers"]
        return self.suffix("image", self.image_prefix(self.patches(image), L), L, 0)

    def embed_text(self, ids):
        L = self.cfg["layers"]
        e = self.w["text.token_embed"][ids]
        return self.suffix("text", self.text_prefix(e, L), L, len(ids) - 1)


def cos(u, v):
    return torch.dot(u, v) / (torch.linalg.norm(u) * torch.linalg.norm(v))


def content_rows(cfg, ids):
    special = {cfg["vocab"] - 2, cfg["vocab"] - 1}
    return [i for i, t in enumerate(ids) if t not in special]


def nib(model, image, ids, modality, layer, steps):
    cfg = model.cfg
    if modality == "image":
        z = model.image_prefix(model.patches(image), layer).detach()
        other = model.embed_text(ids).detach()
        tower, pool, reported = "image", 0, list(range(1, z.shape[0]))
    else:
        z = model.text_prefix(model.w["text.token_embed"][ids], layer).detach()
        other = model.embed_image(image).detach()
        tower, pool, reported = "text", len(ids) - 1, content_rows(cfg, ids)
    grad_sum = torch.zeros_like(z)
    for k in range(1, steps + 1):
        zt = (k / steps * z).clone().requires_grad_(True)
        s = cos(model.suffix(tower, zt, layer, pool), other)
        (g,) = torch.autograd.grad(s, zt)
        grad_sum += g
    contrib = (z * grad_sum / steps).sum(dim=1)
    s1 = cos(model.suffix(tower, z, layer, pool), other).item()
    closed = model.suffix(tower, torch.zeros_like(z), layer, pool)
    s0 = 0.0 if torch.linalg.norm(closed) < 1e-12 else cos(closed, other).item()
    gap = abs(contrib.sum().item() - (s1 - s0))
    return {
        "scores": [contrib[i].item() for i in reported],
        "score_open": s1,
        "score_closed": s0,
        "completeness_gap": gap,
    }


def input_grad(model, image, ids, x):
    xr = x.clone().requires_grad_(True)
    L = model.cfg["layers"]
    s = cos(model.suffix("image", model.image_prefix(xr, L), L, 0), model.embed_text(ids).detach())
    (g,) = torch.autograd.grad(s, xr)
    return g


def image_baselines(model, image, ids, layer, steps):
    x = model.patches(image)
    g = input_grad(model, image, ids, x)
    out = {
        "sm": g.abs().sum(dim=1).tolist(),
        "fastig": (x * g).sum(dim=1).tolist(),
    }
    acc = torch.zeros_like(x)
    for k in range(1, steps + 1):
        acc += input_grad(model, image, ids, x * (k / steps))
    out["ig"] = (x * acc / steps).sum(dim=1).tolist()

    z = model.image_prefix(x, layer).detach().requires_grad_(True)
    s = cos(model.suffix("image", z, layer, 0), model.embed_text(ids).detach())
    (gz,) = torch.autograd.grad(s, z)
    weights = gz[1:].mean(dim=0)
    cam = torch.clamp((z.detach() * weights).sum(dim=1), min=0.0)
    out["gradcam"] = cam[1:].tolist()
    return out


def sample_record(model, sid, image, ids, layer):
    L = model.cfg["layers"]
    hidden = model.image_prefix(model.patches(image), layer)
    rec = {
        "id": sid,
        "similarity": cos(model.embed_image(image), model.embed_text(ids)).item(),
        "image_embedding": model.embed_image(image).tolist(),
        "text_embedding": model.embed_text(ids).tolist(),
        "image_hidden_row0": hidden[0].tolist(),
        "image_hidden_sum": hidden.sum().item(),
        "nib_image_m10": nib(model, image, ids, "image", layer, 10),
        "nib_text_m10": nib(model, image, ids, "text", layer, 10),
        "baselines_image": image_baselines(model, image, ids, layer, 10),
    }
    assert L >= layer
    return rec


def main():
    art = Path(sys.argv[1])
    out_path = Path(sys.argv[2])
    model = Toy(art / "model.json")
    layer = model.cfg["bottleneck_layer"]
    records = []
    for manifest, limit in (("two_concept.json", 1), ("dataset.json", 2)):
        ds = json.loads((art / manifest).read_text())
        tensors = read_bundle(art / ds["bundle"])
        for s in ds["samples"][:limit]:
            records.append(sample_record(model, s["id"], tensors[s["image"]], s["tokens"], layer))
    doc = {
        "generator": "reference_oracle.py (torch %s, float64)" % torch.__version__,
        "toy_seed": 0,
        "layer": layer,
        "samples": records,
    }
    out_path.write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
