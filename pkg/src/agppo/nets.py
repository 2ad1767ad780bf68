"""Shared convolution + self-attention encoder with actor, critic and next-reward heads.

Observations arrive as ``(batch, n, n, 3)`` float arrays. The encoder maps a
7x7x3 view to 5x5x256 through three valid convolutions (kernels 2, 2, 1),
applies one single-head self-attention block with a residual connection over
the 25 spatial positions, and flattens to 6400 features. All three heads read
those features, so every loss back-propagates into the encoder.
"""

from __future__ import annotations

import math
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .errors import CheckpointError, ValidationError

N_ACTIONS = 3
N_APPRAISALS = 6


@dataclass(frozen=True)
class NetConfig:
    view_size: int = 7
    conv_channels: tuple[int, int, int] = (32, 64, 256)
    kernel_sizes: tuple[int, int, int] = (2, 2, 1)
    hidden: tuple[int, int] = (256, 64)
    aux_width: int = 0

    @property
    def spatial(self) -> int:
        return self.view_size - sum(k - 1 for k in self.kernel_sizes)

    @property
    def feature_dim(self) -> int:
        return self.spatial**2 * self.conv_channels[-1]

    def fingerprint(self) -> str:
        conv = ",".join(f"{c}k{k}" for c, k in zip(self.conv_channels, self.kernel_sizes))
        hid = ",".join(str(h) for h in self.hidden)
        return f"agppo-net|view={self.view_size}|conv={conv}|attn=1|hidden={hid}|aux={self.aux_width}"

    @classmethod
    def from_fingerprint(cls, fp: str) -> "NetConfig":
        m = re.fullmatch(r"agppo-net\|view=(\d+)\|conv=([\dk,]+)\|attn=1\|hidden=([\d,]+)\|aux=(\d+)", fp)
        if m is None:
            raise CheckpointError(f"unrecognised architecture fingerprint {fp!r}")
        layers = [tuple(int(v) for v in part.split("k")) for part in m.group(2).split(",")]
        return cls(
            view_size=int(m.group(1)),
            conv_channels=tuple(c for c, _ in layers),
            kernel_sizes=tuple(k for _, k in layers),
            hidden=tuple(int(h) for h in m.group(3).split(",")),
            aux_width=int(m.group(4)),
        )


class SelfAttention(nn.Module):
    """Single-head scaled dot-product attention with a residual connection."""

    def __init__(self, dim: int):
        super().__init__()
        self.q = nn.Linear(dim, dim)
        self.k = nn.Linear(dim, dim)
        self.v = nn.Linear(dim, dim)
        self.scale = 1.0 / math.sqrt(dim)
        self.last_weights: torch.Tensor | None = None

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        scores = self.q(tokens) @ self.k(tokens).transpose(-2, -1) * self.scale
        weights = torch.softmax(scores, dim=-1)
        self.last_weights = weights.detach()
        return tokens + weights @ self.v(tokens)


class Encoder(nn.Module):
    def __init__(self, cfg: NetConfig):
        super().__init__()
        in_ch = 3
        layers = []
        for out_ch, k in zip(cfg.conv_channels, cfg.kernel_sizes):
            layers += [nn.Conv2d(in_ch, out_ch, k), nn.ReLU()]
            in_ch = out_ch
        self.conv = nn.Sequential(*layers)
        self.attn = SelfAttention(in_ch)

    def forward(self, obs: torch.Tensor) -> torch.Tensor:
        x = self.conv(obs.permute(0, 3, 1, 2))
        tokens = x.flatten(2).transpose(1, 2)  # (batch, positions, channels)
        return self.attn(tokens).flatten(1)


def _mlp(n_in: int, hidden: tuple[int, ...], n_out: int) -> nn.Sequential:
    layers: list[nn.Module] = []
    for h in hidden:
        layers += [nn.Linear(n_in, h), nn.ReLU()]
        n_in = h
    layers.append(nn.Linear(n_in, n_out))
    return nn.Sequential(*layers)


class AgentNets(nn.Module):
    def __init__(self, cfg: NetConfig = NetConfig()):
        super().__init__()
        self.cfg = cfg
        self.encoder = Encoder(cfg)
        self.actor = _mlp(cfg.feature_dim, cfg.hidden, N_ACTIONS)
        self.critic = _mlp(cfg.feature_dim + cfg.aux_width, cfg.hidden, 1)
        self.nre = _mlp(cfg.feature_dim + N_ACTIONS, cfg.hidden, 1)

    @property
    def dtype(self) -> torch.dtype:
        return self.actor[0].weight.dtype

    def as_tensor(self, x) -> torch.Tensor:
        return torch.as_tensor(np.asarray(x) if not torch.is_tensor(x) else x, dtype=self.dtype)

    def encode(self, obs) -> torch.Tensor:
        obs = self.as_tensor(obs)
        n = self.cfg.view_size
        if obs.shape == (n, n, 3):
            obs = obs.unsqueeze(0)
        if obs.ndim != 4 or obs.shape[1:] != (n, n, 3):
            raise ValidationError(f"observation shape {tuple(obs.shape)} != (batch, {n}, {n}, 3)")
        return self.encoder(obs)

    def _check_features(self, features: torch.Tensor) -> None:
        if features.ndim != 2 or features.shape[1] != self.cfg.feature_dim:
            raise ValidationError(f"features shape {tuple(features.shape)}, expected (batch, {self.cfg.feature_dim})")

    def actor_forward(self, features: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        self._check_features(features)
        logits = self.actor(features)
        return logits, torch.softmax(logits, dim=-1)

    def critic_forward(self, features: torch.Tensor, aux=None) -> torch.Tensor:
        self._check_features(features)
        width = 0 if aux is None else self.as_tensor(aux).shape[-1]
        if width != self.cfg.aux_width:
            raise ValidationError(f"critic expects {self.cfg.aux_width} aux inputs, got {width}")
        if width:
            features = torch.cat([features, self.as_tensor(aux).reshape(len(features), width)], dim=1)
        return self.critic(features).squeeze(-1)

    def nre_forward(self, prev_features: torch.Tensor, prev_probs) -> torch.Tensor:
        self._check_features(prev_features)
        prev_probs = self.as_tensor(prev_probs).reshape(-1, N_ACTIONS)
        if len(prev_probs) != len(prev_features):
            raise ValidationError("feature and action-probability batch sizes differ")
        return self.nre(torch.cat([prev_features, prev_probs], dim=1)).squeeze(-1)


def init_params(seed: int, cfg: NetConfig = NetConfig(), dtype: torch.dtype = torch.float32) -> AgentNets:
    """Orthogonal weights (gain sqrt 2 in hidden layers, 0.01 on the actor output), zero biases."""
    gen = torch.Generator().manual_seed(seed)
    nets = AgentNets(cfg).to(dtype)
    heads = {id(nets.actor[-1]): 0.01, id(nets.critic[-1]): 1.0, id(nets.nre[-1]): 1.0}
    attn = {id(m) for m in (nets.encoder.attn.q, nets.encoder.attn.k, nets.encoder.attn.v)}
    with torch.no_grad():
        for module in nets.modules():
            if isinstance(module, (nn.Linear, nn.Conv2d)):
                gain = heads.get(id(module), 1.0 if id(module) in attn else math.sqrt(2))
                nn.init.orthogonal_(module.weight, gain=gain, generator=gen)
                nn.init.zeros_(module.bias)
    return nets


def flat_parameters(nets: nn.Module) -> np.ndarray:
    return np.concatenate([p.detach().cpu().numpy().ravel() for p in nets.parameters()])


# Checkpoint layout, all little-endian:
#   8 bytes  magic b"AGPPOCKP"
#   uint32   format version
#   uint32   fingerprint length L, then L bytes of UTF-8 fingerprint
#   uint64   parameter count P
#   P x float32 parameters, in nets.named_parameters() order
CHECKPOINT_MAGIC = b"AGPPOCKP"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, nets: AgentNets) -> None:
    fp = nets.cfg.fingerprint().encode()
    flat = flat_parameters(nets).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(fp)))
        fh.write(fp)
        fh.write(struct.pack("<Q", flat.size))
        fh.write(flat.tobytes())


def read_checkpoint_header(path) -> tuple[int, str, int]:
    with open(path, "rb") as fh:
        if fh.read(8) != CHECKPOINT_MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        version, fp_len = struct.unpack("<II", fh.read(8))
        fp = fh.read(fp_len).decode()
        (count,) = struct.unpack("<Q", fh.read(8))
    return version, fp, count


def load_checkpoint(path, expected: NetConfig | None = None) -> AgentNets:
    """Load a checkpoint; with ``expected`` given, the stored fingerprint must match it."""
    path = Path(path)
    version, fp, count = read_checkpoint_header(path)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    if expected is not None and fp != expected.fingerprint():
        raise CheckpointError(f"{path}: architecture {fp!r} does not match {expected.fingerprint()!r}")
    nets = AgentNets(NetConfig.from_fingerprint(fp))
    n_params = sum(p.numel() for p in nets.parameters())
    if count != n_params:
        raise CheckpointError(f"{path}: {count} parameters stored, architecture has {n_params}")
    offset = 8 + 8 + len(fp.encode()) + 8
    flat = np.frombuffer(path.read_bytes(), dtype="<f4", count=count, offset=offset)
    with torch.no_grad():
        i = 0
        for p in nets.parameters():
            p.copy_(torch.from_numpy(flat[i : i + p.numel()].reshape(p.shape).copy()))
            i += p.numel()
    return nets
