"""Training loop and checkpoint I/O.

One sample per optimization step, cross-entropy weighted per batch by
inverse class frequency (the boundary band is thin and vanishes under
the unweighted loss), adaptive-moment optimizer at a fixed learning
rate. Seeding covers weight init and every torch-side draw, so a fixed
seed with a file source replays the same loss curve.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np
import torch
import torch.nn.functional as F

from headnet.unet import UNetSpec, build_model

CHECKPOINT_FORMAT = "headnet-checkpoint-v1"


def class_weights(target, classes):
    """Inverse-frequency weight per class; absent classes get weight 0."""
    counts = torch.bincount(target.reshape(-1), minlength=classes).float()
    weights = counts.sum() / (classes * counts.clamp(min=1.0))
    return torch.where(counts > 0, weights, torch.zeros(()))


def to_batch(image, labels):
    """numpy (nx,ny,nz) pair -> (1,1,nx,ny,nz) float input, (1,nx,ny,nz) target."""
    x = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32))
    y = torch.from_numpy(np.ascontiguousarray(labels, dtype=np.int64))
    return x[None, None], y[None]


def training_loss(model, x, y, classes):
    return F.cross_entropy(model.logits(x), y, weight=class_weights(y, classes))


def train(source, steps, spec, seed, out_path, lr=1e-3, log_path=None):
    """Run ``steps`` single-sample steps; writes a checkpoint, returns losses."""
    torch.manual_seed(seed)
    model = build_model(spec)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    log = open(log_path, "w") if log_path else None
    losses = []
    try:
        model.train()
        iterator = iter(source)
        for step in range(steps):
            image, labels = next(iterator)
            x, y = to_batch(image, labels)
            loss = training_loss(model, x, y, spec.out_classes)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))
            if log:
                log.write(json.dumps({"step": step, "loss": losses[-1]}) + "\n")
    finally:
        if log:
            log.close()
    save_checkpoint(model, out_path, losses=losses)
    return losses


def save_checkpoint(model, path, losses=()):
    torch.save(
        {
            "format": CHECKPOINT_FORMAT,
            "spec": dataclasses.asdict(model.spec),
            "state_dict": model.state_dict(),
            "losses": list(losses),
        },
        path,
    )


def load_checkpoint(path):
    """Rebuild the model from a checkpoint; returns (model, losses)."""
    saved = torch.load(path, map_location="cpu", weights_only=True)
    if saved.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a recognized checkpoint")
    fields = dict(saved["spec"])
    fields["in_dims"] = tuple(fields["in_dims"])
    model = build_model(UNetSpec(**fields))
    model.load_state_dict(saved["state_dict"])
    model.eval()
    return model, list(saved.get("losses", ()))
