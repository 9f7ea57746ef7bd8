"""Learned 4-D path descriptors: an autoencoder trained online during
evolution, with its 4-unit bottleneck used as the descriptor vector.

The network is a fully connected stack of 80-64-48-32-16-4-16-32-48-64-80
hidden units over 80 inputs/outputs, trained with Adagrad on mean absolute
reconstruction error. Inputs are foot paths resampled to 40 points,
centered on their centroid and scaled to decimeter-ish units.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Optional

import numpy as np

from .descriptors import bin_index
from .kinematics import PathTrace

if TYPE_CHECKING:  # pragma: no cover
    from .evolve import Repertoire

log = logging.getLogger(__name__)

PATH_POINTS = 40
INPUT_SIZE = 2 * PATH_POINTS
PATH_SCALE = 100.0  # mm per feature unit

HIDDEN_SIZES = (80, 64, 48, 32, 16, 4, 16, 32, 48, 64, 80)
LAYER_SIZES = (INPUT_SIZE,) + HIDDEN_SIZES + (INPUT_SIZE,)
LATENT_SIZE = 4
_LATENT_LAYER = HIDDEN_SIZES.index(LATENT_SIZE) + 1  # forward passes to the bottleneck

ADAGRAD_EPS = 1e-8


def path_to_vector(trace: PathTrace, n_points: int = PATH_POINTS) -> np.ndarray:
    """Resample an error-free foot path to ``n_points`` by uniform arc
    length (starting at the crank-angle-zero step), center it on its
    centroid, scale by 1/100 and interleave x,y into one vector."""
    if trace.error_count > 0:
        raise ValueError("path vectors are only defined for error-free paths")
    path = trace.foot_path
    closed = np.vstack([path, path[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total <= 0.0:
        points = np.repeat(path[:1], n_points, axis=0)
    else:
        s = np.arange(n_points) * total / n_points
        points = np.column_stack([np.interp(s, cum, closed[:, 0]),
                                  np.interp(s, cum, closed[:, 1])])
    points = (points - points.mean(axis=0)) / PATH_SCALE
    return points.ravel()


@dataclass
class Autoencoder:
    """Plain numpy MLP autoencoder: tanh hidden layers, linear output,
    per-parameter Adagrad accumulators carried between training calls."""

    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)
    grad_accum_w: list = field(default_factory=list)
    grad_accum_b: list = field(default_factory=list)

    @classmethod
    def initialize(cls, rng: np.random.Generator,
                   layer_sizes: tuple = LAYER_SIZES) -> "Autoencoder":
        ae = cls()
        for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            limit = np.sqrt(6.0 / (n_in + n_out))
            ae.weights.append(rng.uniform(-limit, limit, (n_in, n_out)))
            ae.biases.append(np.zeros(n_out))
            ae.grad_accum_w.append(np.zeros((n_in, n_out)))
            ae.grad_accum_b.append(np.zeros(n_out))
        return ae

    @property
    def layer_sizes(self) -> tuple:
        return tuple([self.weights[0].shape[0]] + [w.shape[1] for w in self.weights])

    @property
    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def _forward(self, x: np.ndarray) -> list:
        """All layer activations; hidden layers tanh, final layer linear."""
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = z if i == last else np.tanh(z)
            acts.append(h)
        return acts

    def reconstruct(self, x: np.ndarray) -> np.ndarray:
        return self._forward(np.atleast_2d(x))[-1]

    def encode(self, x: np.ndarray) -> np.ndarray:
        """Forward pass up to the 4-unit bottleneck."""
        h = np.atleast_2d(x)
        for i in range(_LATENT_LAYER):
            h = np.tanh(h @ self.weights[i] + self.biases[i])
        return h

    def mae(self, x: np.ndarray) -> float:
        x = np.atleast_2d(x)
        return float(np.abs(self.reconstruct(x) - x).mean())

    def loss_and_grads(self, x: np.ndarray):
        """Mean-absolute-error reconstruction loss and its gradients."""
        x = np.atleast_2d(x)
        acts = self._forward(x)
        residual = acts[-1] - x
        loss = float(np.abs(residual).mean())
        delta = np.sign(residual) / residual.size
        grads_w, grads_b = [], []
        for i in range(len(self.weights) - 1, -1, -1):
            grads_w.append(acts[i].T @ delta)
            grads_b.append(delta.sum(axis=0))
            if i > 0:
                delta = (delta @ self.weights[i].T) * (1.0 - acts[i] ** 2)
        grads_w.reverse()
        grads_b.reverse()
        return loss, grads_w, grads_b

    def _adagrad_step(self, grads_w, grads_b, lr: float):
        for i in range(len(self.weights)):
            self.grad_accum_w[i] += grads_w[i] ** 2
            self.grad_accum_b[i] += grads_b[i] ** 2
            self.weights[i] -= lr * grads_w[i] / (np.sqrt(self.grad_accum_w[i]) + ADAGRAD_EPS)
            self.biases[i] -= lr * grads_b[i] / (np.sqrt(self.grad_accum_b[i]) + ADAGRAD_EPS)

    def save(self, path):
        payload = {"layer_sizes": list(self.layer_sizes),
                   "weights": [w.ravel().tolist() for w in self.weights],
                   "biases": [b.tolist() for b in self.biases],
                   "grad_accum_w": [g.ravel().tolist() for g in self.grad_accum_w],
                   "grad_accum_b": [g.tolist() for g in self.grad_accum_b]}
        Path(path).write_text(json.dumps(payload))

    @classmethod
    def load(cls, path) -> "Autoencoder":
        payload = json.loads(Path(path).read_text())
        sizes = payload["layer_sizes"]
        ae = cls()
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            ae.weights.append(np.asarray(payload["weights"][i]).reshape(n_in, n_out))
            ae.biases.append(np.asarray(payload["biases"][i]))
            ae.grad_accum_w.append(np.asarray(payload["grad_accum_w"][i]).reshape(n_in, n_out))
            ae.grad_accum_b.append(np.asarray(payload["grad_accum_b"][i]))
        return ae


def train(ae: Autoencoder, data: np.ndarray, epochs: int, lr: float = 0.01,
          batch_size: int = 256, rng: Optional[np.random.Generator] = None) -> Autoencoder:
    """Minibatch Adagrad training on MAE reconstruction loss, in place.
    Shuffling comes from ``rng`` so training is reproducible."""
    data = np.atleast_2d(data)
    if len(data) == 0:
        raise ValueError("training data must be non-empty")
    rng = rng or np.random.default_rng(0)
    for _ in range(epochs):
        order = rng.permutation(len(data))
        for start in range(0, len(data), batch_size):
            batch = data[order[start:start + batch_size]]
            _, gw, gb = ae.loss_and_grads(batch)
            ae._adagrad_step(gw, gb, lr)
    return ae


@dataclass
class AuroraConfig:
    bootstrap_epochs: int = 3000
    retrain_epochs: int = 1000
    retrain_every: int = 10
    lr: float = 0.01
    batch_size: int = 256
    rebin: bool = True  # re-insert archived elites after every retraining


def latent_bounds(latents: np.ndarray):
    """Per-dimension min/max, widened where degenerate so binning stays valid."""
    lo = latents.min(axis=0)
    hi = latents.max(axis=0)
    flat = hi - lo <= 0
    lo[flat] -= 1e-6
    hi[flat] += 1e-6
    return lo, hi


def aurora_schedule(repertoire: "Repertoire", ae: Autoencoder, iteration: int,
                    rng: np.random.Generator, cfg: AuroraConfig,
                    bootstrap_vectors: Optional[np.ndarray] = None) -> bool:
    """Training schedule for the learned descriptor space.

    Iteration 0 trains on the bootstrap paths and sets the latent grid
    bounds from their encodings. Every ``retrain_every`` iterations after
    that, the autoencoder trains on the archived elites' paths; the elites
    are then re-encoded, the bounds refreshed from the new latents, and the
    archive rebuilt in a fresh grid (collisions keep the better fitness).
    Returns True when a training pass ran.
    """
    if iteration == 0:
        if bootstrap_vectors is None or len(bootstrap_vectors) == 0:
            log.warning("aurora bootstrap: no valid paths, skipping training")
            return False
        train(ae, bootstrap_vectors, cfg.bootstrap_epochs, cfg.lr, cfg.batch_size, rng)
        lo, hi = latent_bounds(ae.encode(bootstrap_vectors))
        repertoire.grid = repertoire.grid.with_bounds(lo, hi)
        return True
    if iteration % cfg.retrain_every != 0:
        return False
    elites = repertoire.elites()
    vectors = np.array([e.path_vector for e in elites if e.path_vector is not None])
    if len(vectors) == 0:
        log.warning("aurora retrain at iteration %d: no valid paths, skipping", iteration)
        return False
    train(ae, vectors, cfg.retrain_epochs, cfg.lr, cfg.batch_size, rng)
    latents = ae.encode(vectors)
    lo, hi = latent_bounds(latents)
    repertoire.grid = repertoire.grid.with_bounds(lo, hi)
    if cfg.rebin:
        rebin_archive(repertoire, elites, latents)
    return True


def rebin_archive(repertoire: "Repertoire", elites: list, latents: np.ndarray):
    """Re-insert elites carrying fresh latents into an emptied grid."""
    repertoire.cells.clear()
    i = 0
    for elite in elites:
        if elite.path_vector is None:
            continue
        elite.descriptor = tuple(float(v) for v in latents[i])
        i += 1
        repertoire.offer(elite, bin_index(elite.descriptor, repertoire.grid))
