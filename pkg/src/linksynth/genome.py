"""Genotype for linkage mechanisms: a flat vector of reals in [0, 1].

The vector holds one 7-gene header section (static node positions and
crank length) followed by one 7-gene section per joint node. Mutation adds
Gaussian noise with a self-adaptive scale carried on the genome itself;
out-of-range values are reflected back into [0, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kinematics import ExtensionJoint, Linkage, TwoBeamJoint

GENES_PER_SECTION = 7
INITIAL_SIGMA = 0.1
MUTATION_PROBABILITY = 0.2
SIGMA_NOISE_SCALE = 0.1
EXTENSION_TYPE_THRESHOLD = 0.25

# per-section gene slots (joint sections)
G_TYPE = 0
G_NODE = 1
G_BEAM = 2
G_DIRECTION = 3
G_ANGLE = 4
G_LENGTH = 5
G_LENGTH_B = 6

_N_FIXED_ANCHORS = 4  # motor + three static nodes


@dataclass(frozen=True)
class EncodingConfig:
    """Gene-to-millimeter mapping ranges for decoding."""

    n_joints: int = 8
    static_pos_range: float = 100.0
    crank_len_range: tuple = (10.0, 60.0)
    beam_len_range: tuple = (16.0, 152.0)

    def __post_init__(self):
        if self.n_joints < 1:
            raise ValueError("n_joints must be >= 1")
        for lo, hi in (self.crank_len_range, self.beam_len_range):
            if not lo < hi:
                raise ValueError("length ranges must have min < max")

    @property
    def n_genes(self) -> int:
        return GENES_PER_SECTION * (1 + self.n_joints)

    def length_gene_indices(self) -> np.ndarray:
        """Indices of genes that map to a beam or crank length."""
        idx = [GENES_PER_SECTION - 1]  # crank length in the header
        for s in range(self.n_joints):
            offset = GENES_PER_SECTION * (1 + s)
            idx.append(offset + G_LENGTH)
            idx.append(offset + G_LENGTH_B)
        return np.array(idx, dtype=np.int64)

    def to_dict(self) -> dict:
        return {
            "n_joints": self.n_joints,
            "static_pos_range": self.static_pos_range,
            "crank_len_range": list(self.crank_len_range),
            "beam_len_range": list(self.beam_len_range),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncodingConfig":
        return cls(
            n_joints=int(d["n_joints"]),
            static_pos_range=float(d["static_pos_range"]),
            crank_len_range=tuple(d["crank_len_range"]),
            beam_len_range=tuple(d["beam_len_range"]),
        )


@dataclass
class Genome:
    genes: np.ndarray  # (n_genes,) floats in [0, 1]
    sigma: float  # self-adaptive mutation scale in [0, 1]

    def copy(self) -> "Genome":
        return Genome(self.genes.copy(), self.sigma)


def random_genome(rng: np.random.Generator, cfg: EncodingConfig) -> Genome:
    return Genome(rng.random(cfg.n_genes), INITIAL_SIGMA)


def reflect_unit(values):
    """Bounce values back into [0, 1]: v < 0 mirrors to -v, v > 1 to 2 - v,
    repeated until inside. Values already inside are returned unchanged."""
    v = np.mod(np.asarray(values, dtype=float), 2.0)
    return np.where(v > 1.0, 2.0 - v, v)


def mutate(genome: Genome, rng: np.random.Generator, cfg: EncodingConfig) -> Genome:
    """Gaussian mutation with self-adaptive sigma.

    Noise N(0, sigma) is always applied to length genes and with
    probability 0.2 to every other gene. Sigma itself receives N(0, 0.1)
    noise with probability 0.2 in the same pass; bounce-back is applied to
    everything afterwards.
    """
    noise = rng.normal(0.0, genome.sigma, genome.genes.shape[0])
    hit = rng.random(genome.genes.shape[0]) < MUTATION_PROBABILITY
    hit[cfg.length_gene_indices()] = True
    genes = genome.genes + noise * hit
    sigma = genome.sigma
    if rng.random() < MUTATION_PROBABILITY:
        sigma = sigma + rng.normal(0.0, SIGMA_NOISE_SCALE)
    return Genome(reflect_unit(genes), float(reflect_unit(sigma)))


def _map_index(gene: float, size: int) -> int:
    return min(int(gene * size), size - 1)


def _map_range(gene: float, lo: float, hi: float) -> float:
    return lo + gene * (hi - lo)


def decode(genome: Genome, cfg: EncodingConfig) -> Linkage:
    """Translate a genome into a linkage.

    The header places the three static nodes in a symmetric square around
    the motor and sets the crank length. Each joint section first picks the
    joint type (below 0.25: extension, otherwise two-beam), then maps the
    remaining genes onto that type's slots. Index genes map by
    floor(gene * size) so every gene value decodes to a valid reference.
    """
    genes = genome.genes
    if genes.shape[0] != cfg.n_genes:
        raise ValueError(f"genome has {genes.shape[0]} genes, config expects {cfg.n_genes}")
    header = genes[:GENES_PER_SECTION]
    r = cfg.static_pos_range
    static_nodes = (header[:6].reshape(3, 2) * 2.0 - 1.0) * r
    crank_length = _map_range(header[6], *cfg.crank_len_range)

    joints = []
    n_beams = 1  # the crank
    n_nodes = _N_FIXED_ANCHORS + 1  # fixed anchors + crank tip
    lo, hi = cfg.beam_len_range
    for s in range(cfg.n_joints):
        sec = genes[GENES_PER_SECTION * (1 + s):GENES_PER_SECTION * (2 + s)]
        if sec[G_TYPE] < EXTENSION_TYPE_THRESHOLD:
            joints.append(ExtensionJoint(
                parent_beam=_map_index(sec[G_BEAM], n_beams),
                end=0 if sec[G_DIRECTION] < 0.5 else 1,
                angle_offset=sec[G_ANGLE] * 2.0 * math.pi,
                length=_map_range(sec[G_LENGTH], lo, hi),
            ))
            n_beams += 1
        else:
            a = _map_index(sec[G_NODE], n_nodes)
            b = _map_index(sec[G_BEAM], n_nodes)
            if a == b:
                b = (b + 1) % n_nodes
            joints.append(TwoBeamJoint(
                parent_a=a,
                parent_b=b,
                branch=0 if sec[G_DIRECTION] < 0.5 else 1,
                length_a=_map_range(sec[G_LENGTH], lo, hi),
                length_b=_map_range(sec[G_LENGTH_B], lo, hi),
            ))
            n_beams += 2
        n_nodes += 1
    return Linkage(crank_length, static_nodes, joints)
