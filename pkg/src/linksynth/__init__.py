"""2D linkage mechanism synthesis: simulator, quality-diversity evolution,
repertoire archives, and an explorer service."""

from .genome import EncodingConfig, Genome, decode, mutate, random_genome
from .kinematics import (Linkage, PathTrace, circle_intersection, path_metrics,
                         solve)
from .fitness import (TargetPointSet, default_target_points, fitness_fp,
                      fitness_fp_mo, fitness_fsl, fitness_fsl_mo)
from .evolve import (Evaluation, Repertoire, RunConfig, run, run_ea,
                     run_map_elites, run_nsga2)

__all__ = [
    "EncodingConfig", "Genome", "decode", "mutate", "random_genome",
    "Linkage", "PathTrace", "circle_intersection", "path_metrics", "solve",
    "TargetPointSet", "default_target_points", "fitness_fp", "fitness_fp_mo",
    "fitness_fsl", "fitness_fsl_mo",
    "Evaluation", "Repertoire", "RunConfig", "run", "run_ea",
    "run_map_elites", "run_nsga2",
]

__version__ = "0.1.0"
