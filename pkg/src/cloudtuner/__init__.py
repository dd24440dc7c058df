"""Find the best cloud configuration for a workload.

Core pieces: a grid-complete performance database (the replay oracle), a
deterministic synthetic workload generator, a pairwise classifier that
transfers knowledge across workloads, four search strategies, and a
leave-one-workload-out evaluation harness. A FastAPI service exposes the
whole pipeline; the CLI is a thin client of that service.
"""

__version__ = "0.1.0"
