"""fsnav: long-context question answering as file-system navigation.

Corpora are materialized as directories or files that coding agents explore with
their own tools; the package also runs the comparison baselines (full context,
RAG, ReAct), scores answers and analyses agent trajectories.
"""

__version__ = "0.1.0"
