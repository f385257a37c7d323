from .sysdsl import SystemDef, parse_file, parse_system, pretty_print
from .igraph import InteractionGraph, build_interaction_graph, classify
from .spin import find_consistent_spin
from .cascade import ElementaryChange, apply_change, decompose

__version__ = "0.1a"
