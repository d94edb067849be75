"""Schema-agnostic entity resolution between two knowledge bases."""
from .blocking import BlockCollection, ConfigError, block_stats, build_blocks
from .evaluation import EvalReport, rule_ablation, score_matches
from .graph import BlockingGraph, build_graph
from .kb import EntityDescription, GroundTruth, KnowledgeBase, load_ground_truth, load_kb, value_sim
from .matching import Match, MatcherConfig, MatchSet, PipelineResult, run_pipeline

__all__ = [
    "BlockCollection", "BlockingGraph", "ConfigError", "EntityDescription", "EvalReport",
    "GroundTruth", "KnowledgeBase", "Match", "MatchSet", "MatcherConfig", "PipelineResult",
    "block_stats", "build_blocks", "build_graph", "load_ground_truth", "load_kb",
    "rule_ablation", "run_pipeline", "score_matches", "value_sim",
]
