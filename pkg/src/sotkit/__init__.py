"""Skeleton-first parallel answer generation: orchestration, routing,
latency estimation, and paired-judge evaluation."""

__version__ = "0.1.0"
