"""Semantic-layer toolkit: column description generation, curation, and
text-to-SQL impact evaluation for SQLite databases."""

__version__ = "0.1.0"
