"""Self-directed learning of relational action models with lifted linked
clauses."""

__version__ = "0.1.0"
