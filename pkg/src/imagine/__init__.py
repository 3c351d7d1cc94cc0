"""Multi-agent reasoning data generation, travel-plan evaluation and rule-based rewards."""

__version__ = "0.1.0"
