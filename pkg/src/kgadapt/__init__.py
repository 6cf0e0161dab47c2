"""Domain knowledge pipeline: acquisition, adapter infusion, distillation."""

__version__ = "0.1.0"
