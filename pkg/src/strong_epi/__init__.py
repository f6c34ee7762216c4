"""Numerical tools around the strengthened entropy power inequality."""
