"""
Unit tests: each module in isolation, checked against hand-computed values
and brute-force loop oracles.
"""
