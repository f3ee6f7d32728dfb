"""
Test suite for the light-field deblurring toolkit.

- Unit tests: individual containers, services and network modules
- Integration tests: CLI pipelines and the training smoke test
"""
