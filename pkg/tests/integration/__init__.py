"""
Integration tests: the CLI subcommands chained over real files, and the
training smoke test (marked slow).
"""
