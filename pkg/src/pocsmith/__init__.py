"""pocsmith: agentic generation and patch-oracle validation of Foundry PoC exploit tests."""

__version__ = "0.1.0"
