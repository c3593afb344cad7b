"""Design and analysis tools for efficiently-encodable rate-compatible LDPC codes."""

__version__ = "0.1.0"
