"""privtext: word-level metric-LDP text sanitization and evaluation toolkit.

Subpackages cover corpus handling, embedding stores, budget accounting, the
four word-level mechanisms, document/corpus sanitization, LLM-based
reconstruction, privacy/utility metrics, and the built-in attribution attacks.
"""

__version__ = "0.1.0"
