"""synthsel: online solver selection for syntax-guided synthesis.

Given a stream of SyGuS-IF queries, learn (with a k-nearest-neighbor
contextual bandit) which solver to deploy -- a CEGIS enumerator or an
LLM-prompt pair -- and how much time and token budget to give each.
"""

__version__ = "0.1.0"
