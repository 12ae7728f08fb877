"""
premcheck: obstruction engines for 2-prems

Exact computational group theory behind the question whether a generic map between
n-manifolds lifts to an embedding after adding two coordinates:
- Free groups, Magnus expansions and Stallings foldings
- Braids, the Artin representation and homotopy braids
- Nilpotent automorphism towers
- Combinatorial fold map models and their monodromy
- The double point obstruction

Version: 1.0.0
"""

__version__ = "1.0.0"
__author__ = "premcheck developers"
