"""Symmetry toolkit for sphere-based assembly systems.

Subpackages cover exact permutation-group machinery, generating-function
tree counts, pathway censuses, assembly-configuration symmetry groups,
active constraint graphs, stratification atlases, and Cayley convexity
tests, plus a command-line front end.
"""

__version__ = "0.1.0"
