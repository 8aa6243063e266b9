import sys

# Corpus proofs nest deeply; NbE recursion tracks term depth.
if sys.getrecursionlimit() < 40000:
    sys.setrecursionlimit(40000)
