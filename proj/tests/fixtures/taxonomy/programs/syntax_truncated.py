import sys

def solve(values):
    best = values[0]
    for v in values[1:]:
        best = max(best, v
