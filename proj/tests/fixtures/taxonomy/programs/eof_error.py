n = int(input())
rows = [input() for _ in range(n)]
print(len(rows))
