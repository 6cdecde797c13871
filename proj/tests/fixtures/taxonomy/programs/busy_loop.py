n = int(input())
i = 0
while i != n:
    i += 2
print(i)
