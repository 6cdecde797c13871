def checked_ratio(a, b):
    if abs(b) < 1e-300:
        raise FloatingPointError("denominator underflow")
    return a / b

a, b = map(float, input().split())
print(checked_ratio(a, b))
