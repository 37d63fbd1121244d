"""Single-step update oracles for a scalar parameter (theta=1, g=0.5, lr=0.1),
evaluated in 50-digit arithmetic from the standard update rules."""
from mpmath import mp, mpf, sqrt, sign

mp.dps = 50
th, g, lr, eps = mpf(1), mpf("0.5"), mpf("0.1"), mpf("1e-8")
l1, l2 = mpf("0.01"), mpf("0.02")
out = {}
out["GradientDescent"] = th - lr * g
out["Momentum"] = th - lr * g
v = lr * g
out["Nesterov"] = th - (mpf("0.9") * v + lr * g)
out["Adagrad"] = th - lr * g / sqrt(g * g + eps)
rho = mpf("0.95")
eg = (1 - rho) * g * g
out["Adadelta"] = th - lr * sqrt(eps) / sqrt(eg + eps) * g
b1, b2 = mpf("0.9"), mpf("0.999")
m, vv = (1 - b1) * g, (1 - b2) * g * g
out["Adam"] = th - lr * (m / (1 - b1)) / (sqrt(vv / (1 - b2)) + eps)
out["RMSProp"] = th - lr * g / sqrt(mpf("0.1") * g * g + eps)


def ftrl(l1, l2):
    n0 = mpf("0.1")
    z = -th * (sqrt(n0) / lr + l2) - sign(th) * l1
    n1 = n0 + g * g
    z = z + g - (sqrt(n1) - sqrt(n0)) / lr * th
    if abs(z) <= l1:
        return mpf(0)
    return -(z - sign(z) * l1) / (sqrt(n1) / lr + l2)


out["Ftrl"] = ftrl(0, 0)
out["Ftrl_l1l2"] = ftrl(l1, l2)
s = th - lr * g
out["ProximalGradientDescent"] = s
out["ProximalGradientDescent_l1l2"] = sign(s) * max(abs(s) - lr * l1, 0) / (1 + lr * l2)
rate = lr / sqrt(g * g + eps)
s = th - rate * g
out["ProximalAdagrad"] = s
out["ProximalAdagrad_l1l2"] = sign(s) * max(abs(s) - rate * l1, 0) / (1 + rate * l2)
for k, val in out.items():
    print(f"{k} {mp.nstr(val, 20)}")
