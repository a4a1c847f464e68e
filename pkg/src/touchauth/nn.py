"""Minimal fully connected networks with hand-written backpropagation."""
import numpy as np

LEAK = 0.2


def _act(name, z):
    if name == "tanh":
        return np.tanh(z)
    if name == "leaky_relu":
        return np.where(z > 0, z, LEAK * z)
    raise ValueError(name)


def _dact(name, z, a):
    if name == "tanh":
        return 1.0 - a * a
    return np.where(z > 0, 1.0, LEAK)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def log_sigmoid(z):
    return -np.logaddexp(0.0, -z)


class Net:
    """Dense layers ``sizes[0] -> ... -> sizes[-1]`` with a linear output.

    Parameters live in one flat list ``[W0, b0, W1, b1, ...]`` so optimizers
    and gradient checks can treat them uniformly.
    """

    def __init__(self, sizes, hidden="tanh", rng=None, params=None):
        self.sizes = tuple(int(s) for s in sizes)
        self.hidden = hidden
        if params is not None:
            self.params = [np.array(p, dtype=float) for p in params]
            return
        rng = rng or np.random.default_rng(0)
        self.params = []
        for fan_in, fan_out in zip(self.sizes, self.sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.params.append(np.zeros(fan_out))

    @property
    def weights(self):
        return self.params[0::2]

    def forward(self, X, params=None):
        params = self.params if params is None else params
        a = X
        cache = [(None, X)]
        n_layers = len(params) // 2
        for k in range(n_layers):
            z = a @ params[2 * k] + params[2 * k + 1]
            a = z if k == n_layers - 1 else _act(self.hidden, z)
            cache.append((z, a))
        return a, cache

    def backward(self, cache, d_out, params=None):
        """Gradients of a scalar loss given ``d_out = dL/d(output)``.

        Returns ``(grads, d_input)`` with ``grads`` aligned to ``params``.
        """
        params = self.params if params is None else params
        n_layers = len(params) // 2
        grads = [None] * len(params)
        delta = d_out
        for k in range(n_layers - 1, -1, -1):
            a_prev = cache[k][1]
            grads[2 * k] = a_prev.T @ delta
            grads[2 * k + 1] = delta.sum(axis=0)
            delta = delta @ params[2 * k].T
            if k > 0:
                z, a = cache[k]
                delta = delta * _dact(self.hidden, z, a)
        return grads, delta

    def to_dict(self):
        return {"sizes": list(self.sizes), "hidden": self.hidden,
                "params": [p.tolist() for p in self.params]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["sizes"], d["hidden"], params=d["params"])


class Momentum:
    def __init__(self, params, lr, momentum=0.9):
        self.lr, self.mu = lr, momentum
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        for p, g, v in zip(params, grads, self.v):
            v *= self.mu
            v -= self.lr * g
            p += v


class Adam:
    def __init__(self, params, lr, beta1=0.5, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
