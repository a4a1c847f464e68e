"""Multilayer perceptron classifier: tanh hidden layers, logistic output,
cross-entropy loss, mini-batch gradient descent with momentum."""
import numpy as np

from ..nn import Momentum, Net, sigmoid


def loss_and_grad(net, params, X, y, l2=1e-4):
    """Mean binary cross-entropy plus ``0.5 * l2 * ||W||^2`` and its gradient."""
    z, cache = net.forward(X, params)
    z = z[:, 0]
    n = len(X)
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    loss += 0.5 * l2 * sum(float(np.sum(W * W)) for W in params[0::2])
    d_out = ((sigmoid(z) - y) / n)[:, None]
    grads, _ = net.backward(cache, d_out, params)
    for k in range(0, len(params), 2):
        grads[k] = grads[k] + l2 * params[k]
    return loss, grads


class MLP:
    def __init__(self, hidden=(32,), lr=1e-2, epochs=150, batch_size=32, momentum=0.9,
                 l2=1e-4, seed=0):
        self.hidden = tuple(hidden)
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.momentum = momentum
        self.l2 = l2
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        g = np.random.default_rng(self.seed)
        self.net_ = Net((X.shape[1], *self.hidden, 1), "tanh", g)
        opt = Momentum(self.net_.params, self.lr, self.momentum)
        self.loss_curve_ = []
        for _ in range(self.epochs):
            perm = g.permutation(len(X))
            total = 0.0
            for s in range(0, len(X), self.batch_size):
                b = perm[s:s + self.batch_size]
                loss, grads = loss_and_grad(self.net_, self.net_.params, X[b], y[b], self.l2)
                opt.step(self.net_.params, grads)
                total += loss * len(b)
            self.loss_curve_.append(total / len(X))
        return self

    def score(self, X):
        z, _ = self.net_.forward(np.asarray(X, dtype=float))
        return sigmoid(z[:, 0])

    def to_dict(self):
        return {"hidden": list(self.hidden), "lr": self.lr, "epochs": self.epochs,
                "batch_size": self.batch_size, "momentum": self.momentum, "l2": self.l2,
                "seed": self.seed, "net": self.net_.to_dict()}

    @classmethod
    def from_dict(cls, d):
        m = cls(d["hidden"], d["lr"], d["epochs"], d["batch_size"], d["momentum"], d["l2"], d["seed"])
        m.net_ = Net.from_dict(d["net"])
        return m
