"""Adam over a flat list of (name, weight, grad) references."""

import numpy as np


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(w) for _, w, _ in params]
        self.v = [np.zeros_like(w) for _, w, _ in params]

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for (_, w, g), m, v in zip(self.params, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            w -= (self.lr / c1) * m / (np.sqrt(v / c2) + self.eps)

    def state_arrays(self):
        out = {"adam_t": np.array(self.t, dtype=np.int64)}
        for (name, _, _), m, v in zip(self.params, self.m, self.v):
            out[f"adam_m.{name}"] = m
            out[f"adam_v.{name}"] = v
        return out

    def load_state_arrays(self, arrays):
        self.t = int(arrays["adam_t"])
        for i, (name, _, _) in enumerate(self.params):
            self.m[i][...] = arrays[f"adam_m.{name}"]
            self.v[i][...] = arrays[f"adam_v.{name}"]
