import numpy as np

from src.custom_exception import DimensionError


class ParamSet:
    """
    Named float64 parameters, each with a same-shape gradient buffer, plus
    non-trainable buffers (running statistics) that travel with them.
    """

    def __init__(self):
        self.params = {}
        self.grads = {}
        self.buffers = {}

    def add(self, name, value):
        if name in self.params or name in self.buffers:
            raise DimensionError(f"Parameter '{name}' already exists")
        value = np.array(value, dtype=np.float64)
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)
        return value

    def add_buffer(self, name, value):
        if name in self.params or name in self.buffers:
            raise DimensionError(f"Buffer '{name}' already exists")
        self.buffers[name] = np.array(value, dtype=np.float64)
        return self.buffers[name]

    def __getitem__(self, name):
        if name in self.params:
            return self.params[name]
        return self.buffers[name]

    def __contains__(self, name):
        return name in self.params or name in self.buffers

    def names(self):
        return list(self.params.keys())

    def set_buffer(self, name, value):
        self.buffers[name][...] = value

    def accumulate(self, name, grad):
        if grad.shape != self.params[name].shape:
            raise DimensionError(f"Gradient for '{name}' has shape {grad.shape}, "
                                 f"expected {self.params[name].shape}")
        self.grads[name] += grad

    def set_grads(self, grads):
        for name in self.params:
            self.grads[name][...] = 0.0
        for name, grad in grads.items():
            self.accumulate(name, grad)

    def zero_grad(self):
        for grad in self.grads.values():
            grad[...] = 0.0

    def tensors(self):
        """Parameters then buffers, in insertion order."""
        return list(self.params.items()) + list(self.buffers.items())

    def copy(self):
        other = ParamSet()
        for name, value in self.params.items():
            other.add(name, value.copy())
        for name, value in self.buffers.items():
            other.add_buffer(name, value.copy())
        return other

    def __repr__(self):
        shapes = ', '.join(f"{name}{tuple(value.shape)}" for name, value in self.tensors())
        return f"ParamSet({shapes})"
