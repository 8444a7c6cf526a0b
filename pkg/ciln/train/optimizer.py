### Optimizer used to update the model parameters

import numpy as np
import pickle
import os
import logging

from ..util.utils import Error

class AdamState(object):
    """State of the Adam optimizer.
        Attributes:
          step_count: number of updates applied so far
          m: first-moment arrays, one per parameter (None before the first step)
          v: second-moment arrays, one per parameter (None before the first step)
          lr, beta1, beta2, epsilon: hyperparameters
    """

    def __init__(self, lr=1e-4, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.step_count = 0
        self.m = None
        self.v = None
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon

    def __str__(self):
        return "AdamState(step_count={}, lr={}, beta1={}, beta2={}, epsilon={})".format(
            self.step_count, self.lr, self.beta1, self.beta2, self.epsilon)

def running_average_np(previous, update, rho):
    """Updates the running average of a numpy array in place and returns it"""
    previous *= rho
    previous += (1 - rho) * update
    return previous

def running_average_square_np(previous, update, rho):
    """Updates the running average of the square of a numpy array in place and returns it"""
    previous *= rho
    previous += (1 - rho) * (update * update)
    return previous

def adam_step(params, state):
    """Applies one bias-corrected Adam update to the parameter tensors.
        params: list of Tensors with populated .grad
        state: AdamState, updated in place
    """
    for i, p in enumerate(params):
        if p.grad is None:
            label = p.name or "#{}".format(i)
            raise Error("adam_step: parameter {} has no gradient".format(label))
    if state.m is None:
        state.m = [ np.zeros_like(p.data) for p in params ]
        state.v = [ np.zeros_like(p.data) for p in params ]
    if len(state.m) != len(params) or any(m.shape != p.shape for m, p in zip(state.m, params)):
        raise Error("adam_step: optimizer state does not match the parameter list")

    state.step_count += 1
    t = state.step_count
    bias_correction_1 = 1.0 - state.beta1 ** t
    bias_correction_2 = 1.0 - state.beta2 ** t
    for p, m, v in zip(params, state.m, state.v):
        running_average_np(m, p.grad, state.beta1)
        running_average_square_np(v, p.grad, state.beta2)
        m_hat = m / bias_correction_1
        v_hat = v / bias_correction_2
        p.data -= (state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)).astype(p.dtype, copy=False)

class Adam(object):
    """Adam optimizer bound to a list of parameter tensors.
        Attributes:
          params: the Tensors being optimized
          state: AdamState
          init_learning_rate: learning rate before any schedule is applied
    """

    def __init__(self, params, learning_rate=1e-4, beta_1=0.9, beta_2=0.999, epsilon=1e-8):
        self.params = list(params)
        self.init_learning_rate = learning_rate
        self.state = AdamState(learning_rate, beta_1, beta_2, epsilon)

    def reset(self):
        self.state = AdamState(self.init_learning_rate, self.state.beta1, self.state.beta2, self.state.epsilon)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def set_learning_rate(self, learning_rate):
        if learning_rate != self.state.lr:
            logging.info("learning rate set to {:.3g}".format(learning_rate))
        self.state.lr = learning_rate

    def step(self):
        adam_step(self.params, self.state)

    def save(self, fn=None):
        if fn is None:
            fn = 'ciln-opt-{}.algo'.format(os.getpid())
        with open(fn, 'wb') as d:
            pickle.dump(self.state, d)
        logging.info("Saved optimizer state to %s", fn)

    def load(self, fn):
        """Restores the state saved by save(); returns False if it cannot be used"""
        if not fn.endswith('.algo'):
            fn = fn + '.algo'
        try:
            with open(fn, 'rb') as d:
                state = pickle.load(d)
        except (OSError, pickle.UnpicklingError, EOFError) as e:
            logging.warning("Failed to restore optimizer state from {}: {}".format(fn, e))
            return False
        if state.m is not None and [m.shape for m in state.m] != [p.shape for p in self.params]:
            logging.warning("Optimizer state in {} does not match the model, starting from scratch".format(fn))
            return False
        self.state = state
        logging.info("Restored optimizer state from {}".format(fn))
        return True
