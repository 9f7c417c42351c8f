"""
Fitting model parameters.

A fit starts from a random initialization and runs AdamW with a
reduce-on-plateau learning rate schedule:

1. For the first ``warm_steps`` steps only the biases are trained. The
   scheduler keeps track of the loss but does not lower the learning rate.
2. Afterwards every parameter of the variant is trained jointly, with the
   plateau counter starting from zero.
3. Training ends when the learning rate falls below ``lr_min`` or after
   ``max_steps`` steps.

``multi_restart_fit`` repeats this for several seeds and keeps the fit with
the lowest training loss.

----
"""
import numpy as np
import pandas as pd

import pymlt.core.logging as logging
from pymlt.core.errors import FitError, NumericError
from pymlt.core.helpers import named_stream, parallel_map
from pymlt.core.model import MltParams, Objective, check_variant, draw_sample
from pymlt.core.simplex import depth_for, softplus_inverse


logger = logging.getLogger(__name__)

BIAS_GROUPS = ("beta", "gamma")

INIT_BIAS_SCALE = 0.1
INIT_STRENGTH = 1.0


################################################################################
#
#           O P T I M I Z E R
#
################################################################################
class AdamWState(object):
    """
    Parameters and moment estimates of AdamW.

    Moments and step counts are kept per parameter group, so groups that
    join the optimization later start with fresh bias corrections.

    Attributes
    ----------
    params : dict of numpy.ndarray
    m, v : dict of numpy.ndarray
        First and second moment estimates.
    steps : dict of int
    betas : tuple of float
    eps : float
    """

    def __init__(self, params, betas=(0.9, 0.999), eps=1e-8):
        self.params = {name: np.array(values, dtype=float) for name, values in params.items()}
        self.m = {name: np.zeros_like(values) for name, values in self.params.items()}
        self.v = {name: np.zeros_like(values) for name, values in self.params.items()}
        self.steps = {name: 0 for name in self.params}
        self.betas = tuple(betas)
        self.eps = eps


def adamw_step(state, grads, lr, weight_decay):
    """
    One AdamW update of every group in ``grads``.

    The weight decay shrinks the parameters by ``1 - lr * weight_decay``
    before the adaptive step and never enters the moment estimates.

    Parameters
    ----------
    state : AdamWState
    grads : dict of numpy.ndarray
        Gradients, shaped like ``state.params``; groups not in here keep
        their value.
    lr : float
    weight_decay : float

    Returns
    -------
    AdamWState
        ``state``, updated in place.

    Raises
    ------
    NumericError
        If a gradient has non-finite entries. ``state`` is left unchanged.
    """
    for name, grad in grads.items():
        grad = np.asarray(grad, dtype=float)
        if grad.shape != state.params[name].shape:
            raise NumericError("Gradient of %s has shape %s, expected %s" %
                               (name, grad.shape, state.params[name].shape))
        if not np.all(np.isfinite(grad)):
            raise NumericError("Non-finite gradient",
                               {"group": name,
                                "n_nonfinite": int(np.sum(~np.isfinite(grad))),
                                "step": state.steps[name] + 1})
    beta1, beta2 = state.betas
    for name, grad in grads.items():
        grad = np.asarray(grad, dtype=float)
        state.steps[name] += 1
        t = state.steps[name]
        state.params[name] = state.params[name] * (1.0 - lr * weight_decay)
        state.m[name] = beta1 * state.m[name] + (1.0 - beta1) * grad
        state.v[name] = beta2 * state.v[name] + (1.0 - beta2) * grad ** 2
        m_hat = state.m[name] / (1.0 - beta1 ** t)
        v_hat = state.v[name] / (1.0 - beta2 ** t)
        state.params[name] = state.params[name] - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return state


class PlateauScheduler(object):
    """
    Lowers the learning rate when the loss stops improving.

    A loss counts as an improvement if it is below ``best * (1 - threshold)``.
    After more than ``patience`` steps without improvement the learning rate
    is multiplied by ``factor`` and the count starts over.
    """

    def __init__(self, lr, factor=0.5, patience=10, threshold=1e-6, lr_min=1e-7):
        self.lr = lr
        self.factor = factor
        self.patience = patience
        self.threshold = threshold
        self.lr_min = lr_min
        self.best = np.inf
        self.bad_steps = 0
        self.n_reductions = 0

    def step(self, loss, allow_reduce=True):
        if loss < self.best * (1.0 - self.threshold):
            self.best = loss
            self.bad_steps = 0
        else:
            self.bad_steps += 1
        if allow_reduce and self.bad_steps > self.patience:
            self.lr *= self.factor
            self.bad_steps = 0
            self.n_reductions += 1
            logger.debug("Plateau at loss %.8g, learning rate now %.3g", self.best, self.lr)
        return self.lr

    def reset_counter(self):
        self.bad_steps = 0

    @property
    def done(self):
        return self.lr < self.lr_min


################################################################################
#
#           F I T T I N G
#
################################################################################
class FitResult(object):
    """
    Outcome of one fit.

    Attributes
    ----------
    params : MltParams
    final_loss : float
        Full-data loss at ``params`` under the fit's mask.
    steps : int
    restart_index : int
    loss_trace : numpy.ndarray
        Training loss of every step, before its update.
    lr_trace : numpy.ndarray
        Learning rate used in every step.
    seed : int
    """

    def __init__(self, params, final_loss, steps, restart_index, loss_trace, lr_trace, seed):
        self.params = params
        self.final_loss = final_loss
        self.steps = steps
        self.restart_index = restart_index
        self.loss_trace = np.asarray(loss_trace, dtype=float)
        self.lr_trace = np.asarray(lr_trace, dtype=float)
        self.seed = seed

    def trace_frame(self, warm_steps=0):
        """ The loss trace as a DataFrame with columns step, phase, lr, loss """
        step = np.arange(1, self.steps + 1)
        has_warm_phase = self.params.variant != "bias"
        phase = np.where(has_warm_phase & (step <= warm_steps), "bias", "joint")
        return pd.DataFrame({"step": step, "phase": phase, "lr": self.lr_trace, "loss": self.loss_trace},
                            columns=["step", "phase", "lr", "loss"])

    def __repr__(self):
        return "FitResult(variant=%r, final_loss=%.6g, steps=%s, restart_index=%s)" % \
                (self.params.variant, self.final_loss, self.steps, self.restart_index)


def write_loss_trace(result, path, warm_steps=0):
    result.trace_frame(warm_steps).to_csv(path, index=False, float_format="%.10g")
    return path


def initialize_params(n_nodes, n_layers, depth, variant, rng, node_labels=None):
    """
    Random starting point of a fit.

    Biases are drawn from Normal(0, 0.1**2), every logit from Normal(0, 1),
    and the global strength starts at ``s = 1``.
    """
    dimension = 2 ** depth
    return MltParams(beta=rng.normal(0.0, INIT_BIAS_SCALE, size=(n_nodes, n_layers)),
                     gamma=rng.normal(0.0, INIT_BIAS_SCALE, size=(n_nodes, n_layers)),
                     z_logits=rng.normal(size=(n_nodes, n_layers)),
                     w_logits=rng.normal(size=(n_nodes, n_layers)),
                     u_logits=rng.normal(size=(n_layers, n_nodes, dimension)),
                     v_logits=rng.normal(size=(n_layers, n_nodes, dimension)),
                     level_logits=rng.normal(size=(n_layers, depth + 1)),
                     strength_raw=softplus_inverse(INIT_STRENGTH),
                     variant=variant,
                     node_labels=node_labels)


def default_initializer(graph, variant, seed):
    return initialize_params(graph.n_nodes, graph.n_layers, depth_for(graph.n_nodes), variant,
                             named_stream(seed, "init"), graph.node_labels)


def fit(graph, variant, config, mask=None, initializer=None, restart_index=0):
    """
    Fits one model variant from one random initialization.

    Parameters
    ----------
    graph : MultiplexGraph
        Preprocessed network, usually restricted to its strongly connected
        component.
    variant : str
        ``bias``, ``tradeoff`` or ``full``.
    config : TrainConfig
        ``config.seed`` seeds the initialization and the node samples.
    mask : MaskPlan, optional
        Dyads left out of training.
    initializer : callable, optional
        ``initializer(graph, variant, seed) -> MltParams``; a random draw by
        default.
    restart_index : int, optional
        Recorded in the result.

    Returns
    -------
    FitResult

    Raises
    ------
    NumericError
        If the loss or a gradient stops being finite.
    """
    check_variant(variant)
    initializer = initializer or default_initializer
    params = initializer(graph, variant, config.seed)
    objective = Objective(graph, mask)
    state = AdamWState(params.arrays(), config.betas, config.eps)
    scheduler = PlateauScheduler(config.lr_init, config.plateau_factor, config.plateau_patience,
                                 config.plateau_threshold, config.lr_min)
    sample_rng = named_stream(config.seed, "subsample")
    sample_size = graph.n_nodes if config.sample_size == "full" else min(config.sample_size, graph.n_nodes)
    has_warm_phase = variant != "bias" and config.warm_steps > 0

    loss_trace, lr_trace = [], []
    step = 0
    while step < config.max_steps and not scheduler.done:
        warming = has_warm_phase and step < config.warm_steps
        if has_warm_phase and step == config.warm_steps:
            logger.debug("Joint training starts at step %s, loss %.8g", step, loss_trace[-1])
            scheduler.reset_counter()
        nodes = draw_sample(graph.n_nodes, sample_size, sample_rng)
        wrt = BIAS_GROUPS if warming else params.active_groups
        loss, grads = objective.loss_and_grad(params, nodes, wrt)
        if not np.isfinite(loss):
            raise NumericError("Training loss is not finite",
                               {"step": step + 1, "lr": scheduler.lr, "restart": restart_index})
        loss_trace.append(loss)
        lr_trace.append(scheduler.lr)
        adamw_step(state, grads, scheduler.lr, config.weight_decay)
        params = params.with_arrays({name: state.params[name] for name in grads})
        scheduler.step(loss, allow_reduce=not warming)
        step += 1

    final_loss = objective.loss(params)
    if not np.isfinite(final_loss):
        raise NumericError("Final loss is not finite", {"steps": step, "restart": restart_index})
    logger.info("Fit %s restart %s: %s steps, final loss %.8g, learning rate %.3g",
                variant, restart_index, step, final_loss, scheduler.lr)
    return FitResult(params, final_loss, step, restart_index, loss_trace, lr_trace, config.seed)


def multi_restart_fit(graph, variant, config, mask=None, initializer=None, threads=1):
    """
    Runs ``fit`` with the seeds ``config.seed .. config.seed + restarts - 1``
    and returns the result with the lowest final loss.

    Diverged restarts are logged and skipped. Among equal losses the lowest
    restart index wins.

    Raises
    ------
    FitError
        If every restart diverged.
    """
    def run(restart_index):
        restart_config = config.replace(seed=config.seed + restart_index)
        try:
            return fit(graph, variant, restart_config, mask, initializer, restart_index)
        except NumericError as error:
            logger.warning("Restart %s of the %s fit diverged: %s", restart_index, variant, error)
            return None

    results = parallel_map(run, range(config.restarts), threads)
    finished = [result for result in results if result is not None]
    if not finished:
        raise FitError("Every restart diverged", {"variant": variant, "restarts": config.restarts})
    best = min(finished, key=lambda result: (result.final_loss, result.restart_index))
    logger.info("Best %s fit: restart %s with loss %.8g", variant, best.restart_index, best.final_loss)
    return best
