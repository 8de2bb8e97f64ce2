from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math
from typing import Callable, Sequence

import numpy as np

from .alpha import AlphaMode, AlphaSchedule, alpha_value, update_beta
from .metrics import (
    GaussianMoments,
    MetricsRecord,
    fit_moments,
    frechet_distance,
    intra_fid,
    mode_coverage,
)
from .models import (
    AdamState,
    Direction,
    DiscriminatorSpec,
    GeneratorSpec,
    HeadMode,
    InitScheme,
    NonFiniteGradient,
    adam_step,
    init_params,
    log_fake,
    log_real,
)
from .ndcore import Activation, Layer, Matrix, MlpParams, mlp_backward, mlp_forward
from .synthdata import RingMixture, sample_latent, sample_real, seeded_rng

LOGGER = logging.getLogger(__name__)

PROBE_SIZE = 4096

# Sub-stream tags for evaluation generators; training never draws from these.
_REAL_REFERENCE_STREAM = 0
_EVAL_STREAM = 1
_PROBE_STREAM = 2


class IndivisibleBatch(ValueError):
    pass


class EmptyBatch(ValueError):
    pass


@dataclass(slots=True)
class TrainConfig:
    name: str = "toy"
    seed: int = 0
    n_discriminators: int = 8
    batch_size: int = 512
    iterations: int = 25000
    latent_dim: int = 256
    g_hidden: list[int] = field(default_factory=lambda: [128, 128])
    d_hidden: list[int] = field(default_factory=lambda: [128])
    d_head: str = HeadMode.LOGIT.value
    init_scheme: str = InitScheme.GLOROT_UNIFORM.value
    learning_rate: float = 0.0002
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    alpha_mode: str = AlphaMode.SIGM.value
    alpha_value: float = 0.0
    beta_init: float | None = None
    n_modes: int = 8
    ring_radius: float = 2.0
    mode_std: float = 0.02
    checkpoint_every: int = 1000
    save_every: int = 5000
    plot_every: int = 5000
    eval_samples: int = 8192
    intra_fid_subset: int = 4096
    hq_threshold_stds: float = 3.0
    capture_share: float = 0.01

    @property
    def micro_size(self) -> int:
        return self.batch_size // self.n_discriminators

    def generator_spec(self) -> GeneratorSpec:
        return GeneratorSpec(latent_dim=self.latent_dim, hidden=tuple(self.g_hidden), output_dim=2)

    def discriminator_spec(self) -> DiscriminatorSpec:
        return DiscriminatorSpec(input_dim=2, hidden=tuple(self.d_hidden), head=HeadMode(self.d_head))

    def mixture(self) -> RingMixture:
        return RingMixture(n_modes=self.n_modes, radius=self.ring_radius, mode_std=self.mode_std)

    def new_adam(self, params: MlpParams) -> AdamState:
        return AdamState.for_params(
            params,
            lr=self.learning_rate,
            beta1=self.adam_beta1,
            beta2=self.adam_beta2,
            eps=self.adam_eps,
        )

    def alpha_schedule(self) -> AlphaSchedule:
        mode = AlphaMode(self.alpha_mode)
        if mode is AlphaMode.STATIC:
            return AlphaSchedule.static(self.alpha_value)
        return AlphaSchedule.learned(
            mode,
            self.beta_init,
            lr=self.learning_rate,
            beta1=self.adam_beta1,
            beta2=self.adam_beta2,
            eps=self.adam_eps,
        )


@dataclass(slots=True)
class MicrobatchPartition:
    batch_size: int
    n_discriminators: int
    micro_size: int
    complements: list[np.ndarray]

    def own(self, k: int) -> slice:
        return slice(k * self.micro_size, (k + 1) * self.micro_size)

    def own_indices(self, k: int) -> np.ndarray:
        return np.arange(k * self.micro_size, (k + 1) * self.micro_size)


def partition(batch_size: int, n_discriminators: int, rng: np.random.Generator) -> MicrobatchPartition:
    """Contiguous microbatches plus a fresh size-m complement for each discriminator."""
    if n_discriminators < 1:
        raise IndivisibleBatch(f"Need at least one discriminator, got {n_discriminators}")
    if batch_size % n_discriminators != 0:
        raise IndivisibleBatch(
            f"Batch size {batch_size} is not divisible by {n_discriminators} discriminators"
        )
    m = batch_size // n_discriminators
    complements: list[np.ndarray] = []
    if n_discriminators == 1:
        complements.append(np.empty(0, dtype=np.int64))
    else:
        everything = np.arange(batch_size)
        for k in range(n_discriminators):
            others = np.concatenate([everything[: k * m], everything[(k + 1) * m :]])
            complements.append(rng.choice(others, size=m, replace=False))
    return MicrobatchPartition(
        batch_size=batch_size,
        n_discriminators=n_discriminators,
        micro_size=m,
        complements=complements,
    )


def d_loss_and_grad(
    d_params: MlpParams,
    real_micro: Matrix,
    fake_micro: Matrix,
    fake_complement: Matrix,
    alpha: float,
    head: HeadMode = HeadMode.LOGIT,
) -> tuple[float, MlpParams]:
    """Discriminator objective (to be ascended) and its gradient."""
    m = real_micro.shape[0]
    if m == 0 or fake_micro.shape[0] == 0:
        raise EmptyBatch("Discriminator microbatch is empty")

    raw, tape = mlp_forward(d_params, real_micro)
    value_real, slope_real = log_real(raw, head)
    grads, _ = mlp_backward(d_params, tape, slope_real / m)
    loss = float(np.mean(value_real))

    raw, tape = mlp_forward(d_params, fake_micro)
    value_fake, slope_fake = log_fake(raw, head)
    fake_grads, _ = mlp_backward(d_params, tape, slope_fake / fake_micro.shape[0])
    grads.add_(fake_grads)
    loss += float(np.mean(value_fake))

    n_other = fake_complement.shape[0]
    if n_other > 0:
        raw, tape = mlp_forward(d_params, fake_complement)
        value_other, slope_other = log_real(raw, head)
        other_grads, _ = mlp_backward(d_params, tape, alpha * slope_other / n_other)
        grads.add_(other_grads)
        loss += alpha * float(np.mean(value_other))
    return loss, grads


def d_loss(
    k: int,
    d_params: MlpParams,
    real_micro: Matrix,
    fake_micro: Matrix,
    fake_complement: Matrix,
    alpha: float,
    head: HeadMode = HeadMode.LOGIT,
) -> float:
    try:
        loss, _ = d_loss_and_grad(d_params, real_micro, fake_micro, fake_complement, alpha, head)
    except EmptyBatch as exc:
        raise EmptyBatch(f"Discriminator {k}: {exc}") from exc
    return loss


@dataclass(slots=True)
class GeneratorObjective:
    loss: float
    dloss_dalpha: float
    fake_grad: Matrix


def g_objective(
    all_d_params: Sequence[MlpParams],
    fake: Matrix,
    part: MicrobatchPartition,
    alpha: float,
    head: HeadMode = HeadMode.LOGIT,
) -> GeneratorObjective:
    """Generator loss over all microbatches and its gradient w.r.t. the fake minibatch."""
    if part.micro_size == 0:
        raise EmptyBatch("Generator microbatch is empty")
    fake_grad = np.zeros_like(fake)
    loss = 0.0
    dloss_dalpha = 0.0
    for k, d_params in enumerate(all_d_params):
        own = part.own(k)
        raw, tape = mlp_forward(d_params, fake[own])
        value_fake, slope_fake = log_fake(raw, head)
        _, input_grad = mlp_backward(d_params, tape, slope_fake / part.micro_size)
        fake_grad[own] += input_grad
        loss += float(np.mean(value_fake))

        idx = part.complements[k]
        if idx.size == 0:
            continue
        raw, tape = mlp_forward(d_params, fake[idx])
        value_other, slope_other = log_real(raw, head)
        _, input_grad = mlp_backward(d_params, tape, alpha * slope_other / idx.size)
        np.add.at(fake_grad, idx, input_grad)
        term = float(np.mean(value_other))
        loss += alpha * term
        dloss_dalpha += term
    return GeneratorObjective(loss=loss, dloss_dalpha=dloss_dalpha, fake_grad=fake_grad)


def g_loss(
    all_d_params: Sequence[MlpParams],
    fake_micro_per_k: Sequence[Matrix],
    fake_complement_per_k: Sequence[Matrix],
    alpha: float,
    head: HeadMode = HeadMode.LOGIT,
) -> tuple[float, float]:
    """Sum over k of mean[log(1 - D_k(own)) + alpha * log D_k(other)], plus dLoss/dalpha."""
    loss = 0.0
    dloss_dalpha = 0.0
    for d_params, own, other in zip(all_d_params, fake_micro_per_k, fake_complement_per_k):
        if own.shape[0] == 0:
            raise EmptyBatch("Generator microbatch is empty")
        value_fake, _ = log_fake(mlp_forward(d_params, own)[0], head)
        loss += float(np.mean(value_fake))
        if other.shape[0] == 0:
            continue
        value_other, _ = log_real(mlp_forward(d_params, other)[0], head)
        term = float(np.mean(value_other))
        loss += alpha * term
        dloss_dalpha += term
    return loss, dloss_dalpha


@dataclass(slots=True)
class TrainState:
    config: TrainConfig
    g_params: MlpParams
    d_params: list[MlpParams]
    g_adam: AdamState
    d_adams: list[AdamState]
    schedule: AlphaSchedule
    rng: np.random.Generator
    iteration: int = 0
    last_d_losses: list[float] = field(default_factory=list)
    last_g_loss: float = math.nan
    real_moments: GaussianMoments | None = None

    @property
    def head(self) -> HeadMode:
        return HeadMode(self.config.d_head)


def init_state(config: TrainConfig) -> TrainState:
    # init order: G, then D_1..D_K, all from the run stream
    rng = seeded_rng(config.seed)
    scheme = InitScheme(config.init_scheme)
    g_params = init_params(config.generator_spec(), rng, scheme)
    d_spec = config.discriminator_spec()
    d_params = [init_params(d_spec, rng, scheme) for _ in range(config.n_discriminators)]
    return TrainState(
        config=config,
        g_params=g_params,
        d_params=d_params,
        g_adam=config.new_adam(g_params),
        d_adams=[config.new_adam(d) for d in d_params],
        schedule=config.alpha_schedule(),
        rng=rng,
    )


def train_step(state: TrainState) -> TrainState:
    cfg = state.config
    rng = state.rng
    # draw order: latents, real data, complements
    z = sample_latent(cfg.latent_dim, cfg.batch_size, rng)
    x = sample_real(cfg.mixture(), cfg.batch_size, rng)
    part = partition(cfg.batch_size, cfg.n_discriminators, rng)

    try:
        fake, g_tape = mlp_forward(state.g_params, z)
        alpha = alpha_value(state.schedule)

        d_losses: list[float] = []
        for k, (d_params, d_adam) in enumerate(zip(state.d_params, state.d_adams)):
            own = part.own(k)
            loss_k, grads_k = d_loss_and_grad(
                d_params, x[own], fake[own], fake[part.complements[k]], alpha, state.head
            )
            adam_step(d_adam, d_params, grads_k, Direction.ASCEND)
            d_losses.append(loss_k)

        objective = g_objective(state.d_params, fake, part, alpha, state.head)
        g_grads, _ = mlp_backward(state.g_params, g_tape, objective.fake_grad)
        adam_step(state.g_adam, state.g_params, g_grads, Direction.DESCEND)

        if state.schedule.mode.learned:
            update_beta(state.schedule, objective.dloss_dalpha)
    except NonFiniteGradient as exc:
        raise NonFiniteGradient(f"Iteration {state.iteration + 1}: {exc}") from exc

    state.iteration += 1
    state.last_d_losses = d_losses
    state.last_g_loss = objective.loss
    return state


def generate(g_params: MlpParams, latent_dim: int, n: int, rng: np.random.Generator) -> Matrix:
    out, _ = mlp_forward(g_params, sample_latent(latent_dim, n, rng))
    return out


def real_reference(config: TrainConfig) -> Matrix:
    rng = seeded_rng(config.seed, _REAL_REFERENCE_STREAM)
    return sample_real(config.mixture(), config.eval_samples, rng)


def evaluate(state: TrainState) -> MetricsRecord:
    cfg = state.config
    if state.real_moments is None:
        state.real_moments = fit_moments(real_reference(cfg))
    rng = seeded_rng(cfg.seed, _EVAL_STREAM, state.iteration)
    fake = generate(state.g_params, cfg.latent_dim, cfg.eval_samples, rng)

    if np.all(np.isfinite(fake)):
        diversity = intra_fid(fake, cfg.intra_fid_subset, rng)
        realism = frechet_distance(fit_moments(fake), state.real_moments)
    else:
        LOGGER.warning("Iteration %d: generator produced non-finite samples", state.iteration)
        diversity = math.nan
        realism = math.nan
    coverage = mode_coverage(fake, cfg.mixture(), cfg.hq_threshold_stds, cfg.capture_share)
    return MetricsRecord(
        iteration=state.iteration,
        alpha=alpha_value(state.schedule),
        beta=state.schedule.beta,
        intra_fid=diversity,
        fid_to_real=realism,
        modes_captured=coverage.modes_captured,
        hq_fraction=coverage.hq_fraction,
        g_loss=state.last_g_loss,
        d_losses=list(state.last_d_losses),
        per_mode_share=[float(v) for v in coverage.per_mode_share],
    )


def train(
    state: TrainState,
    until: int | None = None,
    on_checkpoint: Callable[[TrainState, MetricsRecord], None] | None = None,
    on_iteration: Callable[[TrainState], None] | None = None,
) -> TrainState:
    target = state.config.iterations if until is None else until
    every = max(1, state.config.checkpoint_every)
    while state.iteration < target:
        train_step(state)
        if on_iteration is not None:
            on_iteration(state)
        if state.iteration % every == 0:
            record = evaluate(state)
            LOGGER.info(
                "iter=%d alpha=%.4f modes=%d hq=%.3f intra_fid=%.5f fid=%.5f",
                record.iteration,
                record.alpha,
                record.modes_captured,
                record.hq_fraction,
                record.intra_fid,
                record.fid_to_real,
            )
            if on_checkpoint is not None:
                on_checkpoint(state, record)
    return state


@dataclass(slots=True)
class OutputSpread:
    mean_pairwise_distance: float
    per_dim_std: np.ndarray

    @property
    def max_std(self) -> float:
        return float(np.max(self.per_dim_std))


def output_spread(samples: Matrix, chunk: int = 512) -> OutputSpread:
    n = samples.shape[0]
    total = 0.0
    for start in range(0, n, chunk):
        block = samples[start : start + chunk]
        deltas = block[:, None, :] - samples[None, :, :]
        total += float(np.sqrt(np.sum(deltas * deltas, axis=2)).sum())
    pairs = n * (n - 1)
    return OutputSpread(
        mean_pairwise_distance=total / pairs if pairs else 0.0,
        per_dim_std=samples.std(axis=0),
    )


@dataclass(slots=True)
class FrozenTrainingResult:
    g_params: MlpParams
    spread: OutputSpread
    final_loss: float


def peaked_discriminator(
    center: Sequence[float],
    rng: np.random.Generator,
    *,
    n_directions: int = 16,
    sharpness: float = 4.0,
    height: float = 0.0,
    slope: float = 2.0,
) -> MlpParams:
    """Randomly oriented discriminator with one smooth interior maximum at ``center``.

    raw(x) = c - (lam/n) * sum_i softplus(s * u_i . (x - center)); far from the
    centre the score falls off linearly at roughly ``slope`` per unit distance and
    the peak raw score equals ``height``.
    """
    offset = rng.uniform(0.0, 2.0 * math.pi)
    jitter = rng.uniform(-0.5, 0.5, size=n_directions) * (math.pi / n_directions)
    angles = offset + 2.0 * math.pi * np.arange(n_directions) / n_directions + jitter
    directions = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    lam = slope * math.pi / sharpness
    centre = np.asarray(center, dtype=np.float64).reshape(2)
    hidden = Layer(
        weight=sharpness * directions.T,
        bias=(-sharpness * directions @ centre).reshape(1, -1),
        activation=Activation.SOFTPLUS,
    )
    head = Layer(
        weight=np.full((n_directions, 1), -lam / n_directions),
        bias=np.array([[height + lam * math.log(2.0)]]),
        activation=Activation.LINEAR,
    )
    return MlpParams(layers=[hidden, head])


def frozen_d_g_training(
    fixed_d_params: Sequence[MlpParams],
    alpha: float,
    steps: int,
    seed: int,
    *,
    g_spec: GeneratorSpec | None = None,
    g_params: MlpParams | None = None,
    batch_size: int = 512,
    head: HeadMode = HeadMode.LOGIT,
    learning_rate: float = 0.0002,
    adam_beta1: float = 0.5,
    probe_size: int = PROBE_SIZE,
    init_scheme: InitScheme = InitScheme.HE_NORMAL,
) -> FrozenTrainingResult:
    """Train G alone against discriminators that never move; alpha stays fixed."""
    rng = seeded_rng(seed)
    spec = g_spec or GeneratorSpec()
    params = g_params.copy() if g_params is not None else init_params(spec, rng, init_scheme)
    latent_dim = params.input_dim
    adam = AdamState.for_params(params, lr=learning_rate, beta1=adam_beta1)
    n_disc = len(fixed_d_params)

    loss = math.nan
    for step in range(steps):
        z = sample_latent(latent_dim, batch_size, rng)
        part = partition(batch_size, n_disc, rng)
        fake, tape = mlp_forward(params, z)
        objective = g_objective(fixed_d_params, fake, part, alpha, head)
        grads, _ = mlp_backward(params, tape, objective.fake_grad)
        try:
            adam_step(adam, params, grads, Direction.DESCEND)
        except NonFiniteGradient as exc:
            raise NonFiniteGradient(f"Frozen step {step + 1}: {exc}") from exc
        loss = objective.loss

    probe_rng = seeded_rng(seed, _PROBE_STREAM)
    probe = generate(params, latent_dim, probe_size, probe_rng)
    spread = output_spread(probe)
    LOGGER.info(
        "frozen training alpha=%.3f steps=%d std=%s pairwise=%.4f",
        alpha,
        steps,
        np.array2string(spread.per_dim_std, precision=4),
        spread.mean_pairwise_distance,
    )
    return FrozenTrainingResult(g_params=params, spread=spread, final_loss=loss)
