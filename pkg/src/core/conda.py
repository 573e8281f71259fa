"""
Aumentador Conda: codificador VAE, difusão com ruído parcial (prefixo ou sufixo da
sequência latente), denoiser condicional e decodificador VAE.

O latente x_0 (B x L x d) é particionado em x_0^diff (linhas regeneradas) e
x_0^cond (linhas mantidas intactas como condição do processo reverso).
"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np

from src.core import tensor as T
from src.core.ctdg_model import SequenceEmbedding
from src.core.optim import ParameterStore, glorot_uniform
from src.core.tensor import Tensor, no_grad
from src.utils.exceptions import (
    ConfigurationError,
    FreezeContractError,
    ScheduleError,
    ShapeMismatchError,
)
from src.utils.logger import get_logger

PREFIX = "conda/"
STEP_EMBED_DIM = 32
VARIANTS = ("full", "no_vae", "no_diffusion")
ORIENTATIONS = ("diff_prefix", "diff_suffix")

logger = get_logger(__name__)

StepIndex = Union[int, np.ndarray]


@dataclass(frozen=True)
class NoiseSchedule:
    """
    Cronograma linear de ruído. Arrays indexados por n-1 (n = 1..N).

    `alpha_bars_prev[n-1]` é ᾱ_{n-1}, com ᾱ_0 = 1.
    """

    num_steps: int
    k: float
    alpha_min: float
    alpha_max: float
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    alpha_bars_prev: np.ndarray
    posterior_variance: np.ndarray

    def check_step(self, n: StepIndex) -> None:
        steps = np.asarray(n)
        if steps.size and (steps.min() < 1 or steps.max() > self.num_steps):
            raise ScheduleError(f"Passo de difusão fora de [1, {self.num_steps}]: {n}")

    def alpha_bar(self, n: StepIndex) -> np.ndarray:
        self.check_step(n)
        return self.alpha_bars[np.asarray(n) - 1]

    def posterior_coefficients(self, n: int) -> Tuple[float, float]:
        """Coeficientes (c_x_n, c_x̂_0) da média posterior no passo n."""
        self.check_step(n)
        i = n - 1
        alpha, alpha_bar, alpha_bar_prev = self.alphas[i], self.alpha_bars[i], self.alpha_bars_prev[i]
        coef_xn = np.sqrt(alpha) * (1.0 - alpha_bar_prev) / (1.0 - alpha_bar)
        coef_x0 = np.sqrt(alpha_bar_prev) * self.betas[i] / (1.0 - alpha_bar)
        return float(coef_xn), float(coef_x0)


def build_schedule(
    num_steps: int, k: float, alpha_min: float = 0.1, alpha_max: float = 0.9
) -> NoiseSchedule:
    """
    Constrói o cronograma com 1-ᾱ_n = k·[α_min + (n-1)/(N-1)·(α_max-α_min)].

    Args:
        num_steps: N (>= 2)
        k: Escala de ruído em (0, 1]
        alpha_min: Limite inferior em (0, 1)
        alpha_max: Limite superior em (α_min, 1)

    Returns:
        NoiseSchedule com β, α, ᾱ e β̃
    """
    if num_steps < 2:
        raise ScheduleError(f"N deve ser >= 2, recebido {num_steps}")
    if not 0.0 < alpha_min < alpha_max < 1.0:
        raise ScheduleError(
            f"Exige 0 < alpha_min < alpha_max < 1, recebido ({alpha_min}, {alpha_max})"
        )
    if not 0.0 < k <= 1.0 or k * alpha_max >= 1.0:
        raise ScheduleError(f"Escala de ruído k inválida: {k}")

    n = np.arange(1, num_steps + 1, dtype=np.float64)
    one_minus = k * (alpha_min + (n - 1.0) / (num_steps - 1.0) * (alpha_max - alpha_min))
    alpha_bars = 1.0 - one_minus
    alpha_bars_prev = np.concatenate([[1.0], alpha_bars[:-1]])
    alphas = alpha_bars / alpha_bars_prev
    betas = 1.0 - alphas
    posterior_variance = betas * (1.0 - alpha_bars_prev) / (1.0 - alpha_bars)

    for array in (betas, alphas, alpha_bars, alpha_bars_prev, posterior_variance):
        array.flags.writeable = False
    return NoiseSchedule(
        num_steps=num_steps,
        k=k,
        alpha_min=alpha_min,
        alpha_max=alpha_max,
        betas=betas,
        alphas=alphas,
        alpha_bars=alpha_bars,
        alpha_bars_prev=alpha_bars_prev,
        posterior_variance=posterior_variance,
    )


@dataclass
class LatentSequence:
    """Latente B x L x d com a partição (diff, cond)."""

    z: Tensor
    diff_len: int
    orientation: str = "diff_prefix"

    def __post_init__(self):
        length = self.z.shape[1]
        if not 1 <= self.diff_len < length:
            raise ConfigurationError(f"diff_len deve estar em [1, {length}), recebido {self.diff_len}")

    @property
    def length(self) -> int:
        return self.z.shape[1]

    @property
    def cond_len(self) -> int:
        return self.length - self.diff_len

    def _slices(self) -> Tuple[slice, slice]:
        if self.orientation == "diff_prefix":
            return slice(0, self.diff_len), slice(self.diff_len, self.length)
        return slice(self.cond_len, self.length), slice(0, self.cond_len)

    def diff_part(self) -> Tensor:
        return self.z[:, self._slices()[0]]

    def cond_part(self) -> Tensor:
        return self.z[:, self._slices()[1]]

    def combine(self, diff: np.ndarray, cond: np.ndarray) -> np.ndarray:
        """Remonta a sequência completa mantendo a posição original de cada parte."""
        if self.orientation == "diff_prefix":
            return np.concatenate([diff, cond], axis=1)
        return np.concatenate([cond, diff], axis=1)


@dataclass
class VaePosterior:
    """Média e log-variância de q_φ(z|s)."""

    mu: Tensor
    log_var: Tensor


def step_embedding(n: StepIndex, dim: int = STEP_EMBED_DIM) -> np.ndarray:
    """Embedding senoidal do passo de difusão (B x dim)."""
    steps = np.atleast_1d(np.asarray(n, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    angles = steps[:, None] * freqs[None, :]
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


def _broadcast_coef(values: np.ndarray, batch: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 0:
        values = np.full(batch, float(values))
    return values.reshape(-1, 1, 1)


def forward_diffuse(
    x0_diff: Union[Tensor, np.ndarray],
    n: StepIndex,
    schedule: NoiseSchedule,
    noise: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
) -> Tensor:
    """
    Amostra x_n^diff = √ᾱ_n·x_0^diff + √(1-ᾱ_n)·ε (só a parte difundida).

    Args:
        x0_diff: Parte difundida limpa (B x diff x d)
        n: Passo (escalar ou um por exemplo)
        schedule: Cronograma de ruído
        noise: ε explícito; sorteado de `rng` quando omitido
        rng: Gerador para ε

    Returns:
        Tensor x_n^diff (diferenciável em relação a x0_diff)
    """
    x0 = x0_diff if isinstance(x0_diff, Tensor) else Tensor(x0_diff)
    alpha_bar = schedule.alpha_bar(n)
    if noise is None:
        generator = rng if rng is not None else np.random.default_rng()
        noise = generator.standard_normal(x0.shape)
    batch = x0.shape[0]
    signal = Tensor(_broadcast_coef(np.sqrt(alpha_bar), batch))
    spread = _broadcast_coef(np.sqrt(1.0 - alpha_bar), batch)
    return x0 * signal + Tensor(spread * noise)


def forward_step(
    x_prev: np.ndarray, n: int, schedule: NoiseSchedule, rng: np.random.Generator
) -> np.ndarray:
    """Transição de um passo q(x_n | x_{n-1}) = N(√α_n·x_{n-1}, β_n I)."""
    schedule.check_step(n)
    i = n - 1
    return np.sqrt(schedule.alphas[i]) * x_prev + np.sqrt(schedule.betas[i]) * rng.standard_normal(
        np.shape(x_prev)
    )


def posterior_step(
    x_n: np.ndarray,
    x0_hat: np.ndarray,
    n: int,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Um passo reverso: média posterior μ_θ mais √β̃_n·ε (sem ruído em n = 1).

    Args:
        x_n: Estado atual da parte difundida
        x0_hat: Predição do denoiser para x_0^diff
        n: Passo atual (>= 1)
        schedule: Cronograma de ruído
        rng: Gerador para o ruído do passo

    Returns:
        x_{n-1}
    """
    if n < 1:
        raise ScheduleError(f"Passo reverso inválido: {n}")
    coef_xn, coef_x0 = schedule.posterior_coefficients(n)
    mean = coef_xn * np.asarray(x_n) + coef_x0 * np.asarray(x0_hat)
    if n == 1:
        return mean
    return mean + np.sqrt(schedule.posterior_variance[n - 1]) * rng.standard_normal(mean.shape)


def gaussian_kl(posterior: VaePosterior) -> Tensor:
    """KL(N(μ, σ²) ‖ N(0, I)) somado em d e promediado nas demais dimensões."""
    mu, log_var = posterior.mu, posterior.log_var
    per_element = T.square(mu) + T.exp(log_var) - log_var - 1.0
    return (per_element.sum(axis=-1) * 0.5).mean()


class CondaAugmenter:
    """
    VAE + difusão condicional com ruído parcial sobre sequências de vizinhos.

    Parâmetros em "conda/phi/..." (codificador), "conda/theta/..." (denoiser) e
    "conda/psi/..." (decodificador). Variantes de ablação criam só os grupos que usam.
    """

    def __init__(
        self,
        params: ParameterStore,
        model_dim: int,
        num_neighbors: int,
        diff_len: int,
        schedule: NoiseSchedule,
        latent_dim: Optional[int] = None,
        vae_weight: float = 1.0,
        variant: str = "full",
        orientation: str = "diff_prefix",
        target_step: Optional[int] = None,
        seed: int = 0,
    ):
        """
        Registra os parâmetros do Conda.

        Args:
            params: Armazenamento compartilhado de parâmetros
            model_dim: D
            num_neighbors: L
            diff_len: Comprimento da parte difundida (1 <= diff_len < L)
            schedule: Cronograma de ruído
            latent_dim: d (padrão max(4, D/8))
            vae_weight: λ
            variant: "full", "no_vae" ou "no_diffusion"
            orientation: "diff_prefix" ou "diff_suffix"
            target_step: Passo de ruído usado na augmentação (padrão N)
            seed: Semente de inicialização
        """
        self.logger = get_logger(__name__)
        if variant not in VARIANTS:
            raise ConfigurationError(f"Variante desconhecida: {variant}")
        if orientation not in ORIENTATIONS:
            raise ConfigurationError(f"Orientação desconhecida: {orientation}")
        if not 1 <= diff_len < num_neighbors:
            raise ConfigurationError(f"diff_len deve estar em [1, {num_neighbors}), recebido {diff_len}")
        target_step = schedule.num_steps if target_step is None else target_step
        schedule.check_step(target_step)

        self.params = params
        self.model_dim = model_dim
        self.num_neighbors = num_neighbors
        self.diff_len = diff_len
        self.schedule = schedule
        self.vae_weight = vae_weight
        self.variant = variant
        self.orientation = orientation
        self.target_step = target_step
        self.trained = False

        if variant == "no_vae":
            self.latent_dim = model_dim
        else:
            self.latent_dim = latent_dim if latent_dim is not None else max(4, model_dim // 8)
            if self.latent_dim >= model_dim:
                raise ConfigurationError(f"d ({self.latent_dim}) deve ser menor que D ({model_dim})")

        rng = np.random.default_rng(seed)
        D, d = model_dim, self.latent_dim
        if self.uses_vae:
            self._linear(rng, "phi/fc1", D, D)
            self._linear(rng, "phi/mu", D, d)
            self._linear(rng, "phi/log_var", D, d)
            self._linear(rng, "psi/fc1", d, D)
            self._linear(rng, "psi/fc2", D, D)
        if self.uses_diffusion:
            cond_len = num_neighbors - diff_len
            hidden = 4 * diff_len * d
            self._linear(rng, "theta/fc1", (diff_len + cond_len) * d + STEP_EMBED_DIM, hidden)
            self._linear(rng, "theta/fc2", hidden, hidden)
            self._linear(rng, "theta/out", hidden, diff_len * d)

        self.logger.info(
            f"Conda criado: variante={variant}, d={d}, diff_len={diff_len}, "
            f"N={schedule.num_steps}, k={schedule.k}, λ={vae_weight}, orientação={orientation}"
        )

    @property
    def uses_vae(self) -> bool:
        return self.variant != "no_vae"

    @property
    def uses_diffusion(self) -> bool:
        return self.variant != "no_diffusion"

    def _linear(self, rng: np.random.Generator, name: str, fan_in: int, fan_out: int) -> None:
        self.params.register(
            f"{PREFIX}{name}/weight", glorot_uniform(rng, fan_in, fan_out, (fan_in, fan_out))
        )
        self.params.register(f"{PREFIX}{name}/bias", np.zeros(fan_out))

    def _apply_linear(self, x: Tensor, name: str) -> Tensor:
        return x @ self.params.get(f"{PREFIX}{name}/weight") + self.params.get(f"{PREFIX}{name}/bias")

    def freeze(self) -> None:
        self.params.freeze(PREFIX)

    def unfreeze(self) -> None:
        self.params.unfreeze(PREFIX)

    @property
    def is_frozen(self) -> bool:
        return self.params.is_frozen(PREFIX)

    def hyperparameters(self) -> Dict[str, float]:
        """Parâmetros de cronograma e de forma registrados em checkpoints e relatórios."""
        return {
            "num_steps": self.schedule.num_steps,
            "k": self.schedule.k,
            "alpha_min": self.schedule.alpha_min,
            "alpha_max": self.schedule.alpha_max,
            "diff_len": self.diff_len,
            "latent_dim": self.latent_dim,
            "vae_weight": self.vae_weight,
            "target_step": self.target_step,
        }

    # VAE

    def vae_encode(
        self,
        s: Tensor,
        sample: bool = True,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[VaePosterior, LatentSequence]:
        """
        MLP por linha produzindo (μ, log σ²) e o latente reparametrizado.

        Args:
            s: Sequência B x L x D
            sample: False retorna z = μ (modo avaliação)
            rng: Gerador de ε

        Returns:
            (VaePosterior, LatentSequence)
        """
        hidden = T.gelu(self._apply_linear(s, "phi/fc1"))
        mu = self._apply_linear(hidden, "phi/mu")
        log_var = self._apply_linear(hidden, "phi/log_var")
        if sample:
            generator = rng if rng is not None else np.random.default_rng()
            eps = Tensor(generator.standard_normal(mu.shape))
            z = mu + T.exp(log_var * 0.5) * eps
        else:
            z = mu
        latent = LatentSequence(z=z, diff_len=self.diff_len, orientation=self.orientation)
        return VaePosterior(mu=mu, log_var=log_var), latent

    def vae_decode(self, z: Union[LatentSequence, Tensor]) -> Tensor:
        """MLP por linha d -> D."""
        values = z.z if isinstance(z, LatentSequence) else z
        hidden = T.gelu(self._apply_linear(values, "psi/fc1"))
        return self._apply_linear(hidden, "psi/fc2")

    def vae_loss(self, s: Tensor, rng: Optional[np.random.Generator] = None) -> Tensor:
        """MSE(s, decode(z)) + KL(q_φ(z|s) ‖ N(0, I)) com uma amostra."""
        loss, _ = self._vae_terms(s, rng)
        return loss

    def _vae_terms(
        self, s: Tensor, rng: Optional[np.random.Generator]
    ) -> Tuple[Tensor, LatentSequence]:
        posterior, latent = self.vae_encode(s, sample=True, rng=rng)
        reconstruction = T.mse(self.vae_decode(latent), s)
        return reconstruction + gaussian_kl(posterior), latent

    # Difusão

    def denoise_predict(self, x_n_diff: Tensor, x0_cond: Tensor, n: StepIndex) -> Tensor:
        """
        f_θ: MLP sobre [x_n^diff achatado ‖ x_0^cond achatado ‖ embedding(n)].

        Args:
            x_n_diff: B x diff x d
            x0_cond: B x cond x d
            n: Passo (escalar ou um por exemplo)

        Returns:
            Predição de x_0^diff (B x diff x d)
        """
        x_n_diff = x_n_diff if isinstance(x_n_diff, Tensor) else Tensor(x_n_diff)
        x0_cond = x0_cond if isinstance(x0_cond, Tensor) else Tensor(x0_cond)
        batch = x_n_diff.shape[0]
        d = self.latent_dim
        expected_diff = (batch, self.diff_len, d)
        expected_cond = (batch, self.num_neighbors - self.diff_len, d)
        if x_n_diff.shape != expected_diff:
            raise ShapeMismatchError("denoise", x_n_diff.shape, expected_diff)
        if x0_cond.shape != expected_cond:
            raise ShapeMismatchError("denoise", x0_cond.shape, expected_cond)

        steps = np.broadcast_to(np.asarray(n), (batch,))
        self.schedule.check_step(steps)
        inputs = T.concat(
            [
                x_n_diff.reshape(batch, -1),
                x0_cond.reshape(batch, -1),
                Tensor(step_embedding(steps)),
            ]
        )
        hidden = T.gelu(self._apply_linear(inputs, "theta/fc1"))
        hidden = T.gelu(self._apply_linear(hidden, "theta/fc2"))
        return self._apply_linear(hidden, "theta/out").reshape(expected_diff)

    def diffusion_loss(
        self,
        latent: LatentSequence,
        rng: np.random.Generator,
        steps: Optional[np.ndarray] = None,
        noise: Optional[np.ndarray] = None,
    ) -> Tensor:
        """
        ‖x_0^diff - f_θ(x_n^diff, x_0^cond, n)‖² somado por exemplo e promediado no lote,
        com n ~ Uniforme{1..N} por exemplo.

        Args:
            latent: x_0 particionado
            rng: Gerador para n e ε
            steps: Passos fixos por exemplo (opcional)
            noise: ε fixo (opcional)

        Returns:
            Loss escalar
        """
        x0_diff = latent.diff_part()
        x0_cond = latent.cond_part()
        batch = x0_diff.shape[0]
        if steps is None:
            steps = rng.integers(1, self.schedule.num_steps + 1, size=batch)
        if noise is None:
            noise = rng.standard_normal(x0_diff.shape)
        x_n = forward_diffuse(x0_diff, steps, self.schedule, noise=noise)
        prediction = self.denoise_predict(x_n, x0_cond, steps)
        return T.square(x0_diff - prediction).sum(axis=(1, 2)).mean()

    def reverse_sample(
        self,
        latent: LatentSequence,
        rng: np.random.Generator,
        target_step: Optional[int] = None,
    ) -> np.ndarray:
        """
        Ruído parcial até o passo alvo e cadeia reversa condicionada em x_0^cond.

        Args:
            latent: x_0 particionado
            rng: Gerador para o ruído direto e dos passos reversos
            target_step: Passo de partida (padrão: o do aumentador)

        Returns:
            Latente regenerado B x L x d (linhas de condição bit-idênticas)
        """
        target = self.target_step if target_step is None else target_step
        with no_grad():
            x0_diff = latent.diff_part().data
            x0_cond = latent.cond_part().data
            x = forward_diffuse(x0_diff, target, self.schedule, rng=rng).data
            for n in range(target, 0, -1):
                x0_hat = self.denoise_predict(Tensor(x), Tensor(x0_cond), n).data
                x = posterior_step(x, x0_hat, n, self.schedule, rng)
        return latent.combine(x, x0_cond)

    # Objetivo combinado e augmentação

    def loss_terms(self, s: Tensor, rng: np.random.Generator) -> Dict[str, Tensor]:
        """Termos {diffusion, vae} do objetivo conforme a variante."""
        terms: Dict[str, Tensor] = {}
        if self.variant == "no_vae":
            latent = LatentSequence(z=s, diff_len=self.diff_len, orientation=self.orientation)
        else:
            terms["vae"], latent = self._vae_terms(s, rng)
        if self.uses_diffusion:
            terms["diffusion"] = self.diffusion_loss(latent, rng)
        return terms

    def conda_loss(
        self,
        s: Union[SequenceEmbedding, Tensor],
        rng: np.random.Generator,
        enforce_freeze: bool = True,
    ) -> Tensor:
        """
        L_diffusion + λ·L_vae com o modelo CTDG congelado.

        Args:
            s: Sequências do codificador CTDG congelado
            rng: Gerador para amostras do VAE, passos e ruído
            enforce_freeze: Exige "ctdg/..." congelado (desligado só na ablação ponta a ponta)

        Returns:
            Loss escalar
        """
        if enforce_freeze and not self.params.is_frozen("ctdg/"):
            raise FreezeContractError("Treino do Conda exige o modelo CTDG congelado")
        values = s.values if isinstance(s, SequenceEmbedding) else s
        terms = self.loss_terms(values, rng)
        total = None
        if "diffusion" in terms:
            total = terms["diffusion"]
        if "vae" in terms:
            weighted = terms["vae"] * self.vae_weight
            total = weighted if total is None else total + weighted
        return total

    def magnitude_report(self, s: Tensor, rng: np.random.Generator) -> Dict[str, float]:
        """Valores dos dois termos e sua razão, para calibrar λ."""
        with no_grad():
            terms = {name: value.item() for name, value in self.loss_terms(s, rng).items()}
        if "vae" in terms and "diffusion" in terms and terms["vae"] > 0:
            terms["ratio"] = terms["diffusion"] / (self.vae_weight * terms["vae"])
        return terms

    def augment(self, s: Union[SequenceEmbedding, Tensor], rng: np.random.Generator) -> Tensor:
        """
        Gera ŝ: codifica (z = μ), regenera a parte difundida e decodifica.

        Args:
            s: Sequências B x L x D
            rng: Gerador dedicado à augmentação

        Returns:
            Tensor ŝ sem gradiente (B x L x D)
        """
        values = s.values if isinstance(s, SequenceEmbedding) else s
        with no_grad():
            values = Tensor(values.data)
            if self.variant == "no_vae":
                latent = LatentSequence(z=values, diff_len=self.diff_len, orientation=self.orientation)
                return Tensor(self.reverse_sample(latent, rng))
            if self.variant == "no_diffusion":
                _, latent = self.vae_encode(values, sample=True, rng=rng)
                return Tensor(self.vae_decode(latent).data)
            _, latent = self.vae_encode(values, sample=False)
            regenerated = self.reverse_sample(latent, rng)
            return Tensor(self.vae_decode(Tensor(regenerated)).data)
