"""Method variants and their configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import StrEnum

from ef21sim.core.compression import CompressorSpec
from ef21sim.core.exceptions import ParameterError
from ef21sim.core.problems import Regularizer


class Variant(StrEnum):
    EF21 = "ef21"
    EF21_SGD = "ef21_sgd"
    EF21_PAGE = "ef21_page"
    EF21_PP = "ef21_pp"
    EF21_BC = "ef21_bc"
    EF21_HB = "ef21_hb"
    EF21_PROX = "ef21_prox"


class InitKind(StrEnum):
    EXACT_GRAD = "exact_grad"
    COMPRESSED_GRAD = "compressed_grad"
    ZERO = "zero"


@dataclass(frozen=True)
class MethodConfig:
    """One method variant with its worker compressor, stepsize and variant parameters.

    Only the fields of the selected variant are consulted: ``batch_sizes`` for the
    stochastic and PAGE variants, ``page_probabilities``/``page_shared_coin`` for PAGE,
    ``participation`` for partial participation, ``master_compressor`` for
    bidirectional compression, ``momentum`` for heavy ball and ``regularizer`` for
    the proximal variant.
    """

    variant: Variant
    compressor: CompressorSpec
    gamma: float = 0.0
    init: InitKind = InitKind.EXACT_GRAD
    seed: int = 0
    batch_sizes: tuple[int, ...] | None = None
    page_probabilities: tuple[float, ...] | None = None
    page_shared_coin: bool = False
    participation: float = 1.0
    master_compressor: CompressorSpec | None = None
    momentum: float = 0.0
    regularizer: Regularizer = field(default_factory=Regularizer.none)

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "init", InitKind(self.init))
        if self.batch_sizes is not None:
            object.__setattr__(self, "batch_sizes", tuple(int(t) for t in self.batch_sizes))
        if self.page_probabilities is not None:
            object.__setattr__(self, "page_probabilities", tuple(float(p) for p in self.page_probabilities))
        self._validate()

    def _validate(self) -> None:
        if not self.gamma >= 0.0:
            raise ParameterError(f"stepsize must be non-negative, got {self.gamma}", name="gamma")
        if self.seed < 0:
            raise ParameterError(f"seed must be non-negative, got {self.seed}", name="seed")

        variant = self.variant
        if variant in (Variant.EF21_SGD, Variant.EF21_PAGE):
            if not self.batch_sizes or any(t < 1 for t in self.batch_sizes):
                raise ParameterError(f"{variant} requires positive batch sizes", name="batch_sizes")
        if variant == Variant.EF21_PAGE:
            probs = self.page_probabilities
            if not probs or any(not 0.0 < p <= 1.0 for p in probs):
                raise ParameterError("PAGE probabilities must lie in (0, 1]", name="page_probabilities")
            if self.batch_sizes is not None and len(probs) != len(self.batch_sizes):
                raise ParameterError("PAGE needs one probability per client", name="page_probabilities")
            if self.page_shared_coin and len(set(probs)) != 1:
                raise ParameterError("a shared PAGE coin needs one common probability", name="page_probabilities")
        if variant == Variant.EF21_PP and not 0.0 < self.participation <= 1.0:
            raise ParameterError(f"participation must lie in (0, 1], got {self.participation}", name="participation")
        if variant == Variant.EF21_BC:
            if self.master_compressor is None:
                raise ParameterError("bidirectional compression requires a master compressor", name="master_compressor")
            if self.master_compressor.dimension != self.compressor.dimension:
                raise ParameterError("master and worker compressors disagree on the dimension", name="master_compressor")
        if variant == Variant.EF21_HB and not 0.0 <= self.momentum < 1.0:
            raise ParameterError(f"momentum must lie in [0, 1), got {self.momentum}", name="momentum")

    @property
    def dimension(self) -> int:
        return self.compressor.dimension

    def with_gamma(self, gamma: float) -> MethodConfig:
        return replace(self, gamma=gamma)

    def describe(self) -> str:
        parts = [str(self.variant), self.compressor.describe()]
        if self.variant == Variant.EF21_SGD:
            parts.append(f"tau={list(self.batch_sizes or ())}")
        elif self.variant == Variant.EF21_PAGE:
            coin = "shared" if self.page_shared_coin else "local"
            parts.append(f"tau={list(self.batch_sizes or ())} coin={coin}")
        elif self.variant == Variant.EF21_PP:
            parts.append(f"p={self.participation}")
        elif self.variant == Variant.EF21_BC:
            assert self.master_compressor is not None
            parts.append(f"master={self.master_compressor.describe()}")
        elif self.variant == Variant.EF21_HB:
            parts.append(f"eta={self.momentum}")
        elif self.variant == Variant.EF21_PROX:
            parts.append(f"r={self.regularizer.describe()}")
        return " ".join(parts)


__all__ = ["InitKind", "MethodConfig", "Variant"]
