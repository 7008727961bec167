"""Quality rewards (back-translation fidelity, fluency judge, GenRM) and their clients."""

from .clients import (
    CharNgramEmbedder,
    ChatClient,
    ChatResponse,
    EmbeddingClient,
    FifoLimiter,
    HTTPChatClient,
    HTTPEmbeddingClient,
    ManagedChatClient,
    ManagedEmbeddingClient,
    RetryPolicy,
    ScriptedChatClient,
    ScriptedEmbeddingClient,
    UsageLedger,
)
from .judges import (
    FidelityConfig,
    GenRMOutput,
    QualityClients,
    QualityConfig,
    QualityInputs,
    back_translate,
    cosine_similarity,
    fidelity_reward,
    fluency_reward,
    genrm_reward,
    load_prompt,
    parse_fluency_verdict,
    parse_genrm_output,
    prompt_sha256,
    quality_reward,
)
