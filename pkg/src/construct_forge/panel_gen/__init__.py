"""Panel sources: live LLM generation and the planted synthetic generator."""

from .llm import GenerationConfig, LLMTranscript, TranscriptLog, call_llm, generate_llm_panel, replay_transcripts
from .parse import NoRowsParsed, ParseResult, parse_table
from .synthetic import PlantedModel, builtin_planted, generate_synthetic, implied_correlation, load_planted
from .templates import PromptTemplate, render_prompt, study_template

__all__ = [
    "GenerationConfig", "LLMTranscript", "TranscriptLog", "call_llm", "generate_llm_panel",
    "replay_transcripts", "NoRowsParsed", "ParseResult", "parse_table", "PlantedModel",
    "builtin_planted", "generate_synthetic", "implied_correlation", "load_planted",
    "PromptTemplate", "render_prompt", "study_template",
]
