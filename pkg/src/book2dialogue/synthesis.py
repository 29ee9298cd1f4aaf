"""Dialogue synthesis strategies over a single textbook section.

Four strategies share one entry point:

* persona-dual   — two chat instances role-play student and teacher; the
  student sees only the partial formatting view for its info level.
* persona-single — one chat call produces a whole labeled transcript.
* inpainting     — teacher answers are the section's sentences copied
  verbatim in order; student questions are infilled before each sentence.
* qgqa           — a question generator sees title+summary only; the answer
  is an extractive span from the section plus the rendered history.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .corpus import (InfoLevel, Section, context_for_section,
                     select_context)
from .dialogue import (Dialogue, DialogueMeta, Strategy, append_pair,
                       parse_transcript, render_history, truncate_pairs)
from .errors import ConfigError, DegenerateTurn, EmptySection
from .prompts import (build_infill_prompt, build_qg_prompt,
                      build_single_instance_prompt, build_student_prompt,
                      build_teacher_prompt)
from .providers import ChatMessage, GenerationParams, ProviderSet
from .text import segment_sentences

DEFAULT_MAX_TURNS = 12

STUDENT_PARAMS = GenerationParams(temperature=0.7, max_output_tokens=256)
TEACHER_PARAMS = GenerationParams(temperature=0.7, max_output_tokens=512)


@dataclass(frozen=True)
class SynthesisConfig:
    strategy: Strategy = Strategy.PERSONA_DUAL
    info_level: InfoLevel = InfoLevel.HIGH
    max_turns: int = DEFAULT_MAX_TURNS
    params: GenerationParams = field(default_factory=GenerationParams)
    seed: int = 0

    def __post_init__(self):
        if self.max_turns % 2 != 0 or self.max_turns < 2:
            raise ConfigError(f"max_turns must be even and >= 2, got {self.max_turns}")
        if (self.strategy is Strategy.PERSONA_DUAL
                and self.info_level is InfoLevel.FULL):
            raise ConfigError(
                "persona-dual requires info_level in {low, medium, high}; "
                "full defeats the information asymmetry")

    @property
    def effective_info_level(self) -> InfoLevel:
        # Single-instance and inpainting hand the whole section to one model.
        if self.strategy in (Strategy.PERSONA_SINGLE, Strategy.INPAINTING):
            return InfoLevel.FULL
        return self.info_level


def _chat(providers: ProviderSet, prompt: str, params: GenerationParams) -> str:
    return providers.chat_complete([ChatMessage(role="user", content=prompt)],
                                   params)


def _seeded(params: GenerationParams, seed: int) -> GenerationParams:
    return replace(params, seed=seed)


def synthesize(section: Section, config: SynthesisConfig,
               providers: ProviderSet, *,
               student_prompt_audit: list[str] | None = None) -> Dialogue:
    """Generate one dialogue for ``section`` under ``config``.

    ``student_prompt_audit``, when given, collects every built student
    prompt so callers can verify the information asymmetry.
    """
    if not section.content.strip():
        raise EmptySection(f"section {section.id!r} has empty content")

    if config.strategy is Strategy.PERSONA_DUAL:
        dialogue = _persona_dual(section, config, providers, student_prompt_audit)
    elif config.strategy is Strategy.PERSONA_SINGLE:
        dialogue = _persona_single(section, config, providers)
    elif config.strategy is Strategy.INPAINTING:
        dialogue = _inpainting(section, config, providers)
    elif config.strategy is Strategy.QGQA:
        dialogue = _qgqa(section, config, providers, student_prompt_audit)
    else:  # pragma: no cover
        raise ConfigError(f"unknown strategy: {config.strategy}")

    if not dialogue.pairs:
        raise DegenerateTurn(f"no complete pair produced for section {section.id!r}")
    dialogue = truncate_pairs(dialogue, config.max_turns)
    meta = DialogueMeta(
        book_id=dialogue.meta.book_id,
        chapter_index=dialogue.meta.chapter_index,
        section_id=section.id,
        strategy=config.strategy.value,
        info_level=config.effective_info_level.value,
        seed=config.seed,
        dialogue_id=f"{section.id}:{config.strategy.value}",
    )
    return replace(dialogue, meta=meta)


def _persona_dual(section: Section, config: SynthesisConfig,
                  providers: ProviderSet,
                  audit: list[str] | None) -> Dialogue:
    context = context_for_section(section, config.info_level)
    dialogue = Dialogue()
    rounds = config.max_turns // 2
    for turn in range(rounds):
        student_prompt = build_student_prompt(context, dialogue)
        if audit is not None:
            audit.append(student_prompt)
        question = _chat(providers, student_prompt,
                         _seeded(STUDENT_PARAMS, config.seed + 2 * turn)).strip()
        if not question:
            break
        teacher_prompt = build_teacher_prompt(section, question, dialogue)
        answer = _chat(providers, teacher_prompt,
                       _seeded(TEACHER_PARAMS, config.seed + 2 * turn + 1)).strip()
        if not answer:
            break
        dialogue = append_pair(dialogue, question, answer)
    return dialogue


def _persona_single(section: Section, config: SynthesisConfig,
                    providers: ProviderSet) -> Dialogue:
    prompt = build_single_instance_prompt(section)
    transcript = _chat(providers, prompt, _seeded(TEACHER_PARAMS, config.seed))
    dialogue = Dialogue()
    for question, answer in parse_transcript(transcript):
        dialogue = append_pair(dialogue, question, answer)
    return dialogue


def _inpainting(section: Section, config: SynthesisConfig,
                providers: ProviderSet) -> Dialogue:
    # Topic seed shown as turn-zero context, never emitted as a pair.
    seed_line = (f"I am a teacher and can answer questions about "
                 f"{section.formatting.title}.")
    sentences = segment_sentences(section.content)
    dialogue = Dialogue()
    cap = config.max_turns // 2
    for k, sentence in enumerate(sentences[:cap]):
        prompt = build_infill_prompt(seed_line, dialogue, sentence)
        question = _chat(providers, prompt,
                         _seeded(STUDENT_PARAMS, config.seed + k)).strip()
        if not question:
            break
        dialogue = append_pair(dialogue, question, sentence)
    return dialogue


def _qgqa(section: Section, config: SynthesisConfig, providers: ProviderSet,
          audit: list[str] | None) -> Dialogue:
    context = select_context(section.formatting, section.content, InfoLevel.MEDIUM)
    dialogue = Dialogue()
    rounds = config.max_turns // 2
    for turn in range(rounds):
        prompt = build_qg_prompt(context, dialogue)
        if audit is not None:
            audit.append(prompt)
        question = _chat(providers, prompt,
                         _seeded(STUDENT_PARAMS, config.seed + turn)).strip()
        if not question:
            break
        qa_context = section.content
        history = render_history(dialogue)
        if history:
            qa_context = qa_context + "\n" + history
        result = providers.extractive_qa(question, qa_context)
        if not result.answer:
            break
        dialogue = append_pair(dialogue, question, result.answer)
    return dialogue
