"""Textbook-to-dialogue synthesis and evaluation toolkit."""
from importlib import resources

from .corpus import (Book, Chapter, FormattingInfo, InfoLevel, Section,
                     StudentContext, book_to_dict, context_for_section,
                     parse_textbook, select_context)
from .dialogue import (Dialogue, DialogueMeta, QAPair, Strategy, append_pair,
                       parse_transcript, read_jsonl, render_history,
                       truncate_pairs, write_jsonl)
from .metrics import (MetricReport, answer_relevance, answerability, bf1,
                      coherence, corpus_bleu, evaluate_dialogue,
                      extractive_stats, informativeness, qfactscore)
from .analytics import (AnnotationRecord, CorrelationResult, DatasetStats,
                        bigram_entropy, dataset_stats, length_stats, pearson,
                        question_type_stats, spearman)
from .providers import (ChatMessage, EmbeddingVector, GenerationParams,
                        HttpEndpoints, HttpProviderSet, MockProviderSet,
                        ProviderSet, QAResult)
from .synthesis import SynthesisConfig, synthesize
from .text import segment_sentences, tokenize

__version__ = "0.1.0"


def bundled_minibook_path():
    """Path to the bundled mini-textbook fixture."""
    return resources.files("book2dialogue.data") / "mini_textbook.json"


def load_bundled_minibook() -> Book:
    return parse_textbook(bundled_minibook_path().read_text(encoding="utf-8"))
